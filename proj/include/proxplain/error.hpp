#pragma once

#include <stdexcept>
#include <string>

namespace proxplain {

// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when an input violates a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace proxplain
