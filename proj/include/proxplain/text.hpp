#pragma once

#include <compare>
#include <cstddef>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "proxplain/error.hpp"

namespace proxplain {

// An ordered list of whitespace-free word tokens. The unit of text
// everywhere in the library.
class TokenSequence {
 public:
  TokenSequence() = default;

  explicit TokenSequence(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    for (const auto& t : tokens_) check_token(t);
  }

  TokenSequence(std::initializer_list<std::string> tokens)
      : TokenSequence(std::vector<std::string>(tokens)) {}

  // Splits on runs of spaces, tabs and line breaks.
  static TokenSequence parse(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && is_space(text[i])) ++i;
      std::size_t j = i;
      while (j < text.size() && !is_space(text[j])) ++j;
      if (j > i) tokens.emplace_back(text.substr(i, j - i));
      i = j;
    }
    TokenSequence out;
    out.tokens_ = std::move(tokens);
    return out;
  }

  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }
  const std::string& operator[](std::size_t i) const noexcept { return tokens_[i]; }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  auto begin() const noexcept { return tokens_.begin(); }
  auto end() const noexcept { return tokens_.end(); }

  bool contains(std::string_view token) const noexcept {
    for (const auto& t : tokens_) {
      if (t == token) return true;
    }
    return false;
  }

  // Space-joined form used on the wire and in reports.
  std::string str() const {
    std::string out;
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      if (i) out += ' ';
      out += tokens_[i];
    }
    return out;
  }

  TokenSequence inserted(std::size_t gap, const std::string& token) const {
    check_token(token);
    if (gap > tokens_.size()) throw InvalidArgument("insertion gap out of range");
    auto copy = tokens_;
    copy.insert(copy.begin() + static_cast<std::ptrdiff_t>(gap), token);
    return from_checked(std::move(copy));
  }

  TokenSequence replaced(std::size_t position, const std::string& token) const {
    check_token(token);
    if (position >= tokens_.size()) throw InvalidArgument("replacement position out of range");
    auto copy = tokens_;
    copy[position] = token;
    return from_checked(std::move(copy));
  }

  TokenSequence without_position(std::size_t position) const {
    auto copy = tokens_;
    copy.erase(copy.begin() + static_cast<std::ptrdiff_t>(position));
    return from_checked(std::move(copy));
  }

  TokenSequence without_token(std::string_view token) const {
    std::vector<std::string> kept;
    for (const auto& t : tokens_) {
      if (t != token) kept.push_back(t);
    }
    return from_checked(std::move(kept));
  }

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
  friend auto operator<=>(const TokenSequence&, const TokenSequence&) = default;

 private:
  static bool is_space(char c) noexcept {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
  }

  static void check_token(const std::string& t) {
    if (t.empty()) throw InvalidArgument("empty token");
    for (char c : t) {
      if (is_space(c)) throw InvalidArgument("token contains whitespace: '" + t + "'");
    }
  }

  static TokenSequence from_checked(std::vector<std::string> tokens) {
    TokenSequence out;
    out.tokens_ = std::move(tokens);
    return out;
  }

  std::vector<std::string> tokens_;
};

// Reads one pre-tokenized text per line; blank lines are skipped.
inline std::vector<TokenSequence> read_token_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open file: " + path);
  std::vector<TokenSequence> lines;
  std::string line;
  while (std::getline(in, line)) {
    auto seq = TokenSequence::parse(line);
    if (!seq.empty()) lines.push_back(std::move(seq));
  }
  return lines;
}

}  // namespace proxplain
