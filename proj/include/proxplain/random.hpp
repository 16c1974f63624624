#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace proxplain {

using Rng = std::mt19937_64;

// SplitMix64 finalizer. Portable across standard libraries, which matters
// for anything that has to be mirrored by an out-of-process model server.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Independent stream seed for item `index` of a run seeded with `master`.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(master) ^ (index + 0x632BE59BD9B4E019ULL));
}

// Uniform double in [-1, 1) from a 64-bit state word.
constexpr double unit_symmetric(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-52 - 1.0;
}

// FNV-1a over bytes; stable token hashing for the toy embedding table.
inline std::uint64_t fnv1a(std::string_view bytes) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace proxplain
