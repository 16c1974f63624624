#pragma once

// Template-generated review titles and a matching sentiment lexicon. Only
// meant as fixture data for the toy backend.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "proxplain/random.hpp"
#include "proxplain/text.hpp"
#include "proxplain/toy_models.hpp"

namespace proxplain::toy {

inline Lexicon default_lexicon() {
  return {
      {"great", 2.0},       {"excellent", 2.4}, {"amazing", 2.2},   {"awesome", 2.1},   {"good", 1.2},
      {"nice", 1.0},        {"delicious", 1.8}, {"friendly", 1.2},  {"fantastic", 2.2}, {"perfect", 2.0},
      {"best", 2.2},        {"love", 2.0},      {"loved", 2.0},     {"recommend", 1.0}, {"definitely", 1.5},
      {"fresh", 0.9},       {"tasty", 1.4},     {"clean", 0.8},     {"fast", 0.7},      {"helpful", 1.0},
      {"highly", 1.2},      {"terrible", -2.4}, {"awful", -2.3},    {"bad", -1.6},      {"horrible", -2.4},
      {"rude", -1.8},       {"bland", -1.2},    {"disappointing", -1.9}, {"worst", -2.5}, {"not", -2.0},
      {"never", -1.4},      {"avoid", -2.0},    {"overpriced", -1.3}, {"slow", -1.0},   {"cold", -0.8},
      {"dirty", -1.5},      {"mediocre", -1.0}, {"poor", -1.6},     {"waste", -1.8},    {"hate", -2.0},
  };
}

namespace detail {

constexpr std::array<std::string_view, 16> kPositiveAdjectives = {
    "great", "excellent", "amazing", "awesome", "good",  "nice",  "delicious", "friendly",
    "fantastic", "perfect", "best", "fresh", "tasty", "clean", "fast", "helpful"};
constexpr std::array<std::string_view, 14> kNegativeAdjectives = {
    "terrible", "awful", "bad", "horrible", "rude", "bland", "disappointing",
    "worst", "overpriced", "slow", "cold", "dirty", "mediocre", "poor"};
constexpr std::array<std::string_view, 15> kNouns = {
    "food", "service", "place", "staff", "pizza", "coffee", "prices", "experience",
    "burger", "atmosphere", "sushi", "breakfast", "drinks", "location", "restaurant"};
constexpr std::array<std::string_view, 6> kAdverbs = {"really", "very", "so", "pretty", "super", "just"};
constexpr std::array<std::string_view, 5> kRecommendAdverbs = {"definitely", "not", "never", "highly", "totally"};
constexpr std::array<std::string_view, 4> kVerbs = {"love", "loved", "avoid", "hate"};

template <std::size_t N>
std::string pick(const std::array<std::string_view, N>& pool, Rng& rng) {
  std::uniform_int_distribution<std::size_t> d(0, N - 1);
  return std::string(pool[d(rng)]);
}

inline std::string adjective(Rng& rng) {
  std::bernoulli_distribution positive(0.5);
  return positive(rng) ? pick(kPositiveAdjectives, rng) : pick(kNegativeAdjectives, rng);
}

}  // namespace detail

// One review title drawn from a fixed set of templates.
inline TokenSequence generate_review(Rng& rng) {
  using namespace detail;
  std::uniform_int_distribution<int> which(0, 9);
  std::vector<std::string> t;
  switch (which(rng)) {
    case 0:
      t = {adjective(rng), pick(kNouns, rng), "."};
      break;
    case 1:
      t = {pick(kAdverbs, rng), adjective(rng), pick(kNouns, rng), "."};
      break;
    case 2:
      t = {"the", pick(kNouns, rng), "was", adjective(rng), "."};
      break;
    case 3:
      t = {adjective(rng), pick(kNouns, rng), "and", adjective(rng), pick(kNouns, rng), "."};
      break;
    case 4:
      t = {"would", pick(kRecommendAdverbs, rng), "recommend", "."};
      break;
    case 5:
      t = {adjective(rng), pick(kNouns, rng), ",", adjective(rng), pick(kNouns, rng), "."};
      break;
    case 6:
      t = {"not", adjective(rng), "."};
      break;
    case 7:
      t = {pick(kVerbs, rng), "this", pick(kNouns, rng), "!"};
      break;
    case 8:
      t = {adjective(rng), pick(kNouns, rng), "but", adjective(rng), pick(kNouns, rng), "."};
      break;
    default:
      t = {pick(kNouns, rng), "was", pick(kAdverbs, rng), adjective(rng), "."};
      break;
  }
  return TokenSequence(std::move(t));
}

inline std::vector<TokenSequence> generate_reviews(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TokenSequence> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(generate_review(rng));
  return out;
}

}  // namespace proxplain::toy
