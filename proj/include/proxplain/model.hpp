#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "proxplain/error.hpp"
#include "proxplain/latent.hpp"
#include "proxplain/text.hpp"

namespace proxplain {

enum class Label { positive, negative };

constexpr Label opposite(Label l) noexcept {
  return l == Label::positive ? Label::negative : Label::positive;
}

constexpr std::string_view to_string(Label l) noexcept {
  return l == Label::positive ? "positive" : "negative";
}

// Binary class probabilities <p_pos, p_neg>.
class ConfidenceVector {
 public:
  ConfidenceVector() = default;

  // p_neg is derived as 1 - p_pos so the pair sums to one.
  static ConfidenceVector from_positive(double p_pos) {
    if (!(p_pos >= 0.0 && p_pos <= 1.0)) throw InvalidArgument("probability outside [0, 1]");
    ConfidenceVector c;
    c.p_pos_ = p_pos;
    c.p_neg_ = 1.0 - p_pos;
    return c;
  }

  // Accepts pairs from external models; they must sum to one within 1e-6
  // (the wire format carries 9 significant digits).
  static ConfidenceVector from_pair(double p_pos, double p_neg) {
    if (!(p_pos >= 0.0 && p_pos <= 1.0 && p_neg >= 0.0 && p_neg <= 1.0)) {
      throw InvalidArgument("probability outside [0, 1]");
    }
    if (std::abs(p_pos + p_neg - 1.0) > 1e-6) throw InvalidArgument("confidence pair does not sum to 1");
    return from_positive(p_pos);
  }

  double p_pos() const noexcept { return p_pos_; }
  double p_neg() const noexcept { return p_neg_; }
  double of(Label l) const noexcept { return l == Label::positive ? p_pos_ : p_neg_; }

  // Argmax; a tie goes to positive.
  Label label() const noexcept { return p_pos_ >= p_neg_ ? Label::positive : Label::negative; }

  friend bool operator==(const ConfidenceVector&, const ConfidenceVector&) = default;

 private:
  double p_pos_ = 0.5;
  double p_neg_ = 0.5;
};

class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual std::size_t dimension() const = 0;
  virtual LatentVector encode(const TokenSequence& text) const = 0;

  virtual std::vector<LatentVector> encode_batch(std::span<const TokenSequence> texts) const {
    std::vector<LatentVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(encode(t));
    return out;
  }
};

class Decoder {
 public:
  virtual ~Decoder() = default;
  virtual TokenSequence decode(const LatentVector& z) const = 0;

  virtual std::vector<TokenSequence> decode_batch(std::span<const LatentVector> zs) const {
    std::vector<TokenSequence> out;
    out.reserve(zs.size());
    for (const auto& z : zs) out.push_back(decode(z));
    return out;
  }

  // False when repeated decodes of one vector may differ.
  virtual bool deterministic() const { return true; }
};

// The classifier under explanation. Only its confidences are observable.
class BlackBox {
 public:
  virtual ~BlackBox() = default;
  virtual ConfidenceVector predict(const TokenSequence& text) const = 0;

  virtual std::vector<ConfidenceVector> predict_batch(std::span<const TokenSequence> texts) const {
    std::vector<ConfidenceVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(predict(t));
    return out;
  }
};

// Non-owning bundle of the three collaborators a run needs.
struct Models {
  const Encoder& encoder;
  const Decoder& decoder;
  const BlackBox& black_box;
};

struct CorpusEntry {
  TokenSequence text;
  LatentVector latent;
  Label label;
};

// Texts available for landmark seeding, with latent vectors and black-box
// labels computed once at load.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<CorpusEntry> entries) : entries_(std::move(entries)) {}

  static Corpus build(std::vector<TokenSequence> texts, const Encoder& encoder, const BlackBox& black_box) {
    for (const auto& t : texts) {
      if (t.empty()) throw InvalidArgument("corpus contains an empty text");
    }
    auto latents = encoder.encode_batch(texts);
    auto scores = black_box.predict_batch(texts);
    std::vector<CorpusEntry> entries;
    entries.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
      entries.push_back({std::move(texts[i]), std::move(latents[i]), scores[i].label()});
    }
    return Corpus(std::move(entries));
  }

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const CorpusEntry& operator[](std::size_t i) const noexcept { return entries_[i]; }
  const std::vector<CorpusEntry>& entries() const noexcept { return entries_; }

  std::size_t count(Label l) const noexcept {
    return static_cast<std::size_t>(
        std::count_if(entries_.begin(), entries_.end(), [l](const CorpusEntry& e) { return e.label == l; }));
  }

  // Distinct tokens in order of first appearance.
  std::vector<std::string> vocabulary() const {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& e : entries_) {
      for (const auto& t : e.text) {
        if (seen.insert(t).second) out.push_back(t);
      }
    }
    return out;
  }

 private:
  std::vector<CorpusEntry> entries_;
};

// Tokens whose one-token text the black box rates most confidently as the
// class opposite to `cls`, best first; ties broken lexicographically.
inline std::vector<std::string> strong_opposite_words(const BlackBox& black_box,
                                                      std::span<const std::string> vocabulary, Label cls,
                                                      std::size_t count) {
  if (count == 0 || vocabulary.empty()) return {};
  std::vector<TokenSequence> probes;
  probes.reserve(vocabulary.size());
  for (const auto& w : vocabulary) probes.push_back(TokenSequence{w});
  const auto scores = black_box.predict_batch(probes);
  const Label target = opposite(cls);
  std::vector<std::size_t> order(vocabulary.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double sa = scores[a].of(target);
    const double sb = scores[b].of(target);
    if (sa != sb) return sa > sb;
    return vocabulary[a] < vocabulary[b];
  });
  std::vector<std::string> out;
  const std::size_t n = std::min(count, order.size());
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(vocabulary[order[i]]);
  return out;
}

}  // namespace proxplain
