#pragma once

// Deterministic in-process models for desk-scale runs and tests. None of
// them is trained; they exist so that every part of the pipeline can be
// exercised without an external generative model or classifier.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <system_error>
#include <unordered_map>
#include <utility>
#include <vector>

#include "proxplain/error.hpp"
#include "proxplain/latent.hpp"
#include "proxplain/model.hpp"
#include "proxplain/random.hpp"
#include "proxplain/text.hpp"

namespace proxplain::toy {

inline double logistic(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

using Lexicon = std::map<std::string, double>;

// Lines of `token<TAB>weight`; blank lines and lines starting with '#' are
// skipped.
inline Lexicon read_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open lexicon file: " + path);
  Lexicon lexicon;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw Error(path + ":" + std::to_string(line_no) + ": expected token<TAB>weight");
    }
    try {
      std::size_t used = 0;
      const double w = std::stod(line.substr(tab + 1), &used);
      lexicon[line.substr(0, tab)] = w;
    } catch (const std::exception&) {
      throw Error(path + ":" + std::to_string(line_no) + ": bad weight");
    }
  }
  return lexicon;
}

// p_pos = logistic(sum of lexicon weights over all tokens). Order-insensitive;
// unknown tokens score zero.
class LexiconBlackBox final : public BlackBox {
 public:
  explicit LexiconBlackBox(Lexicon lexicon) : lexicon_(std::move(lexicon)) {}

  double score(const TokenSequence& text) const {
    double s = 0.0;
    for (const auto& t : text) {
      auto it = lexicon_.find(t);
      if (it != lexicon_.end()) s += it->second;
    }
    return s;
  }

  ConfidenceVector predict(const TokenSequence& text) const override {
    if (text.empty()) throw InvalidArgument("cannot classify an empty text");
    return ConfidenceVector::from_positive(logistic(score(text)));
  }

  const Lexicon& lexicon() const noexcept { return lexicon_; }

 private:
  Lexicon lexicon_;
};

// Per-token embedding table: a pseudo-random unit direction per token (seeded
// by the token's hash) plus a planted sentiment axis scaled by the token's
// lexicon weight.
class EmbeddingTable {
 public:
  EmbeddingTable(std::size_t dimension, std::uint64_t seed, Lexicon planted = {}, double planted_gain = 0.6)
      : dimension_(dimension), seed_(seed), planted_(std::move(planted)), gain_(planted_gain) {
    if (dimension == 0) throw InvalidArgument("embedding dimension must be positive");
    axis_ = random_unit("\x01sentiment-axis");
  }

  std::size_t dimension() const noexcept { return dimension_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::vector<double>& sentiment_axis() const noexcept { return axis_; }

  std::vector<double> embedding(const std::string& token) const {
    auto v = random_unit(token);
    if (auto it = planted_.find(token); it != planted_.end()) {
      for (std::size_t i = 0; i < dimension_; ++i) v[i] += gain_ * it->second * axis_[i];
    }
    return v;
  }

 private:
  std::vector<double> random_unit(std::string_view key) const {
    std::vector<double> v(dimension_);
    std::uint64_t state = fnv1a(key) ^ splitmix64(seed_);
    double norm = 0.0;
    for (auto& c : v) {
      state = splitmix64(state);
      c = unit_symmetric(state);
      norm += c * c;
    }
    norm = std::sqrt(norm);
    for (auto& c : v) c /= norm;
    return v;
  }

  std::size_t dimension_;
  std::uint64_t seed_;
  Lexicon planted_;
  double gain_;
  std::vector<double> axis_;
};

inline std::vector<double> normalized(std::vector<double> v) {
  double n = 0.0;
  for (double c : v) n += c * c;
  n = std::sqrt(n);
  if (n == 0.0) throw Error("degenerate latent vector");
  for (double& c : v) c /= n;
  return v;
}

// L2-normalized mean of token embeddings.
class MeanEmbeddingEncoder final : public Encoder {
 public:
  explicit MeanEmbeddingEncoder(std::shared_ptr<const EmbeddingTable> table) : table_(std::move(table)) {}

  std::size_t dimension() const override { return table_->dimension(); }

  LatentVector encode(const TokenSequence& text) const override {
    if (text.empty()) throw InvalidArgument("cannot encode an empty text");
    std::vector<double> sum(table_->dimension(), 0.0);
    for (const auto& t : text) {
      const auto e = table_->embedding(t);
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += e[i];
    }
    for (double& c : sum) c /= static_cast<double>(text.size());
    return LatentVector(normalized(std::move(sum)));
  }

  const EmbeddingTable& table() const noexcept { return *table_; }

 private:
  std::shared_ptr<const EmbeddingTable> table_;
};

// Decodes to the corpus text whose latent vector is closest in cosine
// distance; the earliest entry wins ties.
class CorpusNearestDecoder final : public Decoder {
 public:
  CorpusNearestDecoder(std::vector<TokenSequence> texts, std::span<const LatentVector> latents)
      : texts_(std::move(texts)) {
    if (texts_.empty() || texts_.size() != latents.size()) {
      throw InvalidArgument("nearest-neighbor decoder needs one latent vector per text");
    }
    dimension_ = latents[0].dimension();
    rows_.reserve(texts_.size() * dimension_);
    for (const auto& z : latents) {
      if (z.dimension() != dimension_) throw InvalidArgument("latent dimension mismatch in decoder corpus");
      const double n = z.norm();
      if (n == 0.0) throw InvalidArgument("degenerate latent vector");
      for (double c : z.components()) rows_.push_back(c / n);
    }
  }

  explicit CorpusNearestDecoder(const Corpus& corpus)
      : CorpusNearestDecoder(texts_of(corpus), latents_of(corpus)) {}

  TokenSequence decode(const LatentVector& z) const override { return texts_[nearest(z)]; }

  std::size_t nearest(const LatentVector& z) const {
    if (z.dimension() != dimension_) throw InvalidArgument("latent dimension mismatch");
    const double n = z.norm();
    if (n == 0.0) throw InvalidArgument("degenerate latent vector");
    const auto q = z.components();
    std::size_t best = 0;
    double best_sim = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < texts_.size(); ++r) {
      const double* row = rows_.data() + r * dimension_;
      double dot = 0.0;
      for (std::size_t i = 0; i < dimension_; ++i) dot += row[i] * q[i];
      if (dot > best_sim) {
        best_sim = dot;
        best = r;
      }
    }
    return best;
  }

 private:
  static std::vector<TokenSequence> texts_of(const Corpus& c) {
    std::vector<TokenSequence> out;
    for (const auto& e : c.entries()) out.push_back(e.text);
    return out;
  }
  static std::vector<LatentVector> latents_of(const Corpus& c) {
    std::vector<LatentVector> out;
    for (const auto& e : c.entries()) out.push_back(e.latent);
    return out;
  }

  std::vector<TokenSequence> texts_;
  std::vector<double> rows_;
  std::size_t dimension_ = 0;
};

// Greedy matching pursuit over a fixed vocabulary: repeatedly appends the
// token that most increases the cosine similarity between the running
// embedding sum and the target, stopping when nothing improves it or the
// text reaches `max_length` tokens. Produces texts outside any corpus.
class GreedyBagOfWordsDecoder final : public Decoder {
 public:
  static constexpr std::size_t kDefaultMaxLength = 12;

  GreedyBagOfWordsDecoder(std::shared_ptr<const EmbeddingTable> table, std::vector<std::string> vocabulary,
                          std::size_t max_length = kDefaultMaxLength)
      : table_(std::move(table)), vocabulary_(std::move(vocabulary)), max_length_(max_length) {
    if (vocabulary_.empty()) throw InvalidArgument("greedy decoder needs a vocabulary");
    if (max_length_ == 0) throw InvalidArgument("greedy decoder max length must be positive");
    const std::size_t d = table_->dimension();
    embeddings_.reserve(vocabulary_.size() * d);
    for (const auto& w : vocabulary_) {
      const auto e = table_->embedding(w);
      embeddings_.insert(embeddings_.end(), e.begin(), e.end());
    }
  }

  TokenSequence decode(const LatentVector& z) const override {
    const std::size_t d = table_->dimension();
    if (z.dimension() != d) throw InvalidArgument("latent dimension mismatch");
    const double zn = z.norm();
    if (zn == 0.0) throw InvalidArgument("degenerate latent vector");
    const auto target = z.components();

    std::vector<double> sum(d, 0.0);
    double sum_dot = 0.0;   // sum . target
    double sum_sq = 0.0;    // |sum|^2
    double current = -std::numeric_limits<double>::infinity();
    std::vector<std::string> picked;
    while (picked.size() < max_length_) {
      std::size_t best = 0;
      double best_cos = -std::numeric_limits<double>::infinity();
      double best_dot = 0.0, best_sq = 0.0;
      for (std::size_t w = 0; w < vocabulary_.size(); ++w) {
        const double* e = embeddings_.data() + w * d;
        double e_t = 0.0, e_s = 0.0, e_e = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
          e_t += e[i] * target[i];
          e_s += e[i] * sum[i];
          e_e += e[i] * e[i];
        }
        const double dot = sum_dot + e_t;
        const double sq = sum_sq + 2.0 * e_s + e_e;
        if (sq <= 0.0) continue;
        const double cos = dot / (std::sqrt(sq) * zn);
        if (cos > best_cos) {
          best_cos = cos;
          best = w;
          best_dot = dot;
          best_sq = sq;
        }
      }
      if (!picked.empty() && !(best_cos > current)) break;
      const double* e = embeddings_.data() + best * d;
      for (std::size_t i = 0; i < d; ++i) sum[i] += e[i];
      sum_dot = best_dot;
      sum_sq = best_sq;
      current = best_cos;
      picked.push_back(vocabulary_[best]);
    }
    return TokenSequence(std::move(picked));
  }

 private:
  std::shared_ptr<const EmbeddingTable> table_;
  std::vector<std::string> vocabulary_;
  std::vector<double> embeddings_;
  std::size_t max_length_;
};

// p_pos = logistic(gain * w . E(text)); the decision boundary is the
// hyperplane w . z = 0 through the origin of the latent space.
class LatentLinearBlackBox final : public BlackBox {
 public:
  LatentLinearBlackBox(std::shared_ptr<const Encoder> encoder, LatentVector weights, double gain = 10.0)
      : encoder_(std::move(encoder)), weights_(std::move(weights)), gain_(gain) {
    if (weights_.dimension() != encoder_->dimension()) throw InvalidArgument("weight dimension mismatch");
  }

  double margin(const LatentVector& z) const { return weights_.dot(z); }

  ConfidenceVector predict(const TokenSequence& text) const override {
    if (text.empty()) throw InvalidArgument("cannot classify an empty text");
    return ConfidenceVector::from_positive(logistic(gain_ * margin(encoder_->encode(text))));
  }

  const LatentVector& weights() const noexcept { return weights_; }

 private:
  std::shared_ptr<const Encoder> encoder_;
  LatentVector weights_;
  double gain_;
};

// Texts that spell out latent coordinates, one token per component with 9
// significant digits. Encoding parses them back, so encode(decode(z))
// reproduces z to 9 digits. Used for synthetic latent-space experiments
// where the geometry, not the language, is under test.
class CoordinateCodec final : public Encoder, public Decoder {
 public:
  explicit CoordinateCodec(std::size_t dimension) : dimension_(dimension) {
    if (dimension == 0) throw InvalidArgument("codec dimension must be positive");
  }

  std::size_t dimension() const override { return dimension_; }

  LatentVector encode(const TokenSequence& text) const override {
    if (text.empty()) throw InvalidArgument("cannot encode an empty text");
    if (text.size() != dimension_) throw InvalidArgument("coordinate text has the wrong number of tokens");
    std::vector<double> v;
    v.reserve(dimension_);
    for (const auto& t : text) {
      double c = 0.0;
      const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), c);
      if (ec != std::errc() || end != t.data() + t.size()) throw InvalidArgument("not a coordinate token: " + t);
      v.push_back(c);
    }
    return LatentVector(std::move(v));
  }

  TokenSequence decode(const LatentVector& z) const override {
    if (z.dimension() != dimension_) throw InvalidArgument("latent dimension mismatch");
    std::vector<std::string> tokens;
    tokens.reserve(dimension_);
    char buf[32];
    for (double c : z.components()) {
      const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, c == 0.0 ? 0.0 : c, std::chars_format::general, 9);
      tokens.emplace_back(buf, end);
    }
    return TokenSequence(std::move(tokens));
  }

 private:
  std::size_t dimension_;
};

}  // namespace proxplain::toy
