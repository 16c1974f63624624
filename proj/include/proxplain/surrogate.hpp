#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "proxplain/error.hpp"
#include "proxplain/latent.hpp"
#include "proxplain/model.hpp"
#include "proxplain/neighborhood.hpp"
#include "proxplain/text.hpp"

namespace proxplain {

// Dense token index: query tokens first, then neighbor tokens, each in
// order of first appearance.
class Vocabulary {
 public:
  Vocabulary() = default;

  static Vocabulary build(const TokenSequence& query, std::span<const Neighbor> neighbors) {
    Vocabulary v;
    for (const auto& t : query) v.add(t);
    for (const auto& nb : neighbors) {
      for (const auto& t : nb.text) v.add(t);
    }
    return v;
  }

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::string& token(std::size_t i) const noexcept { return tokens_[i]; }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  // Index of `token`, or size() when absent.
  std::size_t index_of(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? tokens_.size() : it->second;
  }

 private:
  void add(const std::string& t) {
    if (index_.try_emplace(t, tokens_.size()).second) tokens_.push_back(t);
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Binary presence vector over `vocab`; out-of-vocabulary tokens are ignored.
inline std::vector<double> featurize(const TokenSequence& text, const Vocabulary& vocab) {
  std::vector<double> x(vocab.size(), 0.0);
  for (const auto& t : text) {
    const std::size_t j = vocab.index_of(t);
    if (j < vocab.size()) x[j] = 1.0;
  }
  return x;
}

struct SurrogateOptions {
  double kernel_width = 0.25;  // sigma, on cosine distances
  double ridge = 1e-6;
};

struct SurrogateModel {
  Vocabulary vocabulary;
  std::vector<double> coefficients;  // one per vocabulary token
  double intercept = 0.0;
  SurrogateOptions options;

  double predict(const std::vector<double>& features) const {
    double y = intercept;
    for (std::size_t j = 0; j < coefficients.size(); ++j) y += coefficients[j] * features[j];
    return y;
  }
};

// Proximity weight exp(-d^2 / sigma^2) of a neighbor at cosine distance d.
inline double kernel_weight(double distance, double kernel_width) {
  return std::exp(-(distance * distance) / (kernel_width * kernel_width));
}

// Fits a weighted linear model of the black box's positive-class
// probability on binary word features:
//
//   minimize  sum_i w_i (y_i - b - x_i . c)^2 + ridge |c|^2
//
// with w_i the kernel weight of neighbor i's latent distance to the pivot.
// The intercept b is not penalized. Solved in closed form on weighted,
// centered normal equations.
inline SurrogateModel fit_weighted(const std::vector<std::vector<double>>& features, std::span<const double> targets,
                                   std::span<const double> weights, double ridge) {
  const std::size_t n = features.size();
  if (n < 2) throw Error("surrogate underdetermined: fewer than two neighbors");
  if (targets.size() != n || weights.size() != n) throw InvalidArgument("surrogate inputs are misaligned");
  if (!(ridge >= 0.0)) throw InvalidArgument("ridge must be non-negative");
  const std::size_t p = features.front().size();
  {
    std::set<std::vector<double>> distinct(features.begin(), features.end());
    if (distinct.size() < 2) throw Error("surrogate underdetermined: neighbors share one feature vector");
  }

  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (features[i].size() != p) throw InvalidArgument("ragged feature matrix");
    if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) throw InvalidArgument("weights must be positive");
    for (std::size_t j = 0; j < p; ++j) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = features[i][j];
    y(static_cast<Eigen::Index>(i)) = targets[i];
    w(static_cast<Eigen::Index>(i)) = weights[i];
  }

  const double total = w.sum();
  const Eigen::RowVectorXd x_mean = (w.transpose() * X) / total;
  const double y_mean = w.dot(y) / total;
  const Eigen::MatrixXd Xc = X.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;

  Eigen::MatrixXd gram = Xc.transpose() * w.asDiagonal() * Xc;
  gram.diagonal().array() += ridge;
  const Eigen::VectorXd rhs = Xc.transpose() * (w.asDiagonal() * yc);

  Eigen::VectorXd coef(static_cast<Eigen::Index>(p));
  if (p > 0) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    const Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-15 ||
        pivots.minCoeff() <= 1e-14 * std::max(1.0, pivots.maxCoeff())) {
      throw Error("surrogate underdetermined: singular normal equations");
    }
    coef = ldlt.solve(rhs);
    // One round of iterative refinement tightens the stationarity residual.
    coef += ldlt.solve(rhs - gram * coef);
    if (!coef.allFinite()) throw Error("surrogate underdetermined: non-finite solution");
  }

  SurrogateModel model;
  model.coefficients.assign(coef.data(), coef.data() + coef.size());
  model.intercept = y_mean - x_mean.dot(coef);
  model.options.ridge = ridge;
  return model;
}

inline SurrogateModel fit(std::span<const Neighbor> neighbors, const LatentVector& pivot, const TokenSequence& query,
                          const SurrogateOptions& options = {}) {
  if (!(options.kernel_width > 0.0)) throw InvalidArgument("kernel width must be positive");
  auto vocab = Vocabulary::build(query, neighbors);
  std::vector<std::vector<double>> features;
  std::vector<double> targets, weights;
  features.reserve(neighbors.size());
  for (const auto& nb : neighbors) {
    features.push_back(featurize(nb.text, vocab));
    targets.push_back(nb.confidence.p_pos());
    weights.push_back(kernel_weight(cosine_distance(nb.latent, pivot), options.kernel_width));
  }
  auto model = fit_weighted(features, targets, weights, options.ridge);
  model.vocabulary = std::move(vocab);
  model.options = options;
  return model;
}

enum class Origin { intrinsic, extrinsic };
enum class Support { predicted_class, opposite_class };

constexpr std::string_view to_string(Origin o) noexcept {
  return o == Origin::intrinsic ? "intrinsic" : "extrinsic";
}
constexpr std::string_view to_string(Support s) noexcept {
  return s == Support::predicted_class ? "predicted_class" : "opposite_class";
}

struct WordImportance {
  std::string token;
  double weight = 0.0;  // positive: supports the decision that was made
  Origin origin = Origin::intrinsic;
  Support supports = Support::predicted_class;
};

// Decision-oriented importances for every vocabulary token, sorted by
// |weight| descending (vocabulary order among equals).
inline std::vector<WordImportance> extract_importances(const SurrogateModel& model, const TokenSequence& query,
                                                       Label predicted) {
  const double sign = predicted == Label::positive ? 1.0 : -1.0;
  std::vector<WordImportance> out;
  out.reserve(model.coefficients.size());
  for (std::size_t j = 0; j < model.coefficients.size(); ++j) {
    const auto& token = model.vocabulary.token(j);
    const double w = sign * model.coefficients[j];
    out.push_back({token, w, query.contains(token) ? Origin::intrinsic : Origin::extrinsic,
                   w >= 0.0 ? Support::predicted_class : Support::opposite_class});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const WordImportance& a, const WordImportance& b) { return std::abs(a.weight) > std::abs(b.weight); });
  return out;
}

// The "important" view: entries with |weight| >= eta, order preserved.
inline std::vector<WordImportance> important(std::span<const WordImportance> all, double eta) {
  std::vector<WordImportance> out;
  for (const auto& wi : all) {
    if (std::abs(wi.weight) >= eta) out.push_back(wi);
  }
  return out;
}

inline std::vector<WordImportance> with_origin(std::span<const WordImportance> all, Origin origin) {
  std::vector<WordImportance> out;
  for (const auto& wi : all) {
    if (wi.origin == origin) out.push_back(wi);
  }
  return out;
}

}  // namespace proxplain
