#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "proxplain/error.hpp"

namespace proxplain {

// A point in the generative model's latent space. Components are always
// finite; the dimension is fixed by the encoder of a session.
class LatentVector {
 public:
  LatentVector() = default;

  explicit LatentVector(std::vector<double> components) : components_(std::move(components)) {
    for (double c : components_) {
      if (!std::isfinite(c)) throw InvalidArgument("latent vector has a non-finite component");
    }
  }

  LatentVector(std::initializer_list<double> components)
      : LatentVector(std::vector<double>(components)) {}

  static LatentVector zeros(std::size_t dimension) {
    return LatentVector(std::vector<double>(dimension, 0.0));
  }

  std::size_t dimension() const noexcept { return components_.size(); }
  bool empty() const noexcept { return components_.empty(); }

  double operator[](std::size_t i) const noexcept { return components_[i]; }
  std::span<const double> components() const noexcept { return components_; }
  const std::vector<double>& to_vector() const noexcept { return components_; }

  double dot(const LatentVector& other) const {
    require_same_dimension(other);
    return std::inner_product(components_.begin(), components_.end(), other.components_.begin(), 0.0);
  }

  double norm() const noexcept {
    double sum = 0.0;
    for (double c : components_) sum += c * c;
    return std::sqrt(sum);
  }

  bool is_zero() const noexcept {
    return std::all_of(components_.begin(), components_.end(), [](double c) { return c == 0.0; });
  }

  LatentVector operator+(const LatentVector& other) const {
    require_same_dimension(other);
    std::vector<double> out(components_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = components_[i] + other.components_[i];
    return LatentVector(std::move(out));
  }

  LatentVector operator-(const LatentVector& other) const {
    require_same_dimension(other);
    std::vector<double> out(components_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = components_[i] - other.components_[i];
    return LatentVector(std::move(out));
  }

  LatentVector operator*(double scale) const {
    std::vector<double> out(components_);
    for (double& c : out) c *= scale;
    return LatentVector(std::move(out));
  }

  friend bool operator==(const LatentVector&, const LatentVector&) = default;

  void require_same_dimension(const LatentVector& other) const {
    if (other.dimension() != dimension()) {
      throw InvalidArgument("latent dimension mismatch: " + std::to_string(dimension()) + " vs " +
                            std::to_string(other.dimension()));
    }
  }

 private:
  std::vector<double> components_;
};

// 1 - cos(a, b), clamped into [0, 2].
inline double cosine_distance(const LatentVector& a, const LatentVector& b) {
  a.require_same_dimension(b);
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw InvalidArgument("degenerate latent vector");
  const double d = 1.0 - a.dot(b) / (na * nb);
  return std::clamp(d, 0.0, 2.0);
}

// Evenly spaced points on the segment from `from` to `to`, endpoints
// included and reproduced exactly: s + 1 points in total.
//
// Note: the step is (to - from) / steps. The published form of this
// interpolation prints the difference the other way round, which would
// extrapolate past `from`; the interpolating direction is used here.
inline std::vector<LatentVector> interpolate(const LatentVector& from, const LatentVector& to,
                                             std::size_t steps) {
  if (steps == 0) throw InvalidArgument("interpolation needs at least one step");
  from.require_same_dimension(to);
  const std::size_t d = from.dimension();
  std::vector<LatentVector> points;
  points.reserve(steps + 1);
  points.push_back(from);
  for (std::size_t i = 1; i < steps; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(steps);
    std::vector<double> p(d);
    for (std::size_t j = 0; j < d; ++j) p[j] = from[j] + t * (to[j] - from[j]);
    points.emplace_back(std::move(p));
  }
  points.push_back(to);
  return points;
}

}  // namespace proxplain
