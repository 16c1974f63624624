#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "proxplain/error.hpp"
#include "proxplain/latent.hpp"
#include "proxplain/neighborhood.hpp"

namespace proxplain {

struct ExemplarConfig {
  double lambda = 0.5;       // weight of diversity against closeness
  std::size_t set_size = 5;

  void validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("lambda must lie in [0, 1]");
    if (set_size == 0) throw InvalidArgument("exemplar set size must be positive");
  }
};

// Greedy selection of a close but diverse exemplar set. Each round scores
// every remaining candidate i by
//
//   r_i = (1 - lambda) * -dist(z_i, z) + lambda * D(S + {i}) / (|S|(|S|+1)/2)
//
// where S is the current selection and D sums cosine distances between the
// difference vectors (z_p - z) over unordered pairs. For the first pick the
// pair sum is empty and counts as zero, so the closest candidate comes
// first. Candidates sitting exactly at the pivot contribute no diversity.
// Ties prefer the smaller distance, then input order.
//
// Returns indices into `candidates`, in selection order.
inline std::vector<std::size_t> select_exemplar_indices(std::span<const Neighbor> candidates,
                                                        const LatentVector& pivot, const ExemplarConfig& cfg) {
  cfg.validate();
  if (candidates.empty()) throw InvalidArgument("exemplar selection needs at least one candidate");
  for (const auto& c : candidates) {
    if (c.label != candidates.front().label) throw InvalidArgument("exemplar candidates must share one class");
  }

  const std::size_t m = candidates.size();
  std::vector<std::optional<LatentVector>> deltas(m);
  std::vector<double> distance(m);
  for (std::size_t i = 0; i < m; ++i) {
    distance[i] = cosine_distance(candidates[i].latent, pivot);
    auto delta = candidates[i].latent - pivot;
    if (!delta.is_zero()) deltas[i] = std::move(delta);
  }
  auto pair_distance = [&](std::size_t a, std::size_t b) {
    if (!deltas[a] || !deltas[b]) return 0.0;
    return cosine_distance(*deltas[a], *deltas[b]);
  };

  std::vector<std::size_t> selected;
  std::vector<bool> taken(m, false);
  std::vector<double> to_selection(m, 0.0);  // sum of pair distances to the current selection
  double within_selection = 0.0;             // pair sum inside the current selection

  const std::size_t target = std::min(cfg.set_size, m);
  while (selected.size() < target) {
    const double size = static_cast<double>(selected.size());
    const double pairs = (size * size + size) / 2.0;
    std::size_t best = m;
    double best_score = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (taken[i]) continue;
      const double diversity = pairs > 0.0 ? (within_selection + to_selection[i]) / pairs : 0.0;
      const double score = (1.0 - cfg.lambda) * -distance[i] + cfg.lambda * diversity;
      if (best == m || score > best_score || (score == best_score && distance[i] < distance[best])) {
        best = i;
        best_score = score;
      }
    }
    taken[best] = true;
    within_selection += to_selection[best];
    selected.push_back(best);
    for (std::size_t i = 0; i < m; ++i) {
      if (!taken[i]) to_selection[i] += pair_distance(i, best);
    }
  }
  return selected;
}

inline std::vector<Neighbor> select_exemplars(std::span<const Neighbor> candidates, const LatentVector& pivot,
                                              const ExemplarConfig& cfg) {
  std::vector<Neighbor> out;
  for (std::size_t i : select_exemplar_indices(candidates, pivot, cfg)) out.push_back(candidates[i]);
  return out;
}

}  // namespace proxplain
