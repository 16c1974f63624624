#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "proxplain/error.hpp"
#include "proxplain/latent.hpp"
#include "proxplain/model.hpp"
#include "proxplain/random.hpp"
#include "proxplain/text.hpp"

namespace proxplain {

struct NeighborhoodConfig {
  std::size_t k = 25;               // landmarks kept, and repeats per approximation round
  std::size_t s = 10;               // interpolation steps, both stages
  std::size_t n = 100;              // neighbors kept per class
  std::size_t max_iterations = 8;
  std::size_t patience = 2;         // rounds without a closer counterfactual before stopping
  double improvement_tol = 1e-6;

  void validate() const {
    if (k == 0 || s == 0 || n == 0 || max_iterations == 0 || patience == 0) {
      throw InvalidArgument("neighborhood parameters k, s, n, max_iterations and patience must be positive");
    }
    if (!(improvement_tol >= 0.0)) throw InvalidArgument("improvement_tol must be non-negative");
  }
};

struct Neighbor {
  TokenSequence text;
  LatentVector latent;
  ConfidenceVector confidence;
  Label label = Label::positive;
  double distance_to_pivot = 0.0;
};

struct Landmark {
  LatentVector latent;
  TokenSequence text;
  double distance_to_pivot = 0.0;
};

// Counterfactual latent points that bound and steer exploration.
struct LandmarkSet {
  std::vector<Landmark> landmarks;
  std::size_t capacity = 0;
  bool saturated = false;  // fewer counterfactuals were available than requested

  std::size_t size() const noexcept { return landmarks.size(); }
  bool empty() const noexcept { return landmarks.empty(); }

  std::size_t closest_index() const {
    if (landmarks.empty()) throw Error("empty landmark set");
    std::size_t best = 0;
    for (std::size_t i = 1; i < landmarks.size(); ++i) {
      if (landmarks[i].distance_to_pivot < landmarks[best].distance_to_pivot) best = i;
    }
    return best;
  }

  double closest_distance() const { return landmarks[closest_index()].distance_to_pivot; }
};

// Thrown when construction ends without any neighbor of one class.
class DegenerateNeighborhood : public Error {
 public:
  DegenerateNeighborhood(Label missing_role_label, std::string missing_role, std::string diagnostics)
      : Error("degenerate neighborhood: no " + missing_role + " neighbors were generated; " + diagnostics),
        missing_label_(missing_role_label),
        missing_role_(std::move(missing_role)),
        diagnostics_(std::move(diagnostics)) {}

  Label missing_label() const noexcept { return missing_label_; }
  // "factual" or "counterfactual".
  const std::string& missing_role() const noexcept { return missing_role_; }
  const std::string& diagnostics() const noexcept { return diagnostics_; }

 private:
  Label missing_label_;
  std::string missing_role_;
  std::string diagnostics_;
};

// The k corpus entries of the opposite class closest to the pivot; ties go
// to the earlier corpus entry.
inline LandmarkSet seed_landmarks(const LatentVector& pivot, Label query_class, const Corpus& corpus,
                                  std::size_t k) {
  if (k == 0) throw InvalidArgument("landmark count must be positive");
  const Label wanted = opposite(query_class);
  std::vector<std::pair<double, std::size_t>> candidates;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].label == wanted) candidates.emplace_back(cosine_distance(corpus[i].latent, pivot), i);
  }
  if (candidates.empty()) {
    throw Error("cannot seed landmarks: the corpus holds no " + std::string(to_string(wanted)) +
                " (counterfactual) entry");
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  LandmarkSet set;
  set.capacity = k;
  set.saturated = candidates.size() < k;
  const std::size_t take = std::min(k, candidates.size());
  for (std::size_t i = 0; i < take; ++i) {
    const auto& e = corpus[candidates[i].second];
    set.landmarks.push_back({e.latent, e.text, candidates[i].first});
  }
  return set;
}

namespace detail {

inline std::string describe_vector(const LatentVector& z) {
  std::ostringstream os;
  os << "[";
  const std::size_t shown = std::min<std::size_t>(z.dimension(), 4);
  for (std::size_t i = 0; i < shown; ++i) os << (i ? ", " : "") << z[i];
  if (z.dimension() > shown) os << ", ... (d=" << z.dimension() << ")";
  os << "]";
  return os.str();
}

// Decodes and scores a batch of latent points. A failing batch is retried
// point by point so the error names the offending vector.
inline std::vector<Neighbor> materialize(const std::vector<LatentVector>& points, const LatentVector& pivot,
                                         const Models& models, std::size_t& decode_calls) {
  if (points.empty()) return {};
  std::vector<TokenSequence> texts;
  try {
    texts = models.decoder.decode_batch(points);
  } catch (const Error& batch_error) {
    for (const auto& z : points) {
      try {
        (void)models.decoder.decode(z);
      } catch (const Error& e) {
        throw Error(std::string("decode failed for latent vector ") + describe_vector(z) + ": " + e.what());
      }
    }
    throw;
  }
  decode_calls += points.size();
  if (texts.size() != points.size()) throw Error("decoder returned a misaligned batch");
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (texts[i].empty()) throw Error("decoder produced an empty text for " + describe_vector(points[i]));
  }

  std::vector<ConfidenceVector> scores;
  try {
    scores = models.black_box.predict_batch(texts);
  } catch (const Error& batch_error) {
    for (std::size_t i = 0; i < texts.size(); ++i) {
      try {
        (void)models.black_box.predict(texts[i]);
      } catch (const Error& e) {
        throw Error("prediction failed for the text decoded from " + describe_vector(points[i]) + " (\"" +
                    texts[i].str() + "\"): " + e.what());
      }
    }
    throw;
  }
  if (scores.size() != texts.size()) throw Error("black box returned a misaligned batch");

  std::vector<Neighbor> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    out.push_back({std::move(texts[i]), points[i], scores[i], scores[i].label(), cosine_distance(points[i], pivot)});
  }
  return out;
}

}  // namespace detail

struct Approximation {
  std::vector<Neighbor> neighbors;  // N_new
  LandmarkSet landmarks;            // C_new
  std::size_t decode_calls = 0;
};

// One round of progressive approximation. Repeated k times: draw two
// landmarks with replacement, interpolate between them, interpolate again
// from every counterfactual on that segment towards the pivot, keep the
// counterfactual closest to the pivot as a new landmark, and keep every
// point of the second stage as a neighbor.
inline Approximation approximate(const LatentVector& pivot, Label query_class, const LandmarkSet& current,
                                 const NeighborhoodConfig& config, const Models& models, Rng& rng) {
  if (current.empty()) throw InvalidArgument("approximation needs at least one landmark");
  Approximation result;
  result.landmarks.capacity = config.k;
  std::uniform_int_distribution<std::size_t> draw(0, current.size() - 1);

  for (std::size_t repeat = 0; repeat < config.k; ++repeat) {
    const Landmark& p = current.landmarks[draw(rng)];
    const Landmark& q = current.landmarks[draw(rng)];

    // First stage, between two counterfactuals.
    const auto first_stage = interpolate(p.latent, q.latent, config.s);
    const auto probes = detail::materialize(first_stage, pivot, models, result.decode_calls);

    // Second stage, from each counterfactual probe towards the pivot. The
    // segment starts at the probe itself, whose decode is reused.
    std::vector<Neighbor> stage;
    std::vector<LatentVector> pending;
    std::vector<std::size_t> slots;
    for (const auto& probe : probes) {
      if (probe.label == query_class) continue;
      auto segment = interpolate(probe.latent, pivot, config.s);
      stage.push_back(probe);
      for (std::size_t i = 1; i < segment.size(); ++i) {
        if (segment[i].is_zero()) continue;
        slots.push_back(stage.size());
        stage.emplace_back();
        pending.push_back(std::move(segment[i]));
      }
    }
    auto decoded = detail::materialize(pending, pivot, models, result.decode_calls);
    for (std::size_t i = 0; i < decoded.size(); ++i) stage[slots[i]] = std::move(decoded[i]);

    const Neighbor* closest = nullptr;
    for (const auto& nb : stage) {
      if (nb.label == query_class) continue;
      if (closest == nullptr || nb.distance_to_pivot < closest->distance_to_pivot) closest = &nb;
    }
    if (closest != nullptr) {
      result.landmarks.landmarks.push_back({closest->latent, closest->text, closest->distance_to_pivot});
    } else {
      // Only reachable with non-deterministic decoders: keep the nearer draw.
      const Landmark& kept = p.distance_to_pivot <= q.distance_to_pivot ? p : q;
      result.landmarks.landmarks.push_back(kept);
    }

    for (auto& nb : stage) result.neighbors.push_back(std::move(nb));
  }
  return result;
}

struct Neighborhood {
  LatentVector pivot;
  ConfidenceVector query_confidence;
  Label query_class = Label::positive;
  std::vector<Neighbor> neighbors;          // up to n factuals, then up to n counterfactuals
  LandmarkSet seed;
  LandmarkSet landmarks;                    // final landmark set
  std::vector<double> closest_landmark_trace;  // seed first, then one entry per round
  std::size_t iterations = 0;
  std::size_t decode_calls = 0;
  std::size_t generated = 0;                // neighbors before duplicate removal
  std::size_t unique = 0;                   // neighbors after duplicate removal

  std::vector<Neighbor> with_label(Label l) const {
    std::vector<Neighbor> out;
    for (const auto& nb : neighbors) {
      if (nb.label == l) out.push_back(nb);
    }
    return out;
  }
  std::vector<Neighbor> factuals() const { return with_label(query_class); }
  std::vector<Neighbor> counterfactuals() const { return with_label(opposite(query_class)); }
};

namespace detail {

inline std::string trace_summary(const Neighborhood& nh) {
  std::ostringstream os;
  os << "seed landmark distances [";
  for (std::size_t i = 0; i < nh.seed.size(); ++i) os << (i ? ", " : "") << nh.seed.landmarks[i].distance_to_pivot;
  os << "], closest-landmark trace [";
  for (std::size_t i = 0; i < nh.closest_landmark_trace.size(); ++i) {
    os << (i ? ", " : "") << nh.closest_landmark_trace[i];
  }
  os << "], rounds " << nh.iterations << ", generated " << nh.generated << ", unique " << nh.unique;
  return os.str();
}

}  // namespace detail

// Iterated approximation from corpus-seeded landmarks. Stops after
// max_iterations rounds, or once the closest landmark has failed to move
// closer by more than improvement_tol for `patience` consecutive rounds.
// Returns the n closest factuals and n closest counterfactuals after
// removing duplicate texts.
inline Neighborhood construct(const TokenSequence& query, const Corpus& corpus, const NeighborhoodConfig& config,
                              const Models& models, Rng& rng) {
  config.validate();
  if (query.empty()) throw InvalidArgument("cannot explain an empty text");
  Neighborhood nh;
  nh.pivot = models.encoder.encode(query);
  nh.query_confidence = models.black_box.predict(query);
  nh.query_class = nh.query_confidence.label();
  nh.seed = seed_landmarks(nh.pivot, nh.query_class, corpus, config.k);

  LandmarkSet landmarks = nh.seed;
  double best = landmarks.closest_distance();
  nh.closest_landmark_trace.push_back(best);
  std::vector<Neighbor> pool;
  std::size_t stalled = 0;

  for (std::size_t round = 0; round < config.max_iterations; ++round) {
    auto step = approximate(nh.pivot, nh.query_class, landmarks, config, models, rng);
    nh.decode_calls += step.decode_calls;
    ++nh.iterations;

    // The closest landmark found so far is never dropped: if the new set
    // lost it, it replaces the new set's farthest member.
    const std::size_t previous = landmarks.closest_index();
    if (step.landmarks.closest_distance() > landmarks.landmarks[previous].distance_to_pivot) {
      auto& lm = step.landmarks.landmarks;
      auto farthest = std::max_element(lm.begin(), lm.end(), [](const Landmark& a, const Landmark& b) {
        return a.distance_to_pivot < b.distance_to_pivot;
      });
      *farthest = landmarks.landmarks[previous];
    }
    landmarks = std::move(step.landmarks);
    for (auto& nb : step.neighbors) pool.push_back(std::move(nb));

    const double now = landmarks.closest_distance();
    nh.closest_landmark_trace.push_back(now);
    if (best - now > config.improvement_tol) {
      best = now;
      stalled = 0;
    } else if (++stalled >= config.patience) {
      break;
    }
  }
  nh.generated = pool.size();

  // Exact-text duplicates collapse onto the occurrence closest to the pivot
  // (the earliest among equals).
  std::unordered_map<std::string, std::size_t> index;
  std::vector<Neighbor> unique;
  for (auto& nb : pool) {
    auto [it, inserted] = index.try_emplace(nb.text.str(), unique.size());
    if (inserted) {
      unique.push_back(std::move(nb));
    } else if (nb.distance_to_pivot < unique[it->second].distance_to_pivot) {
      unique[it->second] = std::move(nb);
    }
  }
  nh.unique = unique.size();

  std::vector<std::size_t> order(unique.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return unique[a].distance_to_pivot < unique[b].distance_to_pivot;
  });
  std::vector<Neighbor> factual, counterfactual;
  for (std::size_t i : order) {
    auto& bucket = unique[i].label == nh.query_class ? factual : counterfactual;
    if (bucket.size() < config.n) bucket.push_back(std::move(unique[i]));
  }
  nh.landmarks = std::move(landmarks);

  if (counterfactual.empty()) {
    throw DegenerateNeighborhood(opposite(nh.query_class), "counterfactual", detail::trace_summary(nh));
  }
  if (factual.empty()) {
    throw DegenerateNeighborhood(nh.query_class, "factual", detail::trace_summary(nh));
  }
  nh.neighbors = std::move(factual);
  for (auto& nb : counterfactual) nh.neighbors.push_back(std::move(nb));
  return nh;
}

}  // namespace proxplain
