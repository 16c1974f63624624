#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "proxplain/edition.hpp"
#include "proxplain/exemplars.hpp"
#include "proxplain/model.hpp"
#include "proxplain/neighborhood.hpp"
#include "proxplain/random.hpp"
#include "proxplain/surrogate.hpp"

namespace proxplain {

struct ExplainerConfig {
  NeighborhoodConfig neighborhood;
  SurrogateOptions surrogate;
  ExemplarConfig exemplars;
  double eta = 0.1;                // importance threshold
  std::size_t edition_cap = 3;     // editions built for the top extrinsic words
  std::size_t context_window = 2;  // l
  double epsilon = 1e-6;

  void validate() const {
    neighborhood.validate();
    exemplars.validate();
    if (!(surrogate.kernel_width > 0.0)) throw InvalidArgument("kernel width must be positive");
    if (!(surrogate.ridge >= 0.0)) throw InvalidArgument("ridge must be non-negative");
    if (!(eta > 0.0)) throw InvalidArgument("eta must be positive");
    if (context_window == 0) throw InvalidArgument("context window must be positive");
    if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  }
};

struct Provenance {
  ExplainerConfig config;
  std::uint64_t seed = 0;
  std::size_t neighborhood_size = 0;
  std::size_t generated = 0;
  std::size_t iterations = 0;
  std::size_t decode_calls = 0;
  std::vector<double> closest_landmark_trace;
};

struct Explanation {
  TokenSequence query;
  ConfidenceVector prediction;
  Label label = Label::positive;
  std::vector<WordImportance> importances;  // every vocabulary token, by |weight|
  std::vector<WordImportance> intrinsic;
  std::vector<WordImportance> extrinsic;
  std::vector<Neighbor> factuals;
  std::vector<Neighbor> counterfactuals;
  std::vector<Edition> editions;
  std::shared_ptr<const ContextModel> context;
  Provenance provenance;
};

// Full local explanation of the black box's decision on `query`.
// Deterministic given `seed`. Editions are placed with `context` when given
// (for instance a model estimated on a larger in-domain corpus), otherwise
// with a context model built from the neighborhood texts.
inline Explanation explain(const TokenSequence& query, const Corpus& corpus, const Models& models,
                           const ExplainerConfig& config, std::uint64_t seed,
                           std::shared_ptr<const ContextModel> context = nullptr) {
  config.validate();
  Rng rng(seed);
  const auto nh = construct(query, corpus, config.neighborhood, models, rng);

  Explanation ex;
  ex.query = query;
  ex.prediction = nh.query_confidence;
  ex.label = nh.query_class;

  const auto model = fit(nh.neighbors, nh.pivot, query, config.surrogate);
  ex.importances = extract_importances(model, query, ex.label);
  ex.intrinsic = with_origin(ex.importances, Origin::intrinsic);
  ex.extrinsic = with_origin(ex.importances, Origin::extrinsic);

  ex.factuals = select_exemplars(nh.factuals(), nh.pivot, config.exemplars);
  ex.counterfactuals = select_exemplars(nh.counterfactuals(), nh.pivot, config.exemplars);

  auto ctx = context ? std::move(context)
                     : std::make_shared<const ContextModel>(
                           build_context_model(nh.neighbors, config.context_window, config.epsilon));
  for (const auto& wi : important(ex.extrinsic, config.eta)) {
    if (ex.editions.size() >= config.edition_cap) break;
    ex.editions.push_back(best_edition(query, wi.token, *ctx, models.black_box));
  }
  ex.context = std::move(ctx);

  ex.provenance.config = config;
  ex.provenance.seed = seed;
  ex.provenance.neighborhood_size = nh.neighbors.size();
  ex.provenance.generated = nh.generated;
  ex.provenance.iterations = nh.iterations;
  ex.provenance.decode_calls = nh.decode_calls;
  ex.provenance.closest_landmark_trace = nh.closest_landmark_trace;
  return ex;
}

}  // namespace proxplain
