#pragma once

// JSON records for explanations and evaluation reports.

#include <cstdio>
#include <sstream>
#include <string>

#include <json.hpp>

#include "proxplain/evaluation.hpp"
#include "proxplain/explainer.hpp"

namespace proxplain::report {

using Json = nlohmann::ordered_json;

inline Json config_json(const ExplainerConfig& c) {
  Json j;
  j["k"] = c.neighborhood.k;
  j["s"] = c.neighborhood.s;
  j["n"] = c.neighborhood.n;
  j["max_iterations"] = c.neighborhood.max_iterations;
  j["patience"] = c.neighborhood.patience;
  j["improvement_tol"] = c.neighborhood.improvement_tol;
  j["sigma"] = c.surrogate.kernel_width;
  j["ridge"] = c.surrogate.ridge;
  j["lambda"] = c.exemplars.lambda;
  j["set_size"] = c.exemplars.set_size;
  j["eta"] = c.eta;
  j["edition_cap"] = c.edition_cap;
  j["context_window"] = c.context_window;
  j["epsilon"] = c.epsilon;
  return j;
}

inline Json importance_list(std::span<const WordImportance> words) {
  Json arr = Json::array();
  for (const auto& w : words) arr.push_back(Json{{"token", w.token}, {"weight", w.weight}});
  return arr;
}

inline Json neighbor_list(std::span<const Neighbor> neighbors) {
  Json arr = Json::array();
  for (const auto& nb : neighbors) arr.push_back(Json{{"text", nb.text.str()}, {"p_pos", nb.confidence.p_pos()}});
  return arr;
}

// One explanation record. Intrinsic words are listed in full, extrinsic
// words only when |weight| >= eta.
inline Json explanation_json(const Explanation& ex, const Json& extra_provenance = Json::object()) {
  Json j;
  j["query"] = ex.query.str();
  j["prediction"] = Json{{"p_pos", ex.prediction.p_pos()},
                         {"p_neg", ex.prediction.p_neg()},
                         {"label", std::string(to_string(ex.label))}};
  j["intrinsic"] = importance_list(ex.intrinsic);
  j["extrinsic"] = importance_list(important(ex.extrinsic, ex.provenance.config.eta));
  j["factuals"] = neighbor_list(ex.factuals);
  j["counterfactuals"] = neighbor_list(ex.counterfactuals);
  Json editions = Json::array();
  for (const auto& e : ex.editions) {
    editions.push_back(Json{{"text", e.edited.str()},
                            {"op", std::string(to_string(e.op))},
                            {"word", e.word},
                            {"flipped", e.flipped}});
  }
  j["editions"] = std::move(editions);

  Json prov;
  prov["seed"] = ex.provenance.seed;
  prov["config"] = config_json(ex.provenance.config);
  prov["neighborhood_size"] = ex.provenance.neighborhood_size;
  prov["generated"] = ex.provenance.generated;
  prov["iterations"] = ex.provenance.iterations;
  prov["decode_calls"] = ex.provenance.decode_calls;
  prov["closest_landmark_trace"] = ex.provenance.closest_landmark_trace;
  for (auto it = extra_provenance.begin(); it != extra_provenance.end(); ++it) prov[it.key()] = it.value();
  j["provenance"] = std::move(prov);
  return j;
}

inline Json error_json(const TokenSequence& query, const std::string& message) {
  return Json{{"query", query.str()}, {"error", message}};
}

inline Json summary_json(const Summary& s) {
  return Json{{"mean", s.mean}, {"stddev", s.stddev}, {"count", s.count}};
}

inline Json outcome_json(const EditOutcome& o) {
  return Json{{"text", o.edited.str()}, {"operations", o.operations}, {"confidence_drop", o.confidence_drop}};
}

inline Json evaluation_json(const EvaluationReport& r, const Json& extra_header = Json::object()) {
  Json j;
  j["eta"] = r.config.eta;
  j["eta_high"] = r.config.eta_high;
  j["seed"] = r.config.seed;
  j["baseline_max_drops"] = r.config.baseline_max_drops;
  j["strong_word_count"] = r.config.strong_word_count;
  for (auto it = extra_header.begin(); it != extra_header.end(); ++it) j[it.key()] = it.value();
  j["instances_total"] = r.instances.size();
  j["failures"] = r.failures;

  Json agg;
  agg["guided"] = Json{{"completeness", summary_json(r.guided.completeness)},
                       {"compactness", summary_json(r.guided.compactness)},
                       {"compactness_eta_high", summary_json(r.guided_high.compactness)},
                       {"correctness", r.correctness}};
  agg["baseline"] = Json{{"completeness", summary_json(r.baseline.completeness)},
                         {"compactness", summary_json(r.baseline.compactness)},
                         {"correctness", nullptr}};
  j["aggregate"] = std::move(agg);

  Json rows = Json::array();
  for (const auto& row : r.instances) {
    Json x;
    x["index"] = row.index;
    x["query"] = row.query.str();
    x["label"] = std::string(to_string(row.label));
    x["p_label"] = row.original.of(row.label);
    if (row.error) {
      x["error"] = *row.error;
    } else {
      x["guided"] = outcome_json(row.guided);
      x["guided_eta_high"] = outcome_json(row.guided_high);
      x["baseline"] = outcome_json(row.baseline);
    }
    rows.push_back(std::move(x));
  }
  j["instances"] = std::move(rows);
  return j;
}

// Human-readable rendering of one explanation.
inline std::string pretty(const Explanation& ex) {
  std::ostringstream os;
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof buf, "%+.3f", v);
    return std::string(buf);
  };
  os << "Input: " << ex.query.str() << "\n";
  std::snprintf(buf, sizeof buf, "%.3f", ex.prediction.of(ex.label));
  os << "Prediction: " << to_string(ex.label) << " (p=" << buf << ")\n";
  os << "Saliency (intrinsic):\n";
  for (const auto& w : ex.intrinsic) os << "  " << fmt(w.weight) << "  " << w.token << "\n";
  os << "Extrinsic words (|w| >= " << ex.provenance.config.eta << "):\n";
  for (const auto& w : important(ex.extrinsic, ex.provenance.config.eta)) {
    os << "  " << fmt(w.weight) << "  " << w.token << "\n";
  }
  os << "Factuals:\n";
  for (const auto& nb : ex.factuals) os << "  " << nb.text.str() << "\n";
  os << "Counterfactuals:\n";
  for (const auto& nb : ex.counterfactuals) os << "  " << nb.text.str() << "\n";
  os << "Editions:\n";
  for (const auto& e : ex.editions) {
    os << "  " << e.edited.str() << "  [" << to_string(e.op) << " '" << e.word << "'"
       << (e.flipped ? ", flips to " + std::string(to_string(e.new_confidence.label())) : std::string()) << "]\n";
  }
  os << "Seed: " << ex.provenance.seed << "\n";
  return os.str();
}

}  // namespace proxplain::report
