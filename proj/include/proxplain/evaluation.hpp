#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "proxplain/edition.hpp"
#include "proxplain/error.hpp"
#include "proxplain/explainer.hpp"
#include "proxplain/model.hpp"
#include "proxplain/random.hpp"
#include "proxplain/surrogate.hpp"

namespace proxplain {

struct EvaluationConfig {
  double eta = 0.1;
  double eta_high = 0.3;
  std::uint64_t seed = 0;
  std::size_t baseline_max_drops = 3;
  std::size_t strong_word_count = 100;

  void validate() const {
    if (!(eta > 0.0)) throw InvalidArgument("eta must be positive");
    if (!(eta_high > eta)) throw InvalidArgument("eta_high must exceed eta");
  }
};

struct EditResult {
  TokenSequence edited;
  std::size_t operations = 0;
};

// Explanation-guided sentence edition. Among words with |weight| >= eta,
// every query word that supports the decision is deleted (all occurrences,
// one operation), then every word that opposes it is inserted once at its
// likeliest gap, largest |weight| first. A deletion that would leave the
// text empty is skipped.
inline EditResult guided_edit(const TokenSequence& query, std::span<const WordImportance> importances, double eta,
                              const ContextModel& ctx) {
  EditResult r{query, 0};
  std::vector<const WordImportance*> relevant;
  for (const auto& wi : importances) {
    if (std::abs(wi.weight) >= eta) relevant.push_back(&wi);
  }
  std::stable_sort(relevant.begin(), relevant.end(), [](const WordImportance* a, const WordImportance* b) {
    return std::abs(a->weight) > std::abs(b->weight);
  });
  for (const auto* wi : relevant) {
    if (wi->weight <= 0.0 || wi->origin != Origin::intrinsic) continue;
    if (!r.edited.contains(wi->token)) continue;
    auto next = r.edited.without_token(wi->token);
    if (next.empty()) continue;
    r.edited = std::move(next);
    ++r.operations;
  }
  for (const auto* wi : relevant) {
    if (wi->weight >= 0.0) continue;
    const auto slot = best_candidate(r.edited, wi->token, ctx, /*insertions_only=*/true);
    r.edited = r.edited.inserted(slot.position, wi->token);
    ++r.operations;
  }
  return r;
}

// Random edit mimicking an explanation-guided one: drops d distinct random
// words, d uniform in [0, min(max_drops, |query| - 1)], then inserts one
// word drawn uniformly from `strong_words` at a uniform random gap.
inline EditResult baseline_edit(const TokenSequence& query, std::span<const std::string> strong_words,
                                std::size_t max_drops, Rng& rng) {
  if (query.empty()) throw InvalidArgument("cannot edit an empty text");
  if (strong_words.empty()) throw InvalidArgument("baseline editor needs at least one strong word");
  const std::size_t limit = std::min(max_drops, query.size() - 1);
  const std::size_t drops = std::uniform_int_distribution<std::size_t>(0, limit)(rng);

  std::vector<std::size_t> positions(query.size());
  std::iota(positions.begin(), positions.end(), 0);
  for (std::size_t i = 0; i < drops; ++i) {  // partial Fisher-Yates
    std::uniform_int_distribution<std::size_t> pick(i, positions.size() - 1);
    std::swap(positions[i], positions[pick(rng)]);
  }
  std::vector<std::size_t> dropped(positions.begin(), positions.begin() + static_cast<std::ptrdiff_t>(drops));
  std::sort(dropped.rbegin(), dropped.rend());
  TokenSequence edited = query;
  for (std::size_t p : dropped) edited = edited.without_position(p);

  const auto& word = strong_words[std::uniform_int_distribution<std::size_t>(0, strong_words.size() - 1)(rng)];
  const std::size_t gap = std::uniform_int_distribution<std::size_t>(0, edited.size())(rng);
  return {edited.inserted(gap, word), drops + 1};
}

// Caches the strongest words of each class, probed once per black box.
class BaselineEditor {
 public:
  BaselineEditor(const BlackBox& black_box, std::span<const std::string> vocabulary, std::size_t count,
                 std::size_t max_drops)
      : max_drops_(max_drops),
        for_positive_(strong_opposite_words(black_box, vocabulary, Label::positive, count)),
        for_negative_(strong_opposite_words(black_box, vocabulary, Label::negative, count)) {}

  // Words to insert against a decision of class `cls`.
  const std::vector<std::string>& strong_words(Label cls) const {
    return cls == Label::positive ? for_positive_ : for_negative_;
  }

  EditResult edit(const TokenSequence& query, Label query_class, Rng& rng) const {
    return baseline_edit(query, strong_words(query_class), max_drops_, rng);
  }

 private:
  std::size_t max_drops_;
  std::vector<std::string> for_positive_;
  std::vector<std::string> for_negative_;
};

struct EditOutcome {
  TokenSequence edited;
  std::size_t operations = 0;
  double confidence_drop = 0.0;  // p_y(original) - p_y(edited), y the original decision
};

struct InstanceEvaluation {
  std::size_t index = 0;
  TokenSequence query;
  ConfidenceVector original;
  Label label = Label::positive;
  std::optional<std::string> error;  // explanation failure; instance excluded from aggregates
  EditOutcome guided;       // at eta
  EditOutcome guided_high;  // same explanation re-thresholded at eta_high
  EditOutcome baseline;
};

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t count = 0;
};

// Mean and population standard deviation.
inline Summary summarize(std::span<const double> values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(values.size()));
  return s;
}

struct MethodReport {
  Summary completeness;  // confidence drop
  Summary compactness;   // drop per operation, over instances with operations > 0
};

struct EvaluationReport {
  EvaluationConfig config;
  std::vector<InstanceEvaluation> instances;
  MethodReport guided;
  MethodReport guided_high;
  MethodReport baseline;
  double correctness = 0.0;  // guided compactness at eta_high minus at eta
  std::size_t failures = 0;
};

inline MethodReport aggregate(std::span<const InstanceEvaluation> rows, EditOutcome InstanceEvaluation::*which) {
  std::vector<double> drops, per_op;
  for (const auto& r : rows) {
    if (r.error) continue;
    const auto& o = r.*which;
    drops.push_back(o.confidence_drop);
    if (o.operations > 0) per_op.push_back(o.confidence_drop / static_cast<double>(o.operations));
  }
  return {summarize(drops), summarize(per_op)};
}

using ExplainFn = std::function<Explanation(const TokenSequence& query, std::uint64_t seed)>;

// Runs guided and baseline editing over a test set. Instance i explains
// with seed derive_seed(seed, 2i) and draws its baseline edit from
// derive_seed(seed, 2i + 1), so results do not depend on `jobs`.
inline EvaluationReport evaluate(std::span<const TokenSequence> test_set, const ExplainFn& explainer,
                                 const BlackBox& black_box, const BaselineEditor& baseline,
                                 const EvaluationConfig& cfg, std::size_t jobs = 1) {
  cfg.validate();
  if (test_set.empty()) throw InvalidArgument("evaluation needs a non-empty test set");
  EvaluationReport report;
  report.config = cfg;
  report.instances.resize(test_set.size());

  auto run_one = [&](std::size_t i) {
    auto& row = report.instances[i];
    row.index = i;
    row.query = test_set[i];
    row.original = black_box.predict(row.query);
    row.label = row.original.label();
    const double before = row.original.of(row.label);
    auto outcome = [&](EditResult e) {
      const double after = black_box.predict(e.edited).of(row.label);
      return EditOutcome{std::move(e.edited), e.operations, before - after};
    };

    Rng baseline_rng(derive_seed(cfg.seed, 2 * i + 1));
    row.baseline = outcome(baseline.edit(row.query, row.label, baseline_rng));
    try {
      const auto ex = explainer(row.query, derive_seed(cfg.seed, 2 * i));
      row.guided = outcome(guided_edit(row.query, ex.importances, cfg.eta, *ex.context));
      row.guided_high = outcome(guided_edit(row.query, ex.importances, cfg.eta_high, *ex.context));
    } catch (const Error& e) {
      row.error = e.what();
    }
  };

  jobs = std::max<std::size_t>(1, std::min(jobs, test_set.size()));
  if (jobs == 1) {
    for (std::size_t i = 0; i < test_set.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < test_set.size(); i = next++) {
          try {
            run_one(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : workers) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  for (const auto& r : report.instances) report.failures += r.error ? 1 : 0;
  report.guided = aggregate(report.instances, &InstanceEvaluation::guided);
  report.guided_high = aggregate(report.instances, &InstanceEvaluation::guided_high);
  report.baseline = aggregate(report.instances, &InstanceEvaluation::baseline);
  report.correctness = report.guided_high.compactness.mean - report.guided.compactness.mean;
  return report;
}

}  // namespace proxplain
