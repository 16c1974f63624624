#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "proxplain/error.hpp"
#include "proxplain/model.hpp"
#include "proxplain/neighborhood.hpp"
#include "proxplain/text.hpp"

namespace proxplain {

// Windowed co-occurrence statistics over neighborhood texts.
//
// P(w | u) is the fraction of occurrences of u that have w somewhere within
// `window` positions on either side. Offsets are pooled into one window.
class ContextModel {
 public:
  ContextModel(std::size_t window = 2, double epsilon = 1e-6) : window_(window), epsilon_(epsilon) {
    if (window == 0) throw InvalidArgument("context window must be positive");
    if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  }

  void add(const TokenSequence& text) {
    const std::size_t n = text.size();
    for (std::size_t i = 0; i < n; ++i) {
      auto& entry = stats_[text[i]];
      ++entry.occurrences;
      const std::size_t lo = i >= window_ ? i - window_ : 0;
      const std::size_t hi = std::min(n - 1, i + window_);
      // Each distinct neighbor word counts once per occurrence of text[i].
      std::vector<const std::string*> seen;
      for (std::size_t j = lo; j <= hi; ++j) {
        if (j == i) continue;
        bool dup = false;
        for (const auto* s : seen) dup = dup || *s == text[j];
        if (dup) continue;
        seen.push_back(&text[j]);
        ++entry.cooccurrences[text[j]];
      }
    }
  }

  double probability(const std::string& word, const std::string& context) const {
    auto it = stats_.find(context);
    if (it == stats_.end() || it->second.occurrences == 0) return 0.0;
    auto jt = it->second.cooccurrences.find(word);
    if (jt == it->second.cooccurrences.end()) return 0.0;
    return static_cast<double>(jt->second) / static_cast<double>(it->second.occurrences);
  }

  std::size_t occurrences(const std::string& token) const {
    auto it = stats_.find(token);
    return it == stats_.end() ? 0 : it->second.occurrences;
  }

  std::size_t window() const noexcept { return window_; }
  double epsilon() const noexcept { return epsilon_; }

 private:
  struct Entry {
    std::size_t occurrences = 0;
    std::unordered_map<std::string, std::size_t> cooccurrences;
  };

  std::size_t window_;
  double epsilon_;
  std::unordered_map<std::string, Entry> stats_;
};

inline ContextModel build_context_model(std::span<const Neighbor> neighbors, std::size_t window = 2,
                                        double epsilon = 1e-6) {
  ContextModel ctx(window, epsilon);
  for (const auto& nb : neighbors) ctx.add(nb.text);
  return ctx;
}

enum class EditOp { insert, replace };

constexpr std::string_view to_string(EditOp op) noexcept { return op == EditOp::insert ? "insert" : "replace"; }

// A candidate single-token edit of a text. For insertions `position` is the
// gap index in [0, |text|]; for replacements the token index.
struct EditCandidate {
  EditOp op = EditOp::insert;
  std::size_t position = 0;
  double score = 0.0;
};

struct Edition {
  TokenSequence edited;
  EditOp op = EditOp::insert;
  std::size_t position = 0;
  std::string word;
  double score = 0.0;
  ConfidenceVector new_confidence;
  bool flipped = false;
};

// Sum over the in-bounds context of log(P(word | context token) + epsilon).
// The context is up to `window` tokens before and after the edited slot.
inline double edit_score(const TokenSequence& text, const std::string& word, EditOp op, std::size_t position,
                         const ContextModel& ctx) {
  const std::size_t l = ctx.window();
  const std::size_t n = text.size();
  // Half-open ranges of tokens before and after the slot.
  const std::size_t before_end = position;
  const std::size_t after_begin = op == EditOp::insert ? position : position + 1;
  double score = 0.0;
  for (std::size_t j = before_end >= l ? before_end - l : 0; j < before_end; ++j) {
    score += std::log(ctx.probability(word, text[j]) + ctx.epsilon());
  }
  for (std::size_t j = after_begin; j < std::min(n, after_begin + l); ++j) {
    score += std::log(ctx.probability(word, text[j]) + ctx.epsilon());
  }
  return score;
}

// Every admissible edit in tie-break order: insertion at gap i, then
// replacement at token i, for i = 0, 1, ... Replacing a token by itself is
// not an edit and is skipped.
inline std::vector<EditCandidate> edit_candidates(const TokenSequence& text, const std::string& word,
                                                  const ContextModel& ctx, bool insertions_only = false) {
  std::vector<EditCandidate> out;
  out.reserve(2 * text.size() + 1);
  for (std::size_t i = 0; i <= text.size(); ++i) {
    out.push_back({EditOp::insert, i, edit_score(text, word, EditOp::insert, i, ctx)});
    if (insertions_only || i == text.size() || text[i] == word) continue;
    out.push_back({EditOp::replace, i, edit_score(text, word, EditOp::replace, i, ctx)});
  }
  return out;
}

inline EditCandidate best_candidate(const TokenSequence& text, const std::string& word, const ContextModel& ctx,
                                    bool insertions_only = false) {
  if (text.empty()) throw InvalidArgument("cannot edit an empty text");
  const auto all = edit_candidates(text, word, ctx, insertions_only);
  EditCandidate best = all.front();
  for (const auto& c : all) {
    if (c.score > best.score) best = c;
  }
  return best;
}

inline TokenSequence apply(const TokenSequence& text, const std::string& word, const EditCandidate& c) {
  return c.op == EditOp::insert ? text.inserted(c.position, word) : text.replaced(c.position, word);
}

// The likeliest single insertion or replacement of `word` into `query`
// under the neighborhood context model, scored afresh by the black box.
inline Edition best_edition(const TokenSequence& query, const std::string& word, const ContextModel& ctx,
                            const BlackBox& black_box) {
  if (query.empty()) throw InvalidArgument("cannot edit an empty text");
  const auto original = black_box.predict(query).label();
  const auto best = best_candidate(query, word, ctx);
  Edition e;
  e.edited = apply(query, word, best);
  e.op = best.op;
  e.position = best.position;
  e.word = word;
  e.score = best.score;
  e.new_confidence = black_box.predict(e.edited);
  e.flipped = e.new_confidence.label() != original;
  return e;
}

}  // namespace proxplain
