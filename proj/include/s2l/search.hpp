// Copyright 2026 The s2l Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Greedy insertion search. An output that misses slots is repaired one slot
// at a time (table order): the slot's phrase is tried at every token
// boundary and the candidate the scorer likes best is kept. Earlier
// insertions are never revisited.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "s2l/error.hpp"
#include "s2l/lm.hpp"
#include "s2l/match.hpp"
#include "s2l/tabular.hpp"
#include "s2l/templates.hpp"

namespace s2l {

struct InsertionStep {
  std::string slot;
  std::string phrase;
  std::size_t position = 0;
  double score = 0.0;
  std::size_t candidates = 0;

  nlohmann::json to_json() const {
    return {{"slot", slot},
            {"phrase", phrase},
            {"position", position},
            {"score", score},
            {"candidates", candidates}};
  }
};

struct InsertionTrace {
  std::vector<InsertionStep> steps;
};

struct InsertionResult {
  Sentence sentence;
  std::size_t position = 0;
  double score = 0.0;
  InsertionStep row;
};

// `sentence` with `phrase` placed before token `pos` (pos == size appends).
// Token texts are untouched; only the whitespace around the seam changes.
inline Sentence insert_at(const Sentence &sentence, const Sentence &phrase, std::size_t pos) {
  const std::size_t n = sentence.size();
  Sentence out;
  out.leading = sentence.leading;
  out.tokens.reserve(n + phrase.size());
  out.tokens.insert(out.tokens.end(), sentence.tokens.begin(),
                    sentence.tokens.begin() + static_cast<std::ptrdiff_t>(pos));
  std::vector<Token> inserted = phrase.tokens;
  for (std::size_t i = 0; i + 1 < inserted.size(); ++i) {
    if (inserted[i].space.empty() &&
        !(inserted[i + 1].text.size() == 1 && is_edge_punct(inserted[i + 1].text[0]))) {
      inserted[i].space = " ";
    }
  }
  if (pos < n) {
    const std::string &next = sentence.tokens[pos].text;
    inserted.back().space = (next.size() == 1 && is_edge_punct(next[0])) ? "" : " ";
  } else {
    inserted.back().space = n > 0 ? sentence.tokens[n - 1].space : "";
  }
  if (pos > 0) {
    Token &prev = out.tokens.back();
    if (pos == n || prev.space.empty()) prev.space = " ";
  }
  out.tokens.insert(out.tokens.end(), inserted.begin(), inserted.end());
  out.tokens.insert(out.tokens.end(),
                    sentence.tokens.begin() + static_cast<std::ptrdiff_t>(pos),
                    sentence.tokens.end());
  return out;
}

// All |sentence| + 1 insertion candidates, in position order.
inline std::vector<Sentence> insertion_candidates(const Sentence &sentence,
                                                  const Sentence &phrase) {
  std::vector<Sentence> out;
  out.reserve(sentence.size() + 1);
  for (std::size_t pos = 0; pos <= sentence.size(); ++pos) {
    out.push_back(insert_at(sentence, phrase, pos));
  }
  return out;
}

// Scores every insertion point as one batch and keeps the best; ties go to
// the smallest position.
inline InsertionResult best_insertion(Scorer &scorer, const Table &table,
                                      const Sentence &sentence, const Sentence &phrase) {
  if (phrase.empty()) throw UsageError("cannot insert an empty phrase");
  std::vector<Sentence> candidates = insertion_candidates(sentence, phrase);
  const std::vector<double> scores = scorer.score(table, candidates);
  if (scores.size() != candidates.size()) {
    throw Error(ErrorCategory::kRemote, "scorer returned wrong number of scores");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  InsertionResult r;
  r.sentence = std::move(candidates[best]);
  r.position = best;
  r.score = scores[best];
  r.row.phrase = detokenize(phrase);
  r.row.position = best;
  r.row.score = scores[best];
  r.row.candidates = scores.size();
  return r;
}

// Names of the slots that must be covered; nullopt means every slot.
using SlotFilter = std::optional<std::vector<std::string>>;

inline bool selected(const SlotFilter &filter, const std::string &name) {
  if (!filter) return true;
  for (const auto &n : *filter) {
    if (n == name) return true;
  }
  return false;
}

inline std::vector<Slot> missing_filtered(const Table &table, const Sentence &sentence,
                                          const RuleSet &rules, const SlotFilter &filter) {
  std::vector<Slot> out;
  for (Slot &s : find_missing_hard(table, sentence, &rules)) {
    if (selected(filter, s.name)) out.push_back(std::move(s));
  }
  return out;
}

struct ProjectionResult {
  Sentence sentence;
  InsertionTrace trace;
};

// Inserts the rendered phrase of every missing (filtered) slot, in table
// order, at the scorer-argmax position.
inline ProjectionResult project_to_feasible(Scorer &scorer, const Table &table,
                                            const Sentence &sentence, const RuleSet &rules,
                                            const SlotFilter &filter = std::nullopt) {
  ProjectionResult result{sentence, {}};
  for (const Slot &slot : missing_filtered(table, sentence, rules, filter)) {
    // An earlier phrase may already have covered this slot.
    if (find_missing_hard(Table{{slot}, {}}, result.sentence, &rules).empty()) continue;
    InsertionResult r = best_insertion(scorer, table, result.sentence, render(rules, slot));
    r.row.slot = slot.name;
    result.trace.steps.push_back(std::move(r.row));
    result.sentence = std::move(r.sentence);
  }
  return result;
}

// Slots of `table` that are common in the corpus tables (fraction of tables
// >= tau_table) and usually verbalized in their references (fraction of
// samples carrying the slot whose reference contains the value >= tau_ref).
inline std::vector<Slot> select_slots_by_stats(std::span<const Sample> corpus,
                                               const Table &table, double tau_table,
                                               double tau_ref,
                                               const RuleSet *rules = nullptr) {
  if (corpus.empty()) throw EmptyCorpus("slot statistics need a parallel corpus");
  if (tau_table < 0 || tau_table > 1 || tau_ref < 0 || tau_ref > 1) {
    throw UsageError("slot-selection thresholds must lie in [0, 1]");
  }
  std::vector<Slot> out;
  const double n_tables = static_cast<double>(corpus.size());
  for (const Slot &slot : table.slots) {
    std::size_t with_slot = 0, referenced = 0;
    for (const auto &[t, ref] : corpus) {
      const Slot *s = t.find(slot.name);
      if (s == nullptr) continue;
      ++with_slot;
      if (find_missing_hard(Table{{*s}, {}}, ref, rules).empty()) ++referenced;
    }
    const double table_frac = static_cast<double>(with_slot) / n_tables;
    const double ref_frac =
        with_slot == 0 ? 0.0 : static_cast<double>(referenced) / static_cast<double>(with_slot);
    if (table_frac >= tau_table && ref_frac >= tau_ref) out.push_back(slot);
  }
  return out;
}

inline SlotFilter slot_filter_for(std::span<const Sample> corpus, const Table &table,
                                  double tau_table, double tau_ref, const RuleSet *rules) {
  if (tau_table <= 0.0 && tau_ref <= 0.0) return std::nullopt;
  std::vector<std::string> names;
  for (const Slot &s : select_slots_by_stats(corpus, table, tau_table, tau_ref, rules)) {
    names.push_back(s.name);
  }
  return names;
}

}  // namespace s2l
