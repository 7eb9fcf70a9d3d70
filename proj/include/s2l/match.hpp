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

// Slot coverage checks.
//
// Hard match: a slot is covered when its value occurs as a case-insensitive
// whole-token subsequence of the output.
//
// Soft match: regular expressions classify every slot as covered, wrong
// (a different value of the same slot is mentioned) or missing, and detect
// slots mentioned although absent from the table (added). These counts
// give the slot error rate
//
//   SER = (#added + #missing + #wrong) / #slots
//
// which is pooled over a corpus before dividing.

#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <regex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/rational.hpp>

#include "s2l/error.hpp"
#include "s2l/fields.hpp"
#include "s2l/tabular.hpp"
#include "s2l/templates.hpp"

namespace s2l {

using Rational = boost::rational<std::int64_t>;

inline double to_double(const Rational &r) {
  return boost::rational_cast<double>(r);
}

// ---------------------------------------------------------------------------
// Hard match

// Slots whose required surface is not in `sentence`, in table order. With a
// RuleSet, boolean-like slots are checked via their rendered phrase.
inline std::vector<Slot> find_missing_hard(const Table &table,
                                           const Sentence &sentence,
                                           const RuleSet *rules = nullptr) {
  std::vector<Slot> missing;
  const auto hay = sentence.words();
  for (const Slot &slot : table.slots) {
    const auto needle = required_surface(slot, rules).words();
    if (find_tokens(hay, needle) == std::string::npos) missing.push_back(slot);
  }
  return missing;
}

using Sample = std::pair<Table, Sentence>;

// Micro-averaged fraction of slots that are hard-present.
inline Rational corpus_coverage(std::span<const Sample> samples,
                                const RuleSet *rules = nullptr) {
  if (samples.empty()) throw EmptyCorpus("no samples");
  std::int64_t total = 0, missing = 0;
  for (const auto &[table, sentence] : samples) {
    total += static_cast<std::int64_t>(table.size());
    missing += static_cast<std::int64_t>(find_missing_hard(table, sentence, rules).size());
  }
  if (total == 0) throw EmptyCorpus("no slots");
  return Rational(total - missing, total);
}

// ---------------------------------------------------------------------------
// Soft match

inline std::string regex_escape(std::string_view s) {
  static const std::string kSpecial = R"(\^$.|?*+()[]{})";
  std::string out;
  for (char c : s) {
    if (kSpecial.find(c) != std::string::npos) out += '\\';
    out += c;
  }
  return out;
}

inline std::regex compile_pattern(const std::string &source) {
  try {
    return std::regex(source, std::regex::ECMAScript | std::regex::icase);
  } catch (const std::regex_error &e) {
    throw PatternError("\"" + source + "\": " + e.what());
  }
}

// Whole-word, case-insensitive match of the literal value.
inline std::string implicit_pattern(std::string_view value) {
  return "(^|\\W)" + regex_escape(to_lower(trim(value))) + "($|\\W)";
}

struct CompiledPattern {
  std::string source;
  std::regex regex;

  bool search(const std::string &text) const { return std::regex_search(text, regex); }
};

class MatchPatterns {
 public:
  struct ValueEntry {
    std::string value;  // lowercased
    std::vector<CompiledPattern> patterns;
  };

  void add_value_pattern(const std::string &slot, const std::string &value,
                         const std::string &source) {
    auto &entries = values_[to_lower(slot)];
    const std::string v = to_lower(trim(value));
    ValueEntry *entry = nullptr;
    for (auto &e : entries) {
      if (e.value == v) entry = &e;
    }
    if (entry == nullptr) {
      entries.push_back({v, {}});
      entry = &entries.back();
    }
    entry->patterns.push_back({source, compile_pattern(source)});
  }

  void add_detector(const std::string &slot, const std::string &source) {
    const std::string name = to_lower(slot);
    if (!detectors_.count(name)) detector_order_.push_back(name);
    detectors_[name].push_back({source, compile_pattern(source)});
  }

  // Explicit entries for `slot`, in file order.
  const std::vector<ValueEntry> &value_entries(const std::string &slot) const {
    static const std::vector<ValueEntry> kNone;
    auto it = values_.find(slot);
    return it == values_.end() ? kNone : it->second;
  }

  const std::vector<std::string> &detector_slots() const { return detector_order_; }

  const std::vector<CompiledPattern> &detectors(const std::string &slot) const {
    static const std::vector<CompiledPattern> kNone;
    auto it = detectors_.find(slot);
    return it == detectors_.end() ? kNone : it->second;
  }

 private:
  std::map<std::string, std::vector<ValueEntry>> values_;
  std::map<std::string, std::vector<CompiledPattern>> detectors_;
  std::vector<std::string> detector_order_;
};

// Pattern file: `slot=<name>; value=<v>; pattern=<regex>` or
// `slot=<name>; detect=<regex>`. Matching is always case-insensitive.
inline MatchPatterns parse_patterns(std::istream &in) {
  MatchPatterns patterns;
  for (const auto &[line_no, line] : detail::content_lines(in)) {
    auto fields = detail::parse_fields(line, line_no, {"pattern", "detect"});
    const std::string *slot = detail::field(fields, "slot");
    const std::string *value = detail::field(fields, "value");
    const std::string *pattern = detail::field(fields, "pattern");
    const std::string *detect = detail::field(fields, "detect");
    if (slot == nullptr || slot->empty()) throw RuleSyntax(line_no, "missing slot=");
    if (value && pattern && !detect && fields.size() == 3 && !value->empty() &&
        !pattern->empty()) {
      patterns.add_value_pattern(*slot, *value, *pattern);
    } else if (detect && !value && !pattern && fields.size() == 2 && !detect->empty()) {
      patterns.add_detector(*slot, *detect);
    } else {
      throw RuleSyntax(line_no, "expected slot/value/pattern or slot/detect");
    }
  }
  return patterns;
}

inline MatchPatterns load_patterns(const std::string &path) {
  std::ifstream in = detail::open_input(path);
  return parse_patterns(in);
}

struct MatchReport {
  std::vector<Slot> missing;
  std::vector<std::string> added;
  std::vector<Slot> wrong;
  std::size_t n_slots = 0;
};

inline MatchReport classify_soft(const Table &table, const Sentence &sentence,
                                 const MatchPatterns &patterns) {
  const std::string text = to_lower(detokenize(sentence));
  MatchReport report;
  report.n_slots = table.size();
  for (const Slot &slot : table.slots) {
    const std::string value = to_lower(trim(slot.value));
    const auto &entries = patterns.value_entries(slot.name);
    const MatchPatterns::ValueEntry *own = nullptr;
    for (const auto &e : entries) {
      if (e.value == value) own = &e;
    }
    bool covered = false;
    if (own != nullptr) {
      for (const auto &p : own->patterns) covered = covered || p.search(text);
    } else {
      covered = std::regex_search(text, compile_pattern(implicit_pattern(value)));
    }
    if (covered) continue;
    bool wrong = false;
    for (const auto &e : entries) {
      if (&e == own) continue;
      for (const auto &p : e.patterns) wrong = wrong || p.search(text);
    }
    (wrong ? report.wrong : report.missing).push_back(slot);
  }
  for (const std::string &name : patterns.detector_slots()) {
    if (table.has(name)) continue;
    for (const auto &p : patterns.detectors(name)) {
      if (p.search(text)) {
        report.added.push_back(name);
        break;
      }
    }
  }
  return report;
}

// Pooled slot error counts.
struct ErrorCounts {
  std::int64_t added = 0;
  std::int64_t missing = 0;
  std::int64_t wrong = 0;
  std::int64_t slots = 0;

  ErrorCounts &operator+=(const MatchReport &r) {
    added += static_cast<std::int64_t>(r.added.size());
    missing += static_cast<std::int64_t>(r.missing.size());
    wrong += static_cast<std::int64_t>(r.wrong.size());
    slots += static_cast<std::int64_t>(r.n_slots);
    return *this;
  }

  void require_slots() const {
    if (slots <= 0) throw ZeroSlots("slot error rate over zero slots");
  }
  Rational added_rate() const { require_slots(); return Rational(added, slots); }
  Rational missing_rate() const { require_slots(); return Rational(missing, slots); }
  Rational wrong_rate() const { require_slots(); return Rational(wrong, slots); }
  Rational ser() const {
    require_slots();
    return Rational(added + missing + wrong, slots);
  }
  Rational soft_coverage() const { return Rational(1) - ser(); }
};

inline Rational ser(const MatchReport &report) {
  ErrorCounts c;
  c += report;
  return c.ser();
}

}  // namespace s2l
