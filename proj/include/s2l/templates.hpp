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

// Slot-conditioned phrase rules used to verbalize a missing slot before it
// is inserted into a sentence. Rule files hold one rule per line:
//
//   slot=area; when=always; phrase=in {SV} area
//   slot=familyFriendly; when=value_equals(yes); phrase=family friendly
//   slot=pricerange; when=value_is_numeric; phrase=price range {SV}
//
// Rules are tried in file order; the first whose slot and condition match
// wins. A slot without a matching rule renders as its bare value.

#pragma once

#include <algorithm>
#include <cctype>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "s2l/error.hpp"
#include "s2l/fields.hpp"
#include "s2l/tabular.hpp"

namespace s2l {

inline constexpr std::string_view kValueMarker = "{SV}";

struct Condition {
  enum class Kind { kAlways, kValueEquals, kValueIn, kNumeric, kNonNumeric };

  Kind kind = Kind::kAlways;
  std::vector<std::string> values;  // lowercased; used by kValueEquals/kValueIn

  bool matches(std::string_view value) const {
    switch (kind) {
      case Kind::kAlways:
        return true;
      case Kind::kValueEquals:
      case Kind::kValueIn: {
        const std::string v = to_lower(trim(value));
        return std::find(values.begin(), values.end(), v) != values.end();
      }
      case Kind::kNumeric:
        return std::any_of(value.begin(), value.end(),
                           [](char c) { return c >= '0' && c <= '9'; });
      case Kind::kNonNumeric:
        return std::none_of(value.begin(), value.end(),
                            [](char c) { return c >= '0' && c <= '9'; });
    }
    return false;
  }

  std::string to_string() const {
    auto join = [this] {
      std::string s;
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) s += ",";
        s += values[i];
      }
      return s;
    };
    switch (kind) {
      case Kind::kAlways: return "always";
      case Kind::kValueEquals: return "value_equals(" + join() + ")";
      case Kind::kValueIn: return "value_in(" + join() + ")";
      case Kind::kNumeric: return "value_is_numeric";
      case Kind::kNonNumeric: return "value_is_non_numeric";
    }
    return "";
  }

  friend bool operator==(const Condition &, const Condition &) = default;
};

inline Condition parse_condition(std::string_view text, std::size_t line_no) {
  const std::string t = trim(text);
  Condition c;
  if (t == "always") return c;
  if (t == "value_is_numeric") {
    c.kind = Condition::Kind::kNumeric;
    return c;
  }
  if (t == "value_is_non_numeric") {
    c.kind = Condition::Kind::kNonNumeric;
    return c;
  }
  auto args = [&](std::string_view prefix) -> std::vector<std::string> {
    if (!t.starts_with(prefix) || t.back() != ')') {
      throw RuleSyntax(line_no, "unknown condition \"" + t + "\"");
    }
    std::string inner = t.substr(prefix.size(), t.size() - prefix.size() - 1);
    std::vector<std::string> out;
    std::stringstream ss(inner);
    std::string item;
    while (std::getline(ss, item, ',')) {
      std::string v = to_lower(trim(item));
      if (v.empty()) throw RuleSyntax(line_no, "empty value in \"" + t + "\"");
      out.push_back(std::move(v));
    }
    if (out.empty()) throw RuleSyntax(line_no, "no values in \"" + t + "\"");
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  };
  if (t.starts_with("value_equals(")) {
    c.kind = Condition::Kind::kValueEquals;
    c.values = args("value_equals(");
    if (c.values.size() != 1) {
      throw RuleSyntax(line_no, "value_equals takes exactly one value");
    }
    return c;
  }
  if (t.starts_with("value_in(")) {
    c.kind = Condition::Kind::kValueIn;
    c.values = args("value_in(");
    return c;
  }
  throw RuleSyntax(line_no, "unknown condition \"" + t + "\"");
}

struct PhraseRule {
  std::string slot_name;  // lowercased
  Condition condition;
  std::string pattern;  // may contain {SV} any number of times

  std::string apply(std::string_view value) const {
    std::string out;
    std::size_t i = 0;
    while (true) {
      std::size_t at = pattern.find(kValueMarker, i);
      if (at == std::string::npos) {
        out += pattern.substr(i);
        return out;
      }
      out += pattern.substr(i, at - i);
      out += value;
      i = at + kValueMarker.size();
    }
  }
};

class RuleSet {
 public:
  RuleSet() = default;

  // Throws DuplicateRule if (slot, condition) is already present.
  void add(PhraseRule rule) {
    for (const PhraseRule &r : rules_) {
      if (r.slot_name == rule.slot_name && r.condition == rule.condition) {
        throw DuplicateRule("slot=" + rule.slot_name +
                            "; when=" + rule.condition.to_string());
      }
    }
    rules_.push_back(std::move(rule));
  }

  const std::vector<PhraseRule> &rules() const { return rules_; }
  bool empty() const { return rules_.empty(); }

  const PhraseRule *match(const Slot &slot) const {
    for (const PhraseRule &r : rules_) {
      if (r.slot_name == slot.name && r.condition.matches(slot.value)) return &r;
    }
    return nullptr;
  }

 private:
  std::vector<PhraseRule> rules_;
};

inline RuleSet parse_rules(std::istream &in) {
  RuleSet set;
  for (const auto &[line_no, line] : detail::content_lines(in)) {
    auto fields = detail::parse_fields(line, line_no, {"phrase"});
    const std::string *slot = detail::field(fields, "slot");
    const std::string *when = detail::field(fields, "when");
    const std::string *phrase = detail::field(fields, "phrase");
    if (slot == nullptr || when == nullptr || phrase == nullptr || fields.size() != 3) {
      throw RuleSyntax(line_no, "expected slot=..; when=..; phrase=..");
    }
    PhraseRule rule;
    rule.slot_name = to_lower(trim(*slot));
    if (rule.slot_name.empty() ||
        rule.slot_name.find_first_of("[],") != std::string::npos) {
      throw RuleSyntax(line_no, "bad slot name \"" + *slot + "\"");
    }
    rule.condition = parse_condition(*when, line_no);
    rule.pattern = *phrase;
    if (trim(rule.pattern).empty()) throw RuleSyntax(line_no, "empty phrase");
    set.add(std::move(rule));
  }
  return set;
}

inline RuleSet load_rules(const std::string &path) {
  std::ifstream in = detail::open_input(path);
  return parse_rules(in);
}

// Phrase that verbalizes `slot`; the bare value when no rule matches.
inline Sentence render(const RuleSet &rules, const Slot &slot) {
  if (const PhraseRule *r = rules.match(slot)) return tokenize(r->apply(slot.value));
  return tokenize(slot.value);
}

// Token sequence whose presence marks `slot` as verbalized. Boolean-like
// values are represented by their rendered phrase; everything else by the
// value itself.
inline Sentence required_surface(const Slot &slot, const RuleSet *rules) {
  if (rules != nullptr && is_boolean_value(slot.value)) return render(*rules, slot);
  return tokenize(slot.value);
}

}  // namespace s2l
