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

// Tables of slot name/value pairs and whitespace-preserving sentences.
//
// A table is written in the E2E meaning-representation syntax
//
//   name[The Mill], area[riverside], familyFriendly[yes]
//
// and linearized for conditional models without the commas:
//
//   name[The Mill]area[riverside]familyfriendly[yes]
//
// Sentences keep the exact whitespace of their source text so that
// detokenize(tokenize(x)) == x for any input.

#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "s2l/error.hpp"

namespace s2l {

// ---------------------------------------------------------------------------
// Text helpers

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

// Punctuation split off the edges of whitespace-delimited words.
inline bool is_edge_punct(char c) {
  return c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':';
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

// Lowercases ASCII and the Latin-1 supplement block (U+00C0..U+00DE) of
// UTF-8 text. Everything else passes through unchanged.
inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto c = static_cast<unsigned char>(out[i]);
    if (c >= 'A' && c <= 'Z') {
      out[i] = static_cast<char>(c + ('a' - 'A'));
    } else if (c == 0xC3 && i + 1 < out.size()) {
      auto d = static_cast<unsigned char>(out[i + 1]);
      if (d >= 0x80 && d <= 0x9E && d != 0x97) {
        out[i + 1] = static_cast<char>(d + 0x20);
      }
      ++i;
    }
  }
  return out;
}

inline bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && to_lower(a) == to_lower(b);
}

// "yes"/"no" style values are too promiscuous for verbatim matching.
inline bool is_boolean_value(std::string_view value) {
  const std::string v = to_lower(trim(value));
  return v == "yes" || v == "no";
}

// ---------------------------------------------------------------------------
// Tables

struct Slot {
  std::string name;
  std::string value;

  friend bool operator==(const Slot &, const Slot &) = default;
};

struct Table {
  std::vector<Slot> slots;
  std::optional<std::string> sample_id;

  std::size_t size() const { return slots.size(); }

  const Slot *find(std::string_view name) const {
    for (const Slot &s : slots) {
      if (s.name == name) return &s;
    }
    return nullptr;
  }

  bool has(std::string_view name) const { return find(name) != nullptr; }

  // Slot content only; sample ids do not take part in equality.
  friend bool operator==(const Table &a, const Table &b) {
    return a.slots == b.slots;
  }
};

// Parses "name[value], name[value]" (commas optional). Names are trimmed
// and lowercased; values are trimmed.
inline Table parse_mr(std::string_view text) {
  Table table;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto skip_separators = [&] {
    while (i < n && (is_space(text[i]) || text[i] == ',')) ++i;
  };
  skip_separators();
  while (i < n) {
    std::size_t open = text.find('[', i);
    if (open == std::string_view::npos) {
      throw MalformedMR("missing '[' after \"" + std::string(text.substr(i)) +
                        "\"");
    }
    std::string_view raw_name = text.substr(i, open - i);
    if (raw_name.find_first_of("],") != std::string_view::npos) {
      throw MalformedMR("unbalanced brackets near \"" + std::string(raw_name) +
                        "\"");
    }
    std::string name = to_lower(trim(raw_name));
    if (name.empty()) throw MalformedMR("empty slot name");
    std::size_t close = text.find(']', open + 1);
    if (close == std::string_view::npos) {
      throw MalformedMR("missing ']' for slot \"" + name + "\"");
    }
    std::string_view raw_value = text.substr(open + 1, close - open - 1);
    if (raw_value.find('[') != std::string_view::npos) {
      throw MalformedMR("nested '[' in value of slot \"" + name + "\"");
    }
    std::string value = trim(raw_value);
    if (value.empty()) throw MalformedMR("empty value for slot \"" + name + "\"");
    if (table.has(name)) throw MalformedMR("repeated slot \"" + name + "\"");
    table.slots.push_back({std::move(name), std::move(value)});
    i = close + 1;
    skip_separators();
  }
  if (table.slots.empty()) throw MalformedMR("no slots");
  return table;
}

// "name1[value1]name2[value2]..." in slot order.
inline std::string linearize(const Table &table) {
  std::string out;
  for (const Slot &s : table.slots) {
    out += s.name;
    out += '[';
    out += s.value;
    out += ']';
  }
  return out;
}

// Comma-separated form used in corpus files.
inline std::string format_mr(const Table &table) {
  std::string out;
  for (std::size_t i = 0; i < table.slots.size(); ++i) {
    if (i > 0) out += ", ";
    out += table.slots[i].name + "[" + table.slots[i].value + "]";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sentences

struct Token {
  std::string text;
  std::string space;  // whitespace that followed the token in the source

  friend bool operator==(const Token &, const Token &) = default;
};

struct Sentence {
  std::string leading;  // whitespace before the first token
  std::vector<Token> tokens;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }

  std::vector<std::string> words() const {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const Token &t : tokens) out.push_back(t.text);
    return out;
  }

  // Builds a sentence with conventional spacing: one space between tokens,
  // none before edge punctuation, none after the last token.
  static Sentence from_words(std::span<const std::string> words) {
    Sentence s;
    for (std::size_t i = 0; i < words.size(); ++i) {
      bool next_is_punct = i + 1 < words.size() && words[i + 1].size() == 1 &&
                           is_edge_punct(words[i + 1][0]);
      bool last = i + 1 == words.size();
      s.tokens.push_back({words[i], (last || next_is_punct) ? "" : " "});
    }
    return s;
  }

  friend bool operator==(const Sentence &, const Sentence &) = default;
};

inline Sentence tokenize(std::string_view text) {
  Sentence s;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n && is_space(text[i])) ++i;
  s.leading = std::string(text.substr(0, i));
  while (i < n) {
    std::size_t word_end = i;
    while (word_end < n && !is_space(text[word_end])) ++word_end;
    std::size_t space_end = word_end;
    while (space_end < n && is_space(text[space_end])) ++space_end;

    std::string_view word = text.substr(i, word_end - i);
    std::size_t b = 0, e = word.size();
    while (b < e && is_edge_punct(word[b])) ++b;
    if (b == e) {
      // Pure punctuation: one token per character.
      for (std::size_t k = 0; k < word.size(); ++k) {
        s.tokens.push_back({std::string(1, word[k]), ""});
      }
    } else {
      while (e > b && is_edge_punct(word[e - 1])) --e;
      for (std::size_t k = 0; k < b; ++k) {
        s.tokens.push_back({std::string(1, word[k]), ""});
      }
      s.tokens.push_back({std::string(word.substr(b, e - b)), ""});
      for (std::size_t k = e; k < word.size(); ++k) {
        s.tokens.push_back({std::string(1, word[k]), ""});
      }
    }
    s.tokens.back().space = std::string(text.substr(word_end, space_end - word_end));
    i = space_end;
  }
  return s;
}

inline std::string detokenize(const Sentence &s) {
  std::string out = s.leading;
  for (const Token &t : s.tokens) {
    out += t.text;
    out += t.space;
  }
  return out;
}

// Position of the first case-insensitive whole-token occurrence of `needle`
// in `haystack` at or after `from`, or npos. An empty needle never matches.
inline std::size_t find_tokens(std::span<const std::string> haystack,
                               std::span<const std::string> needle,
                               std::size_t from = 0) {
  if (needle.empty() || needle.size() > haystack.size()) return std::string::npos;
  std::vector<std::string> lowered_needle;
  for (const auto &w : needle) lowered_needle.push_back(to_lower(w));
  for (std::size_t i = from; i + needle.size() <= haystack.size(); ++i) {
    bool ok = true;
    for (std::size_t k = 0; k < needle.size() && ok; ++k) {
      ok = to_lower(haystack[i + k]) == lowered_needle[k];
    }
    if (ok) return i;
  }
  return std::string::npos;
}

inline bool contains_phrase(const Sentence &sentence, const Sentence &phrase) {
  const auto hay = sentence.words();
  const auto needle = phrase.words();
  return find_tokens(hay, needle) != std::string::npos;
}

// ---------------------------------------------------------------------------
// Delexicalization

inline std::string placeholder_for(std::string_view slot_name) {
  std::string p = "__";
  for (char c : slot_name) p += (c == ' ') ? '_' : c;
  p += "__";
  return p;
}

inline bool is_placeholder(std::string_view token) {
  return token.size() > 4 && token.starts_with("__") && token.ends_with("__");
}

struct DelexSentence {
  std::string leading;
  std::vector<Token> tokens;
  // placeholder -> slot value it stands for
  std::map<std::string, std::string> binding;
  // Source tokens replaced by each placeholder occurrence, in order.
  std::vector<std::vector<Token>> surfaces;

  std::vector<std::string> words() const {
    std::vector<std::string> out;
    for (const Token &t : tokens) out.push_back(t.text);
    return out;
  }

  // Exact inverse of delexicalize, including the original casing.
  Sentence restore() const {
    Sentence s;
    s.leading = leading;
    std::size_t next = 0;
    for (const Token &t : tokens) {
      if (is_placeholder(t.text) && binding.count(t.text) && next < surfaces.size()) {
        for (const Token &u : surfaces[next]) s.tokens.push_back(u);
        ++next;
      } else {
        s.tokens.push_back(t);
      }
    }
    return s;
  }
};

// Replaces every maximal, non-overlapping, case-insensitive whole-token
// occurrence of each non-boolean slot value with the slot's placeholder.
// Longer values are claimed first; equal lengths go by table order.
inline DelexSentence delexicalize(const Sentence &sentence, const Table &table) {
  struct Candidate {
    std::size_t slot_index;
    std::vector<std::string> words;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < table.slots.size(); ++i) {
    if (is_boolean_value(table.slots[i].value)) continue;
    auto words = tokenize(table.slots[i].value).words();
    if (!words.empty()) candidates.push_back({i, std::move(words)});
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate &a, const Candidate &b) {
                     return a.words.size() > b.words.size();
                   });

  const auto hay = sentence.words();
  // claim[i] = slot index + 1 at the start of a claimed span, or
  // a sentinel for interior tokens of a span.
  constexpr std::size_t kFree = 0;
  constexpr std::size_t kInterior = static_cast<std::size_t>(-1);
  std::vector<std::size_t> claim(hay.size(), kFree);
  std::vector<std::size_t> span_len(hay.size(), 0);
  for (const Candidate &c : candidates) {
    std::size_t pos = 0;
    while ((pos = find_tokens(hay, c.words, pos)) != std::string::npos) {
      bool free = true;
      for (std::size_t k = 0; k < c.words.size() && free; ++k) {
        free = claim[pos + k] == kFree;
      }
      if (!free) {
        ++pos;
        continue;
      }
      claim[pos] = c.slot_index + 1;
      span_len[pos] = c.words.size();
      for (std::size_t k = 1; k < c.words.size(); ++k) claim[pos + k] = kInterior;
      pos += c.words.size();
    }
  }

  DelexSentence d;
  d.leading = sentence.leading;
  for (std::size_t i = 0; i < hay.size();) {
    if (claim[i] == kFree) {
      d.tokens.push_back(sentence.tokens[i]);
      ++i;
      continue;
    }
    const Slot &slot = table.slots[claim[i] - 1];
    std::string ph = placeholder_for(slot.name);
    std::size_t len = span_len[i];
    d.tokens.push_back({ph, sentence.tokens[i + len - 1].space});
    d.binding[ph] = slot.value;
    d.surfaces.emplace_back(sentence.tokens.begin() + static_cast<std::ptrdiff_t>(i),
                            sentence.tokens.begin() + static_cast<std::ptrdiff_t>(i + len));
    i += len;
  }
  return d;
}

inline const Slot *slot_for_placeholder(const Table &table,
                                        std::string_view placeholder) {
  for (const Slot &s : table.slots) {
    if (placeholder_for(s.name) == placeholder) return &s;
  }
  return nullptr;
}

// Replaces each placeholder with the tokens of its slot value in `table`.
inline Sentence relexicalize(const DelexSentence &d, const Table &table) {
  Sentence s;
  s.leading = d.leading;
  for (const Token &t : d.tokens) {
    if (!is_placeholder(t.text)) {
      s.tokens.push_back(t);
      continue;
    }
    const Slot *slot = slot_for_placeholder(table, t.text);
    if (slot == nullptr) throw UnboundPlaceholder(t.text);
    Sentence value = tokenize(slot->value);
    value.tokens.back().space = t.space;
    for (Token &u : value.tokens) s.tokens.push_back(std::move(u));
  }
  return s;
}

// Convenience overload for generated token sequences.
inline Sentence relexicalize(std::span<const std::string> delex_words,
                             const Table &table) {
  DelexSentence d;
  Sentence spaced = Sentence::from_words(delex_words);
  d.tokens = std::move(spaced.tokens);
  return relexicalize(d, table);
}

}  // namespace s2l
