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

#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"

namespace s2l {
namespace {

using testing::random_e2e_table;
using testing::random_sentence;
using testing::random_table;
using testing::random_text;

TEST(ParseMr, ThreeSlotsInOrder) {
  Table t = parse_mr("name[The Mill], area[riverside], familyFriendly[yes]");
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t.slots[0].name, "name");
  EXPECT_EQ(t.slots[0].value, "The Mill");
  EXPECT_EQ(t.slots[1].name, "area");
  EXPECT_EQ(t.slots[2].name, "familyfriendly");
  EXPECT_EQ(t.slots[2].value, "yes");
}

TEST(ParseMr, SingleSlot) {
  Table t = parse_mr("area[riverside]");
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.slots[0].name, "area");
  EXPECT_EQ(t.slots[0].value, "riverside");
}

TEST(ParseMr, LinearizedFormParses) {
  EXPECT_EQ(parse_mr("name[The Mill]area[riverside]"),
            parse_mr("name[The Mill], area[riverside]"));
}

TEST(ParseMr, Rejects) {
  EXPECT_THROW(parse_mr("name[]"), MalformedMR);
  EXPECT_THROW(parse_mr(""), MalformedMR);
  EXPECT_THROW(parse_mr("name[x"), MalformedMR);
  EXPECT_THROW(parse_mr("name"), MalformedMR);
  EXPECT_THROW(parse_mr("[x]"), MalformedMR);
  EXPECT_THROW(parse_mr("a[x[y]]"), MalformedMR);
  EXPECT_THROW(parse_mr("a[x], a[y]"), MalformedMR);
}

TEST(Linearize, Examples) {
  EXPECT_EQ(linearize(Table{{{"area", "riverside"}}, {}}), "area[riverside]");
  EXPECT_EQ(linearize(Table{{{"name", "The Mill"}, {"area", "riverside"}}, {}}),
            "name[The Mill]area[riverside]");
  const std::string lin = linearize(parse_mr("name[Aromi], food[Chinese], area[city centre]"));
  EXPECT_EQ(std::count(lin.begin(), lin.end(), '['), 3);
  EXPECT_EQ(std::count(lin.begin(), lin.end(), ']'), 3);
}

TEST(Linearize, RoundTripRandomTables) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const Table t = random_table(rng);
    ASSERT_EQ(parse_mr(linearize(t)), t) << linearize(t);
    ASSERT_EQ(parse_mr(format_mr(t)), t) << format_mr(t);
    ASSERT_EQ(linearize(parse_mr(linearize(t))), linearize(t));
  }
}

TEST(Tokenize, Examples) {
  EXPECT_EQ(tokenize("It is near Café Rouge.").words(),
            (std::vector<std::string>{"It", "is", "near", "Café", "Rouge", "."}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_EQ(detokenize(tokenize("a  b")), "a  b");
  EXPECT_EQ(tokenize("£20-25, ok!?").words(),
            (std::vector<std::string>{"£20-25", ",", "ok", "!", "?"}));
  EXPECT_EQ(tokenize("...").words(), (std::vector<std::string>{".", ".", "."}));
}

TEST(Tokenize, RoundTripRandomText) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 1000; ++i) {
    const std::string text = random_text(rng);
    ASSERT_EQ(detokenize(tokenize(text)), text);
  }
}

TEST(Delexicalize, Example) {
  const Table t{{{"name", "The Mill"}, {"area", "riverside"}}, {}};
  DelexSentence d = delexicalize(tokenize("The Mill is in riverside"), t);
  EXPECT_EQ(d.words(), (std::vector<std::string>{"__name__", "is", "in", "__area__"}));
  EXPECT_EQ(d.binding.at("__name__"), "The Mill");
}

TEST(Delexicalize, NoValuesIsNoOp) {
  const Table t{{{"name", "Aromi"}}, {}};
  const Sentence s = tokenize("a nice place .");
  DelexSentence d = delexicalize(s, t);
  EXPECT_EQ(d.words(), s.words());
  EXPECT_TRUE(d.binding.empty());
}

TEST(Delexicalize, LongestValueWins) {
  const Table t{{{"food", "Indian"}, {"near", "Raja Indian Cuisine"}}, {}};
  DelexSentence d = delexicalize(tokenize("Indian food near Raja Indian Cuisine"), t);
  EXPECT_EQ(d.words(), (std::vector<std::string>{"__food__", "food", "near", "__near__"}));
}

TEST(Delexicalize, BooleanValuesStay) {
  const Table t{{{"familyfriendly", "yes"}}, {}};
  EXPECT_EQ(delexicalize(tokenize("yes it is"), t).words(),
            (std::vector<std::string>{"yes", "it", "is"}));
}

TEST(Delexicalize, MultiWordSlotName) {
  EXPECT_EQ(placeholder_for("customer rating"), "__customer_rating__");
  const Table t{{{"customer rating", "5 out of 5"}}, {}};
  EXPECT_EQ(delexicalize(tokenize("rated 5 out of 5"), t).words(),
            (std::vector<std::string>{"rated", "__customer_rating__"}));
}

TEST(Relexicalize, Examples) {
  const std::vector<std::string> words{"__name__", "is", "nice"};
  EXPECT_EQ(detokenize(relexicalize(words, Table{{{"name", "Aromi"}}, {}})), "Aromi is nice");
  const std::vector<std::string> area{"__area__"};
  EXPECT_THROW(relexicalize(area, Table{{{"name", "Aromi"}}, {}}), UnboundPlaceholder);
}

// Sentences are built by splicing exact slot values into filler text, so
// relexicalization must give back the identical sentence.
TEST(Relexicalize, InvertsDelexicalizeOnRandomFixtures) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 1000; ++i) {
    const Table t = random_e2e_table(rng);
    std::vector<std::string> words = random_sentence(rng, 8).words();
    for (const Slot &slot : t.slots) {
      if (rng() % 3 == 0) continue;
      const auto value = tokenize(slot.value).words();
      const std::size_t at = rng() % (words.size() + 1);
      words.insert(words.begin() + static_cast<long>(at), value.begin(), value.end());
    }
    const Sentence s = Sentence::from_words(words);
    const DelexSentence d = delexicalize(s, t);
    ASSERT_EQ(relexicalize(d, t), s) << detokenize(s);
    ASSERT_EQ(d.restore(), s);
  }
}

TEST(Relexicalize, RestoreKeepsOriginalCasing) {
  const Table t{{{"area", "riverside"}}, {}};
  const Sentence s = tokenize("  In RIVERSIDE ,  near\tthe river.");
  EXPECT_EQ(detokenize(delexicalize(s, t).restore()), detokenize(s));
}

}  // namespace
}  // namespace s2l
