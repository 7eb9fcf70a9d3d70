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

using testing::brute_force_insert;
using testing::HashScorer;
using testing::UniformScorer;

std::shared_ptr<const DelexModel> toy_model() {
  static auto m = std::make_shared<const DelexModel>(
      DelexModel::fit(as_samples(testing::toy_train()), 3));
  return m;
}

TEST(InsertAt, SpacingOnly) {
  const Sentence s = tokenize("X is a pub.");
  const Sentence p = tokenize("in riverside area");
  EXPECT_EQ(detokenize(insert_at(s, p, 0)), "in riverside area X is a pub.");
  EXPECT_EQ(detokenize(insert_at(s, p, 4)), "X is a pub in riverside area.");
  EXPECT_EQ(detokenize(insert_at(s, p, 5)), "X is a pub. in riverside area");
  for (std::size_t pos = 0; pos <= s.size(); ++pos) {
    auto words = s.words();
    const auto pw = p.words();
    words.insert(words.begin() + static_cast<long>(pos), pw.begin(), pw.end());
    EXPECT_EQ(insert_at(s, p, pos).words(), words);
  }
}

TEST(BestInsertion, UniformScorerPicksFirstPosition) {
  UniformScorer u;
  auto r = best_insertion(u, parse_mr("area[riverside]"), tokenize("X is a pub"),
                          tokenize("in riverside area"));
  EXPECT_EQ(r.position, 0u);
  EXPECT_EQ(r.row.candidates, 5u);
}

TEST(BestInsertion, EmptySentence) {
  HashScorer h(1);
  auto r = best_insertion(h, parse_mr("area[riverside]"), Sentence{}, tokenize("in riverside area"));
  EXPECT_EQ(r.position, 0u);
  EXPECT_EQ(detokenize(r.sentence), "in riverside area");
}

TEST(BestInsertion, EmptyPhraseRejected) {
  UniformScorer u;
  EXPECT_THROW(best_insertion(u, parse_mr("a[b]"), tokenize("x"), Sentence{}), UsageError);
}

TEST(BestInsertion, MatchesBruteForceWithTrigramScorer) {
  LocalScorer scorer(toy_model());
  const Table t = parse_mr("name[X], eatType[pub], area[riverside]");
  const Sentence s = tokenize("X is a pub");
  const Sentence p = tokenize("in riverside area");
  auto r = best_insertion(scorer, t, s, p);
  auto oracle = brute_force_insert(s.words(), p.words(), [&](const std::vector<std::string> &w) {
    return toy_model()->log_prob_words(t, delexicalize(Sentence::from_words(w), t).words());
  });
  EXPECT_EQ(r.position, oracle.position);
  EXPECT_EQ(r.score, oracle.score);
  EXPECT_EQ(r.sentence.words(), oracle.words);
}

TEST(BestInsertion, MatchesBruteForceOnRandomCases) {
  std::mt19937_64 rng(31);
  const RuleSet rules = testing::e2e_rules();
  for (int i = 0; i < 200; ++i) {
    const Table t = testing::random_e2e_table(rng);
    const Sentence s = testing::random_sentence(rng, 12);
    const Sentence p = render(rules, t.slots[rng() % t.size()]);
    HashScorer h(rng(), 1 + static_cast<int>(rng() % 5));
    auto r = best_insertion(h, t, s, p);
    auto oracle = brute_force_insert(s.words(), p.words(),
                                     [&](const std::vector<std::string> &w) { return h.score_words(w); });
    ASSERT_EQ(r.position, oracle.position) << i;
    ASSERT_EQ(r.score, oracle.score) << i;
    ASSERT_EQ(r.sentence.words(), oracle.words) << i;
  }
}

TEST(ProjectToFeasible, FeasibleInputUnchanged) {
  LocalScorer scorer(toy_model());
  const RuleSet rules = testing::e2e_rules();
  const Table t = parse_mr("name[Aromi], area[riverside]");
  const Sentence s = tokenize("Aromi is in riverside.");
  auto r = project_to_feasible(scorer, t, s, rules);
  EXPECT_EQ(r.sentence, s);
  EXPECT_TRUE(r.trace.steps.empty());
}

TEST(ProjectToFeasible, InsertsRenderedPhraseContiguously) {
  LocalScorer scorer(toy_model());
  const RuleSet rules = testing::e2e_rules();
  const Table t = parse_mr("name[Aromi], area[riverside]");
  auto r = project_to_feasible(scorer, t, tokenize("Aromi is a pub."), rules);
  EXPECT_TRUE(contains_phrase(r.sentence, tokenize("in riverside area")));
  ASSERT_EQ(r.trace.steps.size(), 1u);
  EXPECT_EQ(r.trace.steps[0].slot, "area");
  EXPECT_EQ(r.trace.steps[0].phrase, "in riverside area");
}

TEST(ProjectToFeasible, EqualsSequentialBruteForce) {
  LocalScorer scorer(toy_model());
  const RuleSet rules = testing::e2e_rules();
  const Table t =
      parse_mr("name[Aromi], food[Italian], area[riverside], familyFriendly[no], near[Avalon]");
  const Sentence s = tokenize("Aromi is a pub near Avalon.");
  ASSERT_EQ(find_missing_hard(t, s, &rules).size(), 3u);
  auto r = project_to_feasible(scorer, t, s, rules);

  std::vector<std::string> words = s.words();
  for (const Slot &slot : t.slots) {
    if (testing::oracle_contains(words, slot.name == "familyfriendly" ? "not family friendly"
                                                                      : slot.value)) {
      continue;
    }
    words = brute_force_insert(words, render(rules, slot).words(),
                               [&](const std::vector<std::string> &w) {
                                 return toy_model()->log_prob(t, Sentence::from_words(w));
                               })
                .words;
  }
  EXPECT_EQ(r.sentence.words(), words);
  EXPECT_EQ(r.trace.steps.size(), 3u);
}

TEST(ProjectToFeasible, PropertiesOnRandomDecodes) {
  LocalScorer scorer(toy_model());
  const RuleSet rules = testing::e2e_rules();
  std::mt19937_64 rng(32);
  for (int i = 0; i < 50; ++i) {
    const Table t = testing::random_e2e_table(rng);
    const Sentence s = scorer.generate(t, {20, 1, 3});
    auto r = project_to_feasible(scorer, t, s, rules);
    EXPECT_TRUE(find_missing_hard(t, r.sentence, &rules).empty());
    EXPECT_GE(r.sentence.size(), s.size());
    // A repaired output needs no further repair.
    auto again = project_to_feasible(scorer, t, r.sentence, rules);
    EXPECT_EQ(again.sentence, r.sentence);
    EXPECT_TRUE(again.trace.steps.empty());
    // Determinism regardless of scoring threads.
    LocalScorer threaded(toy_model(), {false, 3});
    EXPECT_EQ(project_to_feasible(threaded, t, s, rules).sentence, r.sentence);
  }
}

TEST(ProjectToFeasible, FilterLimitsRepairs) {
  LocalScorer scorer(toy_model());
  const RuleSet rules = testing::e2e_rules();
  const Table t = parse_mr("name[Aromi], area[riverside], near[Avalon]");
  SlotFilter only_area = std::vector<std::string>{"area"};
  auto r = project_to_feasible(scorer, t, tokenize("It is a pub."), rules, only_area);
  EXPECT_EQ(r.trace.steps.size(), 1u);
  EXPECT_EQ(find_missing_hard(t, r.sentence, &rules).size(), 2u);
}

std::vector<Sample> birth_date_corpus() {
  // "birth date" in 5 of 10 tables, referenced in 3 of those 5.
  std::vector<Sample> c;
  for (int i = 0; i < 10; ++i) {
    Table t{{{"name", "P" + std::to_string(i)}}, {}};
    std::string text = "P" + std::to_string(i) + " was a writer";
    if (i < 5) {
      t.slots.push_back({"birth date", "1 May 1900"});
      if (i < 3) text += " born 1 May 1900";
    }
    c.emplace_back(t, tokenize(text));
  }
  return c;
}

std::vector<std::string> names(const std::vector<Slot> &slots) {
  std::vector<std::string> out;
  for (const auto &s : slots) out.push_back(s.name);
  return out;
}

TEST(SelectSlotsByStats, BirthDateCounting) {
  const auto corpus = birth_date_corpus();
  const Table t{{{"name", "Q"}, {"birth date", "2 June 1950"}}, {}};
  EXPECT_EQ(names(select_slots_by_stats(corpus, t, 0.1, 0.0)),
            (std::vector<std::string>{"name", "birth date"}));
  EXPECT_EQ(names(select_slots_by_stats(corpus, t, 0.1, 0.6)),
            (std::vector<std::string>{"name", "birth date"}));
  EXPECT_EQ(names(select_slots_by_stats(corpus, t, 0.1, 0.7)), (std::vector<std::string>{"name"}));
  EXPECT_EQ(names(select_slots_by_stats(corpus, t, 0.6, 0.0)), (std::vector<std::string>{"name"}));
}

TEST(SelectSlotsByStats, RareSlotExcluded) {
  std::vector<Sample> corpus;
  for (int i = 0; i < 100; ++i) {
    Table t{{{"name", "N"}}, {}};
    if (i == 0) t.slots.push_back({"rare", "r"});
    corpus.emplace_back(t, tokenize("N r"));
  }
  const Table t{{{"name", "N"}, {"rare", "r"}}, {}};
  EXPECT_EQ(names(select_slots_by_stats(corpus, t, 0.1, 0.0)), (std::vector<std::string>{"name"}));
  EXPECT_EQ(names(select_slots_by_stats(corpus, t, 0.0, 0.0)),
            (std::vector<std::string>{"name", "rare"}));
  EXPECT_FALSE(slot_filter_for(corpus, t, 0.0, 0.0, nullptr).has_value());
}

TEST(SelectSlotsByStats, Preconditions) {
  const Table t{{{"name", "N"}}, {}};
  EXPECT_THROW(select_slots_by_stats({}, t, 0.1, 0.1), EmptyCorpus);
  EXPECT_THROW(select_slots_by_stats(birth_date_corpus(), t, 1.5, 0.1), UsageError);
}

}  // namespace
}  // namespace s2l
