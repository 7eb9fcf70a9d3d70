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

#include <set>
#include <sstream>

#include "test_util.hpp"

namespace s2l {
namespace {

// Generator that always returns the same text.
class FixedGenerator : public Generator {
 public:
  explicit FixedGenerator(std::string text) : text_(std::move(text)) {}
  Sentence generate(const Table &, const DecodeOptions &) override { return tokenize(text_); }

 private:
  std::string text_;
};

// Recount of covered slots with the oracle matcher.
bool oracle_feasible(const Table &t, const Sentence &s, const RuleSet &rules) {
  for (const Slot &slot : t.slots) {
    const std::string surface = detokenize(required_surface(slot, &rules));
    if (!testing::oracle_contains(s.words(), surface)) return false;
  }
  return true;
}

TEST(Stage2, EmptyPseudoEqualsStage1) {
  const auto train = testing::toy_train();
  const PipelineConfig c = testing::toy_config();
  EXPECT_TRUE(stage2(train, {}, c) == stage1(train, c));
}

TEST(Stage2, TrainsOnUnion) {
  const auto train = testing::toy_train();
  const auto tables = testing::toy_unlabeled();
  const PipelineConfig c = testing::toy_config();
  ASSERT_EQ(train.size(), 100u);
  ASSERT_EQ(tables.size(), 400u);
  std::vector<LabeledSample> pseudo;
  for (const auto &u : tables) pseudo.push_back({u.table, tokenize("x"), Provenance::kPseudoSearch});
  std::vector<Sample> all = as_samples(train);
  for (const auto &p : pseudo) all.emplace_back(p.table, p.sentence);
  ASSERT_EQ(all.size(), 500u);
  EXPECT_TRUE(stage2(train, pseudo, c) == DelexModel::fit(all, c.order, c.smoothing));
}

TEST(BuildPseudoCorpus, FiftyTablesAllFeasible) {
  const auto train = testing::toy_train();
  auto tables = testing::toy_unlabeled();
  tables.resize(50);
  const PipelineConfig c = testing::toy_config();
  const RuleSet rules = testing::e2e_rules();
  LocalScorer scorer(std::make_shared<const DelexModel>(stage1(train, c)));
  PseudoCorpus pseudo = build_pseudo_corpus(scorer, scorer, tables, rules, c);
  ASSERT_EQ(pseudo.pairs.size(), 50u);
  for (std::size_t i = 0; i < 50; ++i) {
    EXPECT_EQ(pseudo.pairs[i].table, tables[i].table);
    EXPECT_EQ(pseudo.pairs[i].provenance, Provenance::kPseudoSearch);
    EXPECT_TRUE(oracle_feasible(tables[i].table, pseudo.pairs[i].sentence, rules))
        << detokenize(pseudo.pairs[i].sentence);
  }
  EXPECT_EQ(corpus_coverage(as_samples(pseudo.pairs), &rules), Rational(1));
}

TEST(BuildPseudoCorpus, FeasibleDecodeKeptAsIs) {
  const RuleSet rules = testing::e2e_rules();
  FixedGenerator gen("Aromi is a pub in riverside.");
  testing::UniformScorer scorer;
  std::vector<UnlabeledTable> tables{{parse_mr("name[Aromi], eatType[pub], area[riverside]")}};
  PseudoCorpus p = build_pseudo_corpus(gen, scorer, tables, rules, PipelineConfig{});
  EXPECT_EQ(detokenize(p.pairs[0].sentence), "Aromi is a pub in riverside.");
  EXPECT_TRUE(p.traces[0].steps.empty());
}

TEST(BuildPseudoCorpus, EmptyDecodeBecomesRenderedPhrases) {
  const RuleSet rules = testing::e2e_rules();
  FixedGenerator gen("");
  testing::HashScorer scorer(3);
  const Table t = parse_mr("food[Thai], area[riverside], familyFriendly[yes]");
  std::vector<UnlabeledTable> tables{{t}};
  PseudoCorpus p = build_pseudo_corpus(gen, scorer, tables, rules, PipelineConfig{});
  const Sentence &s = p.pairs[0].sentence;
  std::size_t total = 0;
  for (const Slot &slot : t.slots) {
    const Sentence phrase = render(rules, slot);
    total += phrase.size();
    EXPECT_TRUE(contains_phrase(s, phrase)) << detokenize(phrase);
  }
  EXPECT_EQ(s.size(), total);
  EXPECT_EQ(p.traces[0].steps.size(), 3u);
}

TEST(BuildPseudoCorpus, SlotStatisticsNeedParallelData) {
  PipelineConfig c;
  c.tau_table = 0.1;
  FixedGenerator gen("x");
  testing::UniformScorer scorer;
  std::vector<UnlabeledTable> tables{{parse_mr("a[b]")}};
  EXPECT_THROW(build_pseudo_corpus(gen, scorer, tables, testing::e2e_rules(), c), EmptyCorpus);
  EXPECT_THROW(build_pseudo_corpus(gen, scorer, {}, testing::e2e_rules(), c), EmptyCorpus);
}

TEST(SelfTrain, KeepsRawDecodes) {
  const auto train = testing::toy_train();
  auto tables = testing::toy_unlabeled();
  tables.resize(100);
  const PipelineConfig c = testing::toy_config();
  const RuleSet rules = testing::e2e_rules();
  LocalScorer gen(std::make_shared<const DelexModel>(stage1(train, c)));
  SelfTrainResult r = self_train(gen, train, tables, c);
  ASSERT_EQ(r.pseudo.pairs.size(), 100u);
  std::size_t infeasible = 0;
  for (std::size_t i = 0; i < tables.size(); ++i) {
    EXPECT_EQ(r.pseudo.pairs[i].sentence, gen.generate(tables[i].table, c.decode()));
    EXPECT_EQ(r.pseudo.pairs[i].provenance, Provenance::kPseudoSelftrain);
    if (!oracle_feasible(tables[i].table, r.pseudo.pairs[i].sentence, rules)) ++infeasible;
  }
  EXPECT_GT(infeasible, 0u);
  EXPECT_LT(corpus_coverage(as_samples(r.pseudo.pairs), &rules), Rational(1));
  EXPECT_THROW(self_train(gen, train, {}, c), EmptyCorpus);
}

TEST(Recombine, MembershipAndDeterminism) {
  std::vector<Table> sources;
  for (const auto &s : testing::toy_train()) sources.push_back(s.table);
  std::set<std::pair<std::string, std::string>> inventory;
  std::set<std::vector<std::string>> shapes;
  for (const Table &t : sources) {
    std::vector<std::string> shape;
    for (const Slot &s : t.slots) {
      inventory.insert({s.name, s.value});
      shape.push_back(s.name);
    }
    shapes.insert(shape);
  }
  const auto a = recombine(sources, 400, 7);
  const auto b = recombine(sources, 400, 7);
  ASSERT_EQ(a.size(), 400u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].table, b[i].table);
    EXPECT_EQ(a[i].table.sample_id, "r" + std::to_string(i));
    EXPECT_EQ(a[i].provenance, Provenance::kRecombined);
    std::vector<std::string> shape;
    for (const Slot &s : a[i].table.slots) {
      EXPECT_TRUE(inventory.count({s.name, s.value})) << s.name << "=" << s.value;
      shape.push_back(s.name);
    }
    EXPECT_TRUE(shapes.count(shape));
  }
  const auto c = recombine(sources, 400, 8);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs = differs || !(a[i].table == c[i].table);
  EXPECT_TRUE(differs);
}

TEST(Recombine, SingleSourceDegenerates) {
  const std::vector<Table> one{parse_mr("name[Aromi], area[riverside]")};
  const auto r = recombine(one, 1, 0);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].table, one[0]);
  EXPECT_THROW(recombine(one, 0, 0), UsageError);
  EXPECT_THROW(recombine({}, 1, 0), EmptyCorpus);
}

TEST(CorpusIo, ProvenanceRoundTrip) {
  std::vector<LabeledSample> samples{
      {parse_mr("name[A], area[riverside]"), tokenize("A is  in riverside."), Provenance::kHuman},
      {parse_mr("name[B]"), tokenize("B."), Provenance::kPseudoSearch},
      {parse_mr("name[C]"), tokenize("C!"), Provenance::kPseudoSelftrain}};
  std::stringstream ss;
  write_pseudo(ss, samples);
  const auto back = read_parallel(ss, "mem");
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].table, samples[i].table);
    EXPECT_EQ(back[i].sentence, samples[i].sentence);
    EXPECT_EQ(back[i].provenance, samples[i].provenance);
  }

  std::vector<UnlabeledTable> tables{{parse_mr("name[A]"), Provenance::kHuman},
                                     {parse_mr("name[B]"), Provenance::kRecombined}};
  std::stringstream ts;
  write_tables(ts, tables);
  const auto tb = read_tables(ts, "mem");
  ASSERT_EQ(tb.size(), 2u);
  EXPECT_EQ(tb[1].provenance, Provenance::kRecombined);
  EXPECT_EQ(tb[1].table, tables[1].table);
}

TEST(CorpusIo, ErrorsNameTheLine) {
  std::istringstream in("# header\nname[A]\tok\nname[\tbad\n");
  try {
    read_parallel(in, "f.tsv");
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.category(), ErrorCategory::kData);
    EXPECT_NE(std::string(e.what()).find("f.tsv:3"), std::string::npos) << e.what();
  }
  std::istringstream one_col("name[A]\n");
  EXPECT_THROW(read_parallel(one_col, "x"), Error);
}

TEST(CorpusIo, DuplicateIdsRejected) {
  Corpus c;
  c.parallel.push_back({parse_mr("a[b]"), {}, Provenance::kHuman});
  c.parallel[0].table.sample_id = "x";
  c.unlabeled.push_back({parse_mr("a[c]")});
  c.unlabeled[0].table.sample_id = "x";
  EXPECT_THROW(c.validate(), MalformedMR);
  c.unlabeled[0].table.sample_id = "y";
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, ParsesAndValidates) {
  std::istringstream in("# c\norder = 2\nbeam_width=3\nseed=9\nscorer=tcp://h:1\n");
  const PipelineConfig c = parse_config(in);
  EXPECT_EQ(c.order, 2);
  EXPECT_EQ(c.smoothing.lambdas, (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(c.beam_width, 3u);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.scorer, "tcp://h:1");

  std::istringstream unknown("orderr=3\n");
  EXPECT_THROW(parse_config(unknown), UsageError);
  std::istringstream bad("order=three\n");
  EXPECT_THROW(parse_config(bad), UsageError);
  std::istringstream tau("tau_ref=2\n");
  EXPECT_THROW(parse_config(tau), UsageError);
  EXPECT_NO_THROW(testing::toy_config());
}

TEST(Infer, DeterministicAndMemorizing) {
  const std::vector<LabeledSample> pairs{
      {parse_mr("name[Aromi], eatType[pub]"), tokenize("pub called Aromi is cheap."), {}},
      {parse_mr("name[Cotto], area[riverside]"), tokenize("riverside hosts Cotto, a gem."), {}}};
  const PipelineConfig c;
  LocalScorer gen(std::make_shared<const DelexModel>(stage2(pairs, {}, c)));
  EXPECT_EQ(detokenize(infer(gen, pairs[1].table, c)), "riverside hosts Cotto, a gem.");
  EXPECT_EQ(infer(gen, pairs[0].table, c), infer(gen, pairs[0].table, c));
}

TEST(Backend, BuiltinNeedsModel) {
  EXPECT_THROW(make_backend(PipelineConfig{}, nullptr), UsageError);
  PipelineConfig c;
  c.scorer = "ftp://x";
  EXPECT_THROW(make_backend(c, nullptr), UsageError);
}

TEST(ParallelFor, ThreadedPseudoCorpusIsIdentical) {
  const auto train = testing::toy_train();
  auto tables = testing::toy_unlabeled();
  tables.resize(40);
  PipelineConfig c = testing::toy_config();
  const RuleSet rules = testing::e2e_rules();
  LocalScorer scorer(std::make_shared<const DelexModel>(stage1(train, c)));
  const auto serial = build_pseudo_corpus(scorer, scorer, tables, rules, c);
  c.threads = 4;
  const auto threaded = build_pseudo_corpus(scorer, scorer, tables, rules, c);
  for (std::size_t i = 0; i < tables.size(); ++i) {
    EXPECT_EQ(serial.pairs[i].sentence, threaded.pairs[i].sentence);
  }
}

}  // namespace
}  // namespace s2l
