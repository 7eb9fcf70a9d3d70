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

// Search-and-learn training loop:
//
//   1. fit a generator on the small parallel corpus;
//   2. decode every unlabeled table and repair the output with the insertion
//      search, giving a pseudo-parallel corpus whose outputs cover all
//      required slots;
//   3. refit on the human pairs followed by the pseudo pairs.
//
// Inference afterwards is plain decoding. Self-training (step 2 without the
// repair) and table recombination are provided for comparison and
// augmentation.

#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "s2l/error.hpp"
#include "s2l/fields.hpp"
#include "s2l/lm.hpp"
#include "s2l/match.hpp"
#include "s2l/remote.hpp"
#include "s2l/search.hpp"
#include "s2l/tabular.hpp"
#include "s2l/templates.hpp"

namespace s2l {

// ---------------------------------------------------------------------------
// Corpora

enum class Provenance { kHuman, kPseudoSearch, kPseudoSelftrain, kRecombined };

inline std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::kHuman: return "human";
    case Provenance::kPseudoSearch: return "pseudo_search";
    case Provenance::kPseudoSelftrain: return "pseudo_selftrain";
    case Provenance::kRecombined: return "recombined";
  }
  return "human";
}

inline Provenance parse_provenance(const std::string &s) {
  if (s == "human") return Provenance::kHuman;
  if (s == "pseudo_search") return Provenance::kPseudoSearch;
  if (s == "pseudo_selftrain") return Provenance::kPseudoSelftrain;
  if (s == "recombined") return Provenance::kRecombined;
  throw MalformedMR("unknown provenance \"" + s + "\"");
}

struct LabeledSample {
  Table table;
  Sentence sentence;
  Provenance provenance = Provenance::kHuman;
};

struct UnlabeledTable {
  Table table;
  Provenance provenance = Provenance::kHuman;
};

struct Corpus {
  std::vector<LabeledSample> parallel;
  std::vector<UnlabeledTable> unlabeled;

  // Throws if sample ids collide across the two partitions.
  void validate() const {
    std::set<std::string> ids;
    auto check = [&](const Table &t) {
      if (t.sample_id && !ids.insert(*t.sample_id).second) {
        throw MalformedMR("duplicate sample id " + *t.sample_id);
      }
    };
    for (const auto &s : parallel) check(s.table);
    for (const auto &u : unlabeled) check(u.table);
  }
};

inline std::vector<Sample> as_samples(std::span<const LabeledSample> labeled) {
  std::vector<Sample> out;
  out.reserve(labeled.size());
  for (const auto &s : labeled) out.emplace_back(s.table, s.sentence);
  return out;
}

inline std::vector<std::string> split_tabs(const std::string &line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    cols.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) return cols;
    start = tab + 1;
  }
}

namespace detail {

template <typename F>
auto with_line(const std::string &where, std::size_t line_no, F &&f) {
  try {
    return f();
  } catch (const Error &e) {
    throw Error(e.category(), where + ":" + std::to_string(line_no) + ": " + e.what());
  }
}

inline void strip_cr(std::string &line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace detail

// Parallel corpus: "MR<TAB>text" per line, optional third column with the
// provenance (pseudo corpora). Lines starting with '#' are skipped.
inline std::vector<LabeledSample> read_parallel(std::istream &in, const std::string &where,
                                                const std::string &id_prefix = "p") {
  std::vector<LabeledSample> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    detail::strip_cr(line);
    if (line.empty() || line.front() == '#') continue;
    out.push_back(detail::with_line(where, no, [&] {
      auto cols = split_tabs(line);
      if (cols.size() < 2 || cols.size() > 3) {
        throw MalformedMR("expected MR<TAB>text[<TAB>provenance]");
      }
      LabeledSample s;
      s.table = parse_mr(cols[0]);
      s.table.sample_id = id_prefix + std::to_string(out.size());
      s.sentence = tokenize(cols[1]);
      if (cols.size() == 3) s.provenance = parse_provenance(trim(cols[2]));
      return s;
    }));
  }
  return out;
}

inline std::vector<LabeledSample> read_parallel(const std::string &path,
                                                const std::string &id_prefix = "p") {
  std::ifstream in = detail::open_input(path);
  return read_parallel(in, path, id_prefix);
}

// Unlabeled corpus: one MR per line, optional provenance after a TAB.
inline std::vector<UnlabeledTable> read_tables(std::istream &in, const std::string &where,
                                               const std::string &id_prefix = "u") {
  std::vector<UnlabeledTable> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    detail::strip_cr(line);
    if (trim(line).empty() || line.front() == '#') continue;
    out.push_back(detail::with_line(where, no, [&] {
      auto cols = split_tabs(line);
      if (cols.size() > 2) throw MalformedMR("expected MR[<TAB>provenance]");
      UnlabeledTable u;
      u.table = parse_mr(cols[0]);
      u.table.sample_id = id_prefix + std::to_string(out.size());
      if (cols.size() == 2) u.provenance = parse_provenance(trim(cols[1]));
      return u;
    }));
  }
  return out;
}

inline std::vector<UnlabeledTable> read_tables(const std::string &path,
                                               const std::string &id_prefix = "u") {
  std::ifstream in = detail::open_input(path);
  return read_tables(in, path, id_prefix);
}

// Newlines and tabs inside text would break the line format.
inline std::string one_line(std::string text) {
  for (char &c : text) {
    if (c == '\n' || c == '\r' || c == '\t') c = ' ';
  }
  return text;
}

inline void write_pseudo(std::ostream &out, std::span<const LabeledSample> samples) {
  for (const auto &s : samples) {
    out << format_mr(s.table) << '\t' << one_line(detokenize(s.sentence)) << '\t'
        << to_string(s.provenance) << '\n';
  }
}

inline void write_tables(std::ostream &out, std::span<const UnlabeledTable> tables) {
  for (const auto &u : tables) {
    out << format_mr(u.table);
    if (u.provenance != Provenance::kHuman) out << '\t' << to_string(u.provenance);
    out << '\n';
  }
}

template <typename Writer>
void write_file(const std::string &path, Writer &&w) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  w(out);
  if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Configuration

struct PipelineConfig {
  int order = 3;
  SmoothingConfig smoothing;
  std::size_t beam_width = 1;
  std::size_t max_len = 40;
  std::size_t no_repeat_ngram = 3;
  double tau_table = 0.0;
  double tau_ref = 0.0;
  std::uint64_t seed = 0;
  std::string scorer = "builtin";
  bool length_normalize = false;
  unsigned threads = 1;
  RemoteOptions remote;

  DecodeOptions decode() const { return {max_len, beam_width, no_repeat_ngram}; }
};

namespace detail {

template <typename T>
T parse_number(const std::string &key, const std::string &value) {
  std::istringstream ss(value);
  T out{};
  ss >> out;
  if (!ss || !(ss >> std::ws).eof()) {
    throw UsageError("config key " + key + ": bad value \"" + value + "\"");
  }
  return out;
}

}  // namespace detail

// Applies one key=value setting; unknown keys are rejected.
inline void apply_setting(PipelineConfig &c, const std::string &key, const std::string &value) {
  using detail::parse_number;
  if (key == "order") {
    c.order = parse_number<int>(key, value);
  } else if (key == "lambdas") {
    c.smoothing.lambdas.clear();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) c.smoothing.lambdas.push_back(parse_number<double>(key, trim(item)));
  } else if (key == "epsilon") {
    c.smoothing.epsilon = parse_number<double>(key, value);
  } else if (key == "beam_width") {
    c.beam_width = parse_number<std::size_t>(key, value);
  } else if (key == "max_len") {
    c.max_len = parse_number<std::size_t>(key, value);
  } else if (key == "no_repeat_ngram") {
    c.no_repeat_ngram = parse_number<std::size_t>(key, value);
  } else if (key == "tau_table") {
    c.tau_table = parse_number<double>(key, value);
  } else if (key == "tau_ref") {
    c.tau_ref = parse_number<double>(key, value);
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "scorer") {
    c.scorer = value;
  } else if (key == "length_normalize") {
    if (value != "true" && value != "false") throw UsageError("length_normalize: true|false");
    c.length_normalize = value == "true";
  } else if (key == "threads") {
    c.threads = parse_number<unsigned>(key, value);
  } else if (key == "remote_timeout_ms") {
    c.remote.timeout = std::chrono::milliseconds(parse_number<std::int64_t>(key, value));
  } else if (key == "remote_batch_size") {
    c.remote.batch_size = parse_number<std::size_t>(key, value);
  } else if (key == "remote_retries") {
    c.remote.max_retries = parse_number<std::size_t>(key, value);
  } else if (key == "remote_max_inflight") {
    c.remote.max_inflight = parse_number<std::size_t>(key, value);
  } else {
    throw UsageError("unknown config key \"" + key + "\"");
  }
}

inline void validate(const PipelineConfig &c) {
  if (c.order < 2) throw UsageError("order must be >= 2");
  if (static_cast<int>(c.smoothing.lambdas.size()) != c.order) {
    throw UsageError("lambdas must have exactly `order` entries");
  }
  if (c.beam_width < 1 || c.max_len < 1) throw UsageError("beam_width and max_len must be >= 1");
  if (c.tau_table < 0 || c.tau_table > 1 || c.tau_ref < 0 || c.tau_ref > 1) {
    throw UsageError("tau_table and tau_ref must lie in [0, 1]");
  }
  if (c.threads < 1) throw UsageError("threads must be >= 1");
}

// Flat key=value file; '#' comments.
inline PipelineConfig parse_config(std::istream &in) {
  PipelineConfig c;
  bool lambdas_set = false;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(no) + ": expected key=value");
    }
    std::string key = trim(t.substr(0, eq));
    apply_setting(c, key, trim(t.substr(eq + 1)));
    lambdas_set = lambdas_set || key == "lambdas";
  }
  if (!lambdas_set && c.order != 3) {
    // Default weights only fit order 3; fall back to uniform weights.
    c.smoothing.lambdas.assign(static_cast<std::size_t>(c.order), 1.0 / c.order);
  }
  validate(c);
  return c;
}

inline PipelineConfig load_config(const std::string &path) {
  std::ifstream in = detail::open_input(path);
  return parse_config(in);
}

// ---------------------------------------------------------------------------
// Stages

// First stage: fit on the human pairs.
inline DelexModel stage1(std::span<const LabeledSample> parallel, const PipelineConfig &config) {
  if (parallel.empty()) throw EmptyCorpus("stage 1 needs parallel data");
  const auto samples = as_samples(parallel);
  return DelexModel::fit(samples, config.order, config.smoothing);
}

// Second stage: refit on human pairs followed by pseudo pairs.
inline DelexModel stage2(std::span<const LabeledSample> parallel,
                         std::span<const LabeledSample> pseudo, const PipelineConfig &config) {
  if (parallel.empty()) throw EmptyCorpus("stage 2 needs parallel data");
  std::vector<LabeledSample> all(parallel.begin(), parallel.end());
  all.insert(all.end(), pseudo.begin(), pseudo.end());
  return stage1(all, config);
}

struct PseudoCorpus {
  std::vector<LabeledSample> pairs;
  std::vector<InsertionTrace> traces;  // one per pair; empty for self-training
};

namespace detail {

// Runs f(i) for i in [0, n) on up to `threads` workers. Results must be
// written by index so the output order never depends on scheduling.
template <typename F>
void parallel_for(std::size_t n, unsigned threads, F &&f) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += workers) f(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto &e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

// Decodes each unlabeled table and repairs it with the insertion search.
// `parallel` feeds the slot-selection statistics when thresholds are set.
inline PseudoCorpus build_pseudo_corpus(Generator &generator, Scorer &scorer,
                                        std::span<const UnlabeledTable> tables,
                                        const RuleSet &rules, const PipelineConfig &config,
                                        std::span<const LabeledSample> parallel = {}) {
  if (tables.empty()) throw EmptyCorpus("no unlabeled tables");
  const bool use_stats = config.tau_table > 0.0 || config.tau_ref > 0.0;
  if (use_stats && parallel.empty()) {
    throw EmptyCorpus("slot selection thresholds need the parallel corpus");
  }
  const auto stats_corpus = as_samples(parallel);
  PseudoCorpus out;
  out.pairs.resize(tables.size());
  out.traces.resize(tables.size());
  detail::parallel_for(tables.size(), config.threads, [&](std::size_t i) {
    const Table &table = tables[i].table;
    const SlotFilter filter =
        use_stats ? slot_filter_for(stats_corpus, table, config.tau_table, config.tau_ref, &rules)
                  : std::nullopt;
    const Sentence decoded = generator.generate(table, config.decode());
    ProjectionResult projected = project_to_feasible(scorer, table, decoded, rules, filter);
    if (!missing_filtered(table, projected.sentence, rules, filter).empty()) {
      throw Error(ErrorCategory::kData,
                  "rule set cannot verbalize every slot of " + format_mr(table));
    }
    out.pairs[i] = {table, std::move(projected.sentence), Provenance::kPseudoSearch};
    out.traces[i] = std::move(projected.trace);
  });
  return out;
}

// Raw decodes as pseudo references (no repair).
inline PseudoCorpus build_selftrain_corpus(Generator &generator,
                                           std::span<const UnlabeledTable> tables,
                                           const PipelineConfig &config) {
  if (tables.empty()) throw EmptyCorpus("no unlabeled tables");
  PseudoCorpus out;
  out.pairs.resize(tables.size());
  out.traces.resize(tables.size());
  detail::parallel_for(tables.size(), config.threads, [&](std::size_t i) {
    out.pairs[i] = {tables[i].table, generator.generate(tables[i].table, config.decode()),
                    Provenance::kPseudoSelftrain};
  });
  return out;
}

struct SelfTrainResult {
  DelexModel model;
  PseudoCorpus pseudo;
};

inline SelfTrainResult self_train(Generator &generator, std::span<const LabeledSample> parallel,
                                  std::span<const UnlabeledTable> tables,
                                  const PipelineConfig &config) {
  PseudoCorpus pseudo = build_selftrain_corpus(generator, tables, config);
  DelexModel model = stage2(parallel, pseudo.pairs, config);
  return {std::move(model), std::move(pseudo)};
}

// Synthesizes `n` tables: copy the slot names of a uniformly chosen source
// table, then draw each value uniformly from the values seen for that name.
// Exact copies of a source table are redrawn up to a retry bound.
inline std::vector<UnlabeledTable> recombine(std::span<const Table> sources, std::size_t n,
                                             std::uint64_t seed) {
  if (n < 1) throw UsageError("recombine needs n >= 1");
  if (sources.empty()) throw EmptyCorpus("recombine needs source tables");
  constexpr int kMaxRetries = 16;
  std::map<std::string, std::vector<std::string>> inventory;
  for (const Table &t : sources) {
    for (const Slot &s : t.slots) {
      auto &values = inventory[s.name];
      if (std::find(values.begin(), values.end(), s.value) == values.end()) {
        values.push_back(s.value);
      }
    }
  }
  std::mt19937_64 rng(seed);
  auto pick = [&rng](std::size_t size) {
    return std::uniform_int_distribution<std::size_t>(0, size - 1)(rng);
  };
  std::vector<UnlabeledTable> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Table t;
    for (int attempt = 0; attempt <= kMaxRetries; ++attempt) {
      const Table &shape = sources[pick(sources.size())];
      t.slots.clear();
      for (const Slot &s : shape.slots) {
        const auto &values = inventory[s.name];
        t.slots.push_back({s.name, values[pick(values.size())]});
      }
      bool duplicate = std::find(sources.begin(), sources.end(), t) != sources.end();
      if (!duplicate) break;
    }
    t.sample_id = "r" + std::to_string(i);
    out.push_back({std::move(t), Provenance::kRecombined});
  }
  return out;
}

// Deployed path: decoding only, no search.
inline Sentence infer(Generator &generator, const Table &table, const PipelineConfig &config) {
  return generator.generate(table, config.decode());
}

// Scorer/generator selected by the config ("builtin" uses `model`).
struct Backend {
  std::shared_ptr<Scorer> scorer;
  std::shared_ptr<Generator> generator;
};

inline Backend make_backend(const PipelineConfig &config,
                            std::shared_ptr<const DelexModel> model) {
  if (config.scorer == "builtin") {
    if (!model) throw UsageError("builtin scorer needs a model");
    auto local = std::make_shared<LocalScorer>(
        std::move(model), LocalScorerOptions{config.length_normalize, 1});
    return {local, local};
  }
  auto remote = std::make_shared<RemoteScorer>(config.scorer, config.remote);
  return {remote, remote};
}

}  // namespace s2l
