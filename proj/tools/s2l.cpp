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

// Command-line front end for the search-and-learn toolkit.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 remote scorer failure.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "s2l/s2l.hpp"

namespace {

using namespace s2l;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRemote = 3;

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string rules_path = std::string(S2L_DATA_DIR) + "/rules/e2e.rules";
  std::string patterns_path = std::string(S2L_DATA_DIR) + "/patterns/e2e.patterns";
  std::string scorer;
};

PipelineConfig resolve_config(const GlobalOptions &g) {
  PipelineConfig c = g.config_path.empty() ? PipelineConfig{} : load_config(g.config_path);
  if (g.seed) c.seed = *g.seed;
  if (!g.scorer.empty()) c.scorer = g.scorer;
  validate(c);
  return c;
}

// A corpus file of any supported layout: MR only, MR<TAB>text, or
// MR<TAB>text<TAB>provenance. Returns samples whose sentence is empty when
// the file has no text column.
struct AnyRow {
  Table table;
  std::optional<Sentence> text;
};

std::vector<AnyRow> read_any(const std::string &path) {
  std::ifstream in = detail::open_input(path);
  std::vector<AnyRow> rows;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line.front() == '#') continue;
    rows.push_back(detail::with_line(path, no, [&] {
      auto cols = split_tabs(line);
      AnyRow r;
      r.table = parse_mr(cols[0]);
      r.table.sample_id = "s" + std::to_string(rows.size());
      if (cols.size() >= 2) {
        bool provenance_only = false;
        if (cols.size() == 2) {
          try {
            parse_provenance(trim(cols[1]));
            provenance_only = true;
          } catch (const Error &) {
          }
        }
        if (!provenance_only) r.text = tokenize(cols[1]);
      }
      return r;
    }));
  }
  if (rows.empty()) throw EmptyCorpus(path + " has no samples");
  return rows;
}

std::vector<std::string> read_lines(const std::string &path) {
  std::ifstream in = detail::open_input(path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

std::shared_ptr<const DelexModel> load_model_if(const std::string &path,
                                                const PipelineConfig &config) {
  if (path.empty()) {
    if (config.scorer == "builtin") throw UsageError("--model is required with the builtin scorer");
    return nullptr;
  }
  return std::make_shared<const DelexModel>(DelexModel::load(path));
}

void write_traces(const std::string &path, const PseudoCorpus &pseudo) {
  write_file(path, [&](std::ostream &out) {
    for (std::size_t i = 0; i < pseudo.pairs.size(); ++i) {
      for (std::size_t k = 0; k < pseudo.traces[i].steps.size(); ++k) {
        nlohmann::json rec = pseudo.traces[i].steps[k].to_json();
        rec["sample"] = pseudo.pairs[i].table.sample_id.value_or(std::to_string(i));
        rec["step"] = k;
        out << rec.dump() << '\n';
      }
    }
  });
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int run(int argc, char **argv) {
  CLI::App app{"s2l: search-and-learn toolkit for few-shot data-to-text generation"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config_path, "Pipeline config file (key=value)");
  app.add_option("--seed", g.seed, "Random seed (overrides config)");
  app.add_option("--rules", g.rules_path, "Phrase rule file")->capture_default_str();
  app.add_option("--patterns", g.patterns_path, "Soft-match pattern file")->capture_default_str();
  app.add_option("--scorer", g.scorer, "builtin | tcp://host:port | stdio:<command>");

  std::string train_path, unlabeled_path, pseudo_path, model_path, out_path, trace_path,
      data_path, hyp_path, pseudo_out_path;
  std::size_t n_augment = 400;
  bool search_at_inference = false;
  int port = 0;

  auto *train = app.add_subcommand("train", "First-stage fit on a parallel corpus");
  train->add_option("--train", train_path, "Parallel corpus (MR<TAB>text)")->required();
  train->add_option("--model-out", out_path, "Model file to write")->required();

  auto *augment = app.add_subcommand("augment", "Synthesize tables by recombining slot values");
  augment->add_option("--train", train_path, "Source corpus (tables are read from column 1)")
      ->required();
  augment->add_option("--n", n_augment, "Number of tables")->capture_default_str();
  augment->add_option("--out", out_path, "Unlabeled table file to write")->required();

  auto *search = app.add_subcommand("search", "Decode unlabeled tables and repair coverage");
  search->add_option("--model", model_path, "Stage-1 model");
  search->add_option("--unlabeled", unlabeled_path, "Unlabeled tables")->required();
  search->add_option("--train", train_path, "Parallel corpus for slot-selection statistics");
  search->add_option("--out", out_path, "Pseudo corpus to write")->required();
  search->add_option("--trace", trace_path, "Write insertion steps as JSON lines");

  auto *retrain = app.add_subcommand("retrain", "Second-stage fit on human + pseudo pairs");
  retrain->add_option("--train", train_path, "Parallel corpus")->required();
  retrain->add_option("--pseudo", pseudo_path, "Pseudo corpus from `search`")->required();
  retrain->add_option("--model-out", out_path, "Model file to write")->required();

  auto *selftrain = app.add_subcommand("selftrain", "Self-training baseline (no search)");
  selftrain->add_option("--model", model_path, "Stage-1 model");
  selftrain->add_option("--train", train_path, "Parallel corpus")->required();
  selftrain->add_option("--unlabeled", unlabeled_path, "Unlabeled tables")->required();
  selftrain->add_option("--model-out", out_path, "Model file to write")->required();
  selftrain->add_option("--pseudo-out", pseudo_out_path, "Also write the raw pseudo corpus");

  auto *infer_cmd = app.add_subcommand("infer", "Generate text for tables");
  infer_cmd->add_option("--model", model_path, "Model file");
  infer_cmd->add_option("--input", data_path, "Tables (any corpus layout)")->required();
  infer_cmd->add_option("--out", out_path, "Output text, one line per table (default stdout)");
  infer_cmd->add_flag("--search", search_at_inference, "Repair outputs with the insertion search");
  infer_cmd->add_option("--trace", trace_path, "With --search: write insertion steps");

  auto *eval = app.add_subcommand("eval", "Coverage, SER and length report");
  eval->add_option("--data", data_path, "Tables with optional text column")->required();
  eval->add_option("--hyp", hyp_path, "System outputs, one per line (default: text column)");
  eval->add_option("--out", out_path, "Also write the report as JSON");

  auto *serve = app.add_subcommand("serve", "Expose a model over the scorer protocol");
  serve->add_option("--model", model_path, "Model file")->required();
  serve->add_option("--port", port, "TCP port on 127.0.0.1 (default: stdin/stdout)");

  auto *serve_check = app.add_subcommand("serve-check", "Protocol handshake with --scorer");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e, std::cerr, std::cerr);
    std::cerr << app.help() << std::flush;
    return kExitUsage;
  }

  const PipelineConfig config = resolve_config(g);
  const auto t0 = std::chrono::steady_clock::now();

  if (train->parsed()) {
    auto parallel = read_parallel(train_path);
    DelexModel model = stage1(parallel, config);
    model.save(out_path);
    std::cerr << "trained on " << parallel.size() << " pairs, vocab " << model.vocab().size()
              << ", fingerprint " << model.fingerprint() << "\n";
    return 0;
  }

  if (augment->parsed()) {
    std::vector<Table> sources;
    for (auto &row : read_any(train_path)) sources.push_back(std::move(row.table));
    auto tables = recombine(sources, n_augment, config.seed);
    write_file(out_path, [&](std::ostream &out) { write_tables(out, tables); });
    std::cerr << "wrote " << tables.size() << " recombined tables\n";
    return 0;
  }

  if (search->parsed()) {
    const RuleSet rules = load_rules(g.rules_path);
    auto model = load_model_if(model_path, config);
    Backend backend = make_backend(config, model);
    auto tables = read_tables(unlabeled_path);
    std::vector<LabeledSample> parallel;
    if (!train_path.empty()) parallel = read_parallel(train_path);
    PseudoCorpus pseudo =
        build_pseudo_corpus(*backend.generator, *backend.scorer, tables, rules, config, parallel);
    write_file(out_path, [&](std::ostream &out) { write_pseudo(out, pseudo.pairs); });
    if (!trace_path.empty()) write_traces(trace_path, pseudo);
    std::size_t steps = 0;
    for (const auto &t : pseudo.traces) steps += t.steps.size();
    std::cerr << "searched " << tables.size() << " tables, " << steps << " insertions, "
              << seconds_since(t0) << " s\n";
    return 0;
  }

  if (retrain->parsed()) {
    auto parallel = read_parallel(train_path);
    auto pseudo = read_parallel(pseudo_path, "q");
    DelexModel model = stage2(parallel, pseudo, config);
    model.save(out_path);
    std::cerr << "retrained on " << parallel.size() << " + " << pseudo.size() << " pairs\n";
    return 0;
  }

  if (selftrain->parsed()) {
    auto model = load_model_if(model_path, config);
    Backend backend = make_backend(config, model);
    auto parallel = read_parallel(train_path);
    auto tables = read_tables(unlabeled_path);
    SelfTrainResult result = self_train(*backend.generator, parallel, tables, config);
    result.model.save(out_path);
    if (!pseudo_out_path.empty()) {
      write_file(pseudo_out_path, [&](std::ostream &out) { write_pseudo(out, result.pseudo.pairs); });
    }
    return 0;
  }

  if (infer_cmd->parsed()) {
    auto model = load_model_if(model_path, config);
    Backend backend = make_backend(config, model);
    std::optional<RuleSet> rules;
    if (search_at_inference) rules = load_rules(g.rules_path);
    auto rows = read_any(data_path);
    PseudoCorpus traced;
    std::vector<std::string> lines;
    for (const auto &row : rows) {
      Sentence s = infer(*backend.generator, row.table, config);
      if (search_at_inference) {
        ProjectionResult p = project_to_feasible(*backend.scorer, row.table, s, *rules);
        s = std::move(p.sentence);
        traced.pairs.push_back({row.table, s, Provenance::kPseudoSearch});
        traced.traces.push_back(std::move(p.trace));
      }
      lines.push_back(one_line(detokenize(s)));
    }
    auto emit = [&](std::ostream &out) {
      for (const auto &l : lines) out << l << '\n';
    };
    if (out_path.empty()) {
      emit(std::cout);
    } else {
      write_file(out_path, emit);
    }
    if (!trace_path.empty() && search_at_inference) write_traces(trace_path, traced);
    std::cerr << "generated " << lines.size() << " outputs in " << seconds_since(t0) << " s\n";
    return 0;
  }

  if (eval->parsed()) {
    const MatchPatterns patterns = load_patterns(g.patterns_path);
    const RuleSet rules = load_rules(g.rules_path);
    auto rows = read_any(data_path);
    std::vector<Table> tables;
    std::vector<Sentence> outputs, refs;
    for (const auto &row : rows) tables.push_back(row.table);
    if (!hyp_path.empty()) {
      for (const auto &l : read_lines(hyp_path)) outputs.push_back(tokenize(l));
      while (outputs.size() > tables.size() && outputs.back().empty()) outputs.pop_back();
      bool have_refs = true;
      for (const auto &row : rows) {
        have_refs = have_refs && row.text.has_value();
        if (row.text) refs.push_back(*row.text);
      }
      if (!have_refs) refs.clear();
    } else {
      for (const auto &row : rows) {
        if (!row.text) throw UsageError("--data has no text column; pass --hyp");
        outputs.push_back(*row.text);
      }
    }
    std::optional<std::span<const Sentence>> ref_span;
    if (!refs.empty()) ref_span = std::span<const Sentence>(refs);
    EvalReport report = evaluate(outputs, tables, ref_span, patterns, &rules);
    report.print(std::cout);
    if (report.soft_coverage() != Rational(1) - report.ser() ||
        report.ser() != report.added() + report.missing() + report.wrong()) {
      throw Error(ErrorCategory::kData, "report identities violated");
    }
    if (!out_path.empty()) {
      write_file(out_path, [&](std::ostream &out) { out << report.to_json().dump(2) << '\n'; });
    }
    return 0;
  }

  if (serve->parsed()) {
    auto model = std::make_shared<const DelexModel>(DelexModel::load(model_path));
    ProtocolHandler handler(model, {config.length_normalize, config.threads}, config.decode());
    if (port == 0) {
      serve_stream(handler, std::cin, std::cout);
    } else {
      TcpServer server(handler, static_cast<std::uint16_t>(port));
      std::cerr << "listening on 127.0.0.1:" << server.port() << "\n";
      server.run();
    }
    return 0;
  }

  if (serve_check->parsed()) {
    if (config.scorer == "builtin") throw UsageError("serve-check needs --scorer tcp://... or stdio:...");
    RemoteScorer remote(config.scorer, config.remote);
    const Table table = parse_mr("name[The Mill], area[riverside]");
    const std::vector<Sentence> candidates{tokenize("The Mill is in riverside area."),
                                           tokenize("The Mill is in riverside area."),
                                           tokenize("riverside The Mill.")};
    std::vector<double> scores = remote.score(table, candidates);
    if (scores.size() != candidates.size()) {
      throw RemoteUnavailable("expected " + std::to_string(candidates.size()) + " scores");
    }
    if (scores[0] != scores[1]) {
      throw RemoteUnavailable("duplicate candidates scored differently");
    }
    std::cout << "handshake ok: " << remote.endpoint() << " scores";
    for (double s : scores) std::cout << ' ' << s;
    std::cout << '\n';
    return 0;
  }
  return kExitUsage;
}

}  // namespace

int main(int argc, char **argv) {
  try {
    return run(argc, argv);
  } catch (const s2l::Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.category()) {
      case s2l::ErrorCategory::kUsage: return kExitUsage;
      case s2l::ErrorCategory::kData: return kExitData;
      case s2l::ErrorCategory::kRemote: return kExitRemote;
    }
    return kExitData;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
