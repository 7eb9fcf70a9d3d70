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

#pragma once

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "s2l/error.hpp"
#include "s2l/match.hpp"
#include "s2l/tabular.hpp"
#include "s2l/templates.hpp"

namespace s2l {

// Corpus-level BLEU-4 (clipped n-gram precision, geometric mean, brevity
// penalty) against a single reference. Diagnostic only.
inline double bleu_plumbing(std::span<const Sentence> hyps, std::span<const Sentence> refs,
                            int max_n = 4) {
  if (hyps.size() != refs.size()) throw LengthMismatch("hypotheses vs references");
  std::vector<std::int64_t> matched(static_cast<std::size_t>(max_n), 0);
  std::vector<std::int64_t> total(static_cast<std::size_t>(max_n), 0);
  std::int64_t hyp_len = 0, ref_len = 0;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    const auto h = hyps[i].words();
    const auto r = refs[i].words();
    hyp_len += static_cast<std::int64_t>(h.size());
    ref_len += static_cast<std::int64_t>(r.size());
    for (int n = 1; n <= max_n; ++n) {
      auto grams = [n](const std::vector<std::string> &w) {
        std::map<std::vector<std::string>, std::int64_t> out;
        for (std::size_t k = 0; k + static_cast<std::size_t>(n) <= w.size(); ++k) {
          ++out[{w.begin() + static_cast<std::ptrdiff_t>(k),
                 w.begin() + static_cast<std::ptrdiff_t>(k) + n}];
        }
        return out;
      };
      const auto hg = grams(h);
      const auto rg = grams(r);
      for (const auto &[g, c] : hg) {
        auto it = rg.find(g);
        matched[static_cast<std::size_t>(n - 1)] += std::min(c, it == rg.end() ? 0 : it->second);
        total[static_cast<std::size_t>(n - 1)] += c;
      }
    }
  }
  if (hyp_len == 0) return 0.0;
  double log_sum = 0.0;
  for (int n = 0; n < max_n; ++n) {
    if (matched[static_cast<std::size_t>(n)] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(matched[static_cast<std::size_t>(n)]) /
                        static_cast<double>(total[static_cast<std::size_t>(n)]));
  }
  const double bp = hyp_len >= ref_len ? 1.0
                                       : std::exp(1.0 - static_cast<double>(ref_len) /
                                                            static_cast<double>(hyp_len));
  return bp * std::exp(log_sum / max_n);
}

struct EvalReport {
  std::size_t n_samples = 0;
  Rational hard_coverage;
  ErrorCounts counts;
  double avg_len = 0.0;
  std::optional<double> bleu_plumbing;

  Rational ser() const { return counts.ser(); }
  Rational soft_coverage() const { return counts.soft_coverage(); }
  Rational added() const { return counts.added_rate(); }
  Rational missing() const { return counts.missing_rate(); }
  Rational wrong() const { return counts.wrong_rate(); }

  nlohmann::json to_json() const {
    auto frac = [](const Rational &r) {
      return nlohmann::json{{"num", r.numerator()}, {"den", r.denominator()},
                            {"value", to_double(r)}};
    };
    nlohmann::json j;
    j["n_samples"] = n_samples;
    j["hard_coverage"] = frac(hard_coverage);
    j["ser"] = frac(ser());
    j["soft_coverage"] = frac(soft_coverage());
    j["ser_breakdown"] = {{"added", frac(added())},
                          {"missing", frac(missing())},
                          {"wrong", frac(wrong())}};
    j["slot_counts"] = {{"added", counts.added},
                        {"missing", counts.missing},
                        {"wrong", counts.wrong},
                        {"slots", counts.slots}};
    j["avg_len"] = avg_len;
    if (bleu_plumbing) {
      j["bleu_plumbing"] = *bleu_plumbing;
      j["bleu_plumbing_note"] = "simple n-gram overlap; not comparable to official BLEU";
    }
    return j;
  }

  // Table-style summary.
  void print(std::ostream &out) const {
    auto pct = [](const Rational &r) {
      std::ostringstream ss;
      ss << std::fixed << std::setprecision(2) << 100.0 * to_double(r) << "%";
      return ss.str();
    };
    out << std::left << std::setw(8) << "Samples" << std::setw(8) << "AvgLen"
        << std::setw(16) << "Hard Coverage" << std::setw(10) << "SER" << std::setw(16)
        << "Soft Coverage" << std::setw(8) << "Add" << std::setw(8) << "Miss"
        << std::setw(8) << "Wrong";
    if (bleu_plumbing) out << "BLEU (plumbing)";
    out << '\n';
    std::ostringstream len;
    len << std::fixed << std::setprecision(2) << avg_len;
    out << std::setw(8) << n_samples << std::setw(8) << len.str() << std::setw(16)
        << pct(hard_coverage) << std::setw(10) << pct(ser()) << std::setw(16)
        << pct(soft_coverage()) << std::setw(8) << pct(added()) << std::setw(8)
        << pct(missing()) << std::setw(8) << pct(wrong());
    if (bleu_plumbing) out << std::fixed << std::setprecision(2) << 100.0 * *bleu_plumbing;
    out << '\n';
  }
};

// Pooled metrics over aligned outputs and tables. `rules` switches hard
// coverage of boolean-like slots to their rendered phrase.
inline EvalReport evaluate(std::span<const Sentence> outputs, std::span<const Table> tables,
                           std::optional<std::span<const Sentence>> refs,
                           const MatchPatterns &patterns, const RuleSet *rules = nullptr) {
  if (outputs.size() != tables.size()) {
    throw LengthMismatch(std::to_string(outputs.size()) + " outputs vs " +
                         std::to_string(tables.size()) + " tables");
  }
  if (refs && refs->size() != outputs.size()) {
    throw LengthMismatch(std::to_string(refs->size()) + " references vs " +
                         std::to_string(outputs.size()) + " outputs");
  }
  if (outputs.empty()) throw EmptyCorpus("nothing to evaluate");
  EvalReport report;
  report.n_samples = outputs.size();
  std::vector<Sample> samples;
  std::int64_t tokens = 0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    samples.emplace_back(tables[i], outputs[i]);
    report.counts += classify_soft(tables[i], outputs[i], patterns);
    tokens += static_cast<std::int64_t>(outputs[i].size());
  }
  report.hard_coverage = corpus_coverage(samples, rules);
  report.avg_len = static_cast<double>(tokens) / static_cast<double>(outputs.size());
  if (refs) report.bleu_plumbing = bleu_plumbing(outputs, *refs);
  return report;
}

}  // namespace s2l
