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

// Conditional sentence scoring P(y | T).
//
// DelexModel is an interpolated n-gram model over delexicalized text: slot
// values in the references are replaced by __slot__ placeholders, so the
// table conditions the model through which placeholders may be emitted.
// For history h and next token w
//
//   p(w | h) = sum_k lambda_k c(h_k, w) / c(h_k)   over orders k whose
//                                                  context h_k was seen,
//
// renormalized over the seen orders. Placeholders of slots absent from the
// table are removed and the rest renormalized, then an additive floor eps
// keeps every allowed token at probability >= eps:
//
//   p'(w) = (1 - |A| eps) p(w) + eps
//
// Scores are total log probabilities including the end marker.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "s2l/error.hpp"
#include "s2l/fields.hpp"
#include "s2l/match.hpp"
#include "s2l/tabular.hpp"

namespace s2l {

inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";
inline constexpr std::string_view kUnk = "<unk>";

struct SmoothingConfig {
  std::vector<double> lambdas{0.1, 0.3, 0.6};  // unigram first
  double epsilon = 1e-6;
};

struct DecodeOptions {
  std::size_t max_len = 40;
  std::size_t beam_width = 1;
  // Forbid repeating any n-gram of this size within one output (0 = off).
  std::size_t no_repeat_ngram = 0;
};

// 64-bit FNV-1a, hex encoded.
inline std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static const char *kHex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kHex[h & 0xf];
    h >>= 4;
  }
  return out;
}

inline std::string corpus_fingerprint(std::span<const Sample> pairs) {
  std::string blob;
  for (const auto &[table, sentence] : pairs) {
    blob += linearize(table);
    blob += '\t';
    blob += detokenize(sentence);
    blob += '\n';
  }
  return fnv1a_hex(blob);
}

class DelexModel {
 public:
  using Id = std::int32_t;

  struct ContextStats {
    std::uint64_t total = 0;
    std::map<Id, std::uint64_t> next;

    friend bool operator==(const ContextStats &, const ContextStats &) = default;
  };

  DelexModel() = default;

  static DelexModel fit(std::span<const Sample> pairs, int order,
                        const SmoothingConfig &smoothing = {}) {
    if (pairs.empty()) throw EmptyCorpus("cannot fit a model on zero pairs");
    if (order < 2) throw UsageError("n-gram order must be >= 2");
    check_smoothing(order, smoothing);

    std::vector<std::vector<std::string>> delexed;
    std::set<std::string> vocab{std::string(kEos), std::string(kUnk)};
    for (const auto &[table, sentence] : pairs) {
      delexed.push_back(delexicalize(sentence, table).words());
      vocab.insert(delexed.back().begin(), delexed.back().end());
    }
    DelexModel m;
    m.order_ = order;
    m.smoothing_ = smoothing;
    m.fingerprint_ = corpus_fingerprint(pairs);
    m.set_vocab({vocab.begin(), vocab.end()});
    for (const auto &words : delexed) {
      std::vector<Id> seq(static_cast<std::size_t>(order - 1), kBosId);
      for (const auto &w : words) seq.push_back(m.id(w));
      seq.push_back(m.eos_);
      for (std::size_t i = static_cast<std::size_t>(order - 1); i < seq.size(); ++i) {
        for (int k = 1; k <= order; ++k) {
          std::vector<Id> ctx(seq.begin() + static_cast<std::ptrdiff_t>(i) - (k - 1),
                              seq.begin() + static_cast<std::ptrdiff_t>(i));
          ContextStats &st = m.counts_[ctx];
          ++st.total;
          ++st.next[seq[i]];
        }
      }
    }
    return m;
  }

  int order() const { return order_; }
  const SmoothingConfig &smoothing() const { return smoothing_; }
  const std::string &fingerprint() const { return fingerprint_; }
  const std::vector<std::string> &vocab() const { return vocab_; }
  const std::map<std::vector<Id>, ContextStats> &counts() const { return counts_; }

  // Distribution over the vocabulary after `context` (delexicalized tokens;
  // shorter contexts are padded with start markers). Placeholders of slots
  // absent from `table` get probability zero.
  std::map<std::string, double> next_token_dist(std::span<const std::string> context,
                                                const Table &table) const {
    const std::vector<Id> hist = history(context);
    const std::vector<bool> allowed = allowed_mask(table);
    std::map<std::string, double> out;
    const Restriction r = restriction(hist, allowed);
    for (std::size_t w = 0; w < vocab_.size(); ++w) {
      out[vocab_[w]] = allowed[w] ? restricted_prob(hist, static_cast<Id>(w), r) : 0.0;
    }
    return out;
  }

  // Sum of log probabilities of the delexicalized sentence plus end marker.
  double log_prob(const Table &table, const Sentence &sentence) const {
    return log_prob_words(table, delexicalize(sentence, table).words());
  }

  double log_prob_words(const Table &table, std::span<const std::string> words) const {
    const std::vector<bool> allowed = allowed_mask(table);
    std::vector<Id> hist(static_cast<std::size_t>(order_ - 1), kBosId);
    double total = 0.0;
    auto step = [&](Id w) {
      std::span<const Id> ctx(hist.data() + hist.size() - static_cast<std::size_t>(order_ - 1),
                              static_cast<std::size_t>(order_ - 1));
      total += std::log(restricted_prob(ctx, w, restriction(ctx, allowed)));
      hist.push_back(w);
    };
    for (const auto &word : words) {
      Id w = id(word);
      if (!allowed[static_cast<std::size_t>(w)]) w = unk_;
      step(w);
    }
    step(eos_);
    return total;
  }

  // Beam search over delexicalized tokens, then relexicalized with `table`.
  // Ties are broken by lexicographic token order.
  Sentence decode(const Table &table, const DecodeOptions &opts) const {
    return relexicalize(decode_delex(table, opts), table);
  }

  std::vector<std::string> decode_delex(const Table &table, const DecodeOptions &opts) const {
    if (opts.max_len < 1) throw UsageError("max_len must be >= 1");
    if (opts.beam_width < 1) throw UsageError("beam_width must be >= 1");
    const std::vector<bool> allowed = allowed_mask(table);
    struct Hyp {
      std::vector<Id> tokens;
      double score = 0.0;
    };
    auto better = [](const Hyp &a, const Hyp &b) {
      if (a.score != b.score) return a.score > b.score;
      return a.tokens < b.tokens;  // ids follow lexicographic vocab order
    };
    std::vector<Hyp> active{Hyp{}};
    std::vector<Hyp> finished;
    std::vector<Id> hist;
    for (std::size_t step = 0; step < opts.max_len && !active.empty(); ++step) {
      std::vector<Hyp> expanded;
      for (const Hyp &h : active) {
        hist.assign(static_cast<std::size_t>(order_ - 1), kBosId);
        hist.insert(hist.end(), h.tokens.begin(), h.tokens.end());
        std::span<const Id> ctx(hist.data() + hist.size() - static_cast<std::size_t>(order_ - 1),
                                static_cast<std::size_t>(order_ - 1));
        const Restriction r = restriction(ctx, allowed);
        for (std::size_t w = 0; w < vocab_.size(); ++w) {
          if (!allowed[w] || static_cast<Id>(w) == unk_) continue;
          if (repeats_ngram(h.tokens, static_cast<Id>(w), opts.no_repeat_ngram)) continue;
          Hyp next = h;
          next.tokens.push_back(static_cast<Id>(w));
          next.score += std::log(restricted_prob(ctx, static_cast<Id>(w), r));
          expanded.push_back(std::move(next));
        }
      }
      std::sort(expanded.begin(), expanded.end(), better);
      if (expanded.size() > opts.beam_width) expanded.resize(opts.beam_width);
      active.clear();
      for (Hyp &h : expanded) {
        (h.tokens.back() == eos_ ? finished : active).push_back(std::move(h));
      }
      // Scores only fall as hypotheses grow, so once a finished hypothesis
      // beats every active one nothing can overtake it.
      if (!finished.empty() && !active.empty()) {
        const Hyp &best = *std::min_element(finished.begin(), finished.end(), better);
        if (!better(active.front(), best)) break;
      }
    }
    for (Hyp &h : active) {
      // Ran out of length: close with the end marker.
      hist.assign(static_cast<std::size_t>(order_ - 1), kBosId);
      hist.insert(hist.end(), h.tokens.begin(), h.tokens.end());
      std::span<const Id> ctx(hist.data() + hist.size() - static_cast<std::size_t>(order_ - 1),
                              static_cast<std::size_t>(order_ - 1));
      h.score += std::log(restricted_prob(ctx, eos_, restriction(ctx, allowed)));
      h.tokens.push_back(eos_);
      finished.push_back(std::move(h));
    }
    std::sort(finished.begin(), finished.end(), better);
    std::vector<std::string> words;
    for (Id w : finished.front().tokens) {
      if (w != eos_) words.push_back(vocab_[static_cast<std::size_t>(w)]);
    }
    return words;
  }

  // ---- persistence -------------------------------------------------------

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = "s2l-delex-ngram";
    j["version"] = 1;
    j["order"] = order_;
    j["lambdas"] = smoothing_.lambdas;
    j["epsilon"] = smoothing_.epsilon;
    j["fingerprint"] = fingerprint_;
    j["vocab"] = vocab_;
    nlohmann::json counts = nlohmann::json::array();
    for (const auto &[ctx, st] : counts_) {
      nlohmann::json c;
      std::vector<std::string> words;
      for (Id w : ctx) words.push_back(w == kBosId ? std::string(kBos) : vocab_[static_cast<std::size_t>(w)]);
      c["context"] = words;
      nlohmann::json next = nlohmann::json::array();
      for (const auto &[w, n] : st.next) next.push_back({vocab_[static_cast<std::size_t>(w)], n});
      c["next"] = next;
      counts.push_back(std::move(c));
    }
    j["counts"] = std::move(counts);
    return j;
  }

  static DelexModel from_json(const nlohmann::json &j) {
    try {
      if (j.at("format") != "s2l-delex-ngram" || j.at("version") != 1) {
        throw ModelFormatError("unsupported model format");
      }
      DelexModel m;
      m.order_ = j.at("order").get<int>();
      m.smoothing_.lambdas = j.at("lambdas").get<std::vector<double>>();
      m.smoothing_.epsilon = j.at("epsilon").get<double>();
      m.fingerprint_ = j.at("fingerprint").get<std::string>();
      if (m.order_ < 2) throw ModelFormatError("order < 2");
      check_smoothing(m.order_, m.smoothing_);
      m.set_vocab(j.at("vocab").get<std::vector<std::string>>());
      for (const auto &c : j.at("counts")) {
        std::vector<Id> ctx;
        for (const auto &w : c.at("context")) {
          const std::string s = w.get<std::string>();
          ctx.push_back(s == kBos ? kBosId : m.checked_id(s));
        }
        ContextStats &st = m.counts_[ctx];
        for (const auto &e : c.at("next")) {
          std::uint64_t n = e.at(1).get<std::uint64_t>();
          st.next[m.checked_id(e.at(0).get<std::string>())] += n;
          st.total += n;
        }
      }
      return m;
    } catch (const nlohmann::json::exception &e) {
      throw ModelFormatError(e.what());
    }
  }

  void save(const std::string &path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << to_json().dump(1) << '\n';
  }

  static DelexModel load(const std::string &path) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(detail::read_file(path));
    } catch (const nlohmann::json::parse_error &e) {
      throw ModelFormatError(path + ": " + e.what());
    }
    return from_json(j);
  }

  friend bool operator==(const DelexModel &a, const DelexModel &b) {
    return a.order_ == b.order_ && a.smoothing_.lambdas == b.smoothing_.lambdas &&
           a.smoothing_.epsilon == b.smoothing_.epsilon &&
           a.fingerprint_ == b.fingerprint_ && a.vocab_ == b.vocab_ &&
           a.counts_ == b.counts_;
  }

 private:
  static constexpr Id kBosId = -1;

  struct Restriction {
    double kept_mass = 1.0;     // interpolated mass on allowed tokens
    std::size_t n_allowed = 0;
  };

  // True if appending `w` to `tokens` recreates an n-gram already present.
  static bool repeats_ngram(const std::vector<Id> &tokens, Id w, std::size_t n) {
    if (n == 0 || tokens.size() + 1 < n) return false;
    if (n == 1) return std::find(tokens.begin(), tokens.end(), w) != tokens.end();
    const std::size_t tail = tokens.size() - (n - 1);  // start of the new n-gram
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      if (tokens[i + n - 1] != w) continue;
      if (std::equal(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                     tokens.begin() + static_cast<std::ptrdiff_t>(i + n - 1),
                     tokens.begin() + static_cast<std::ptrdiff_t>(tail))) {
        return true;
      }
    }
    return false;
  }

  static void check_smoothing(int order, const SmoothingConfig &s) {
    if (static_cast<int>(s.lambdas.size()) != order) {
      throw UsageError("need exactly one interpolation weight per order");
    }
    double sum = 0.0;
    for (double l : s.lambdas) {
      if (!(l >= 0.0)) throw UsageError("interpolation weights must be >= 0");
      sum += l;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw UsageError("interpolation weights must sum to 1");
    if (!(s.epsilon > 0.0)) throw UsageError("epsilon must be > 0");
  }

  void set_vocab(std::vector<std::string> vocab) {
    vocab_ = std::move(vocab);
    index_.clear();
    placeholders_.clear();
    for (std::size_t i = 0; i < vocab_.size(); ++i) {
      index_[vocab_[i]] = static_cast<Id>(i);
      if (is_placeholder(vocab_[i])) placeholders_.push_back(static_cast<Id>(i));
    }
    eos_ = checked_id(std::string(kEos));
    unk_ = checked_id(std::string(kUnk));
  }

  Id id(const std::string &word) const {
    auto it = index_.find(word);
    return it == index_.end() ? unk_ : it->second;
  }

  Id checked_id(const std::string &word) const {
    auto it = index_.find(word);
    if (it == index_.end()) throw ModelFormatError("token not in vocab: " + word);
    return it->second;
  }

  std::vector<Id> history(std::span<const std::string> context) const {
    const auto need = static_cast<std::size_t>(order_ - 1);
    std::vector<Id> hist;
    for (std::size_t i = context.size(); i < need; ++i) hist.push_back(kBosId);
    std::size_t start = context.size() > need ? context.size() - need : 0;
    for (std::size_t i = start; i < context.size(); ++i) hist.push_back(id(context[i]));
    return hist;
  }

  std::vector<bool> allowed_mask(const Table &table) const {
    std::vector<bool> allowed(vocab_.size(), true);
    for (Id p : placeholders_) {
      allowed[static_cast<std::size_t>(p)] =
          slot_for_placeholder(table, vocab_[static_cast<std::size_t>(p)]) != nullptr;
    }
    return allowed;
  }

  // Interpolated probability before restriction and flooring. `ctx` holds
  // exactly order-1 ids.
  double interpolated(std::span<const Id> ctx, Id w) const {
    double num = 0.0, weight = 0.0;
    std::vector<Id> key;
    for (int k = 1; k <= order_; ++k) {
      key.assign(ctx.end() - (k - 1), ctx.end());
      auto it = counts_.find(key);
      if (it == counts_.end() || it->second.total == 0) continue;
      const double lambda = smoothing_.lambdas[static_cast<std::size_t>(k - 1)];
      weight += lambda;
      auto nx = it->second.next.find(w);
      if (nx != it->second.next.end()) {
        num += lambda * static_cast<double>(nx->second) /
               static_cast<double>(it->second.total);
      }
    }
    if (weight == 0.0) return 1.0 / static_cast<double>(vocab_.size());
    return num / weight;
  }

  Restriction restriction(std::span<const Id> ctx, const std::vector<bool> &allowed) const {
    Restriction r;
    r.n_allowed = static_cast<std::size_t>(std::count(allowed.begin(), allowed.end(), true));
    double removed = 0.0;
    for (Id p : placeholders_) {
      if (!allowed[static_cast<std::size_t>(p)]) removed += interpolated(ctx, p);
    }
    r.kept_mass = 1.0 - removed;
    return r;
  }

  double restricted_prob(std::span<const Id> ctx, Id w, const Restriction &r) const {
    const double eps = smoothing_.epsilon;
    const double n = static_cast<double>(r.n_allowed);
    if (n * eps >= 1.0) return 1.0 / n;
    double p = r.kept_mass > 1e-300 ? interpolated(ctx, w) / r.kept_mass : 1.0 / n;
    return (1.0 - n * eps) * p + eps;
  }

  int order_ = 3;
  SmoothingConfig smoothing_;
  std::string fingerprint_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, Id> index_;
  std::vector<Id> placeholders_;
  Id eos_ = 0;
  Id unk_ = 0;
  std::map<std::vector<Id>, ContextStats> counts_;
};

// ---------------------------------------------------------------------------
// Scorer and generator interfaces

// Scores a batch of candidate sentences for one table. Implementations
// return one finite log probability per candidate, in candidate order.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::vector<double> score(const Table &table,
                                    std::span<const Sentence> candidates) = 0;
};

class Generator {
 public:
  virtual ~Generator() = default;
  virtual Sentence generate(const Table &table, const DecodeOptions &opts) = 0;
};

struct LocalScorerOptions {
  bool length_normalize = false;  // divide by token count + 1
  unsigned threads = 1;
};

class LocalScorer : public Scorer, public Generator {
 public:
  explicit LocalScorer(std::shared_ptr<const DelexModel> model,
                       LocalScorerOptions opts = {})
      : model_(std::move(model)), opts_(opts) {}

  std::vector<double> score(const Table &table,
                            std::span<const Sentence> candidates) override {
    std::vector<double> out(candidates.size());
    auto work = [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) out[i] = score_one(table, candidates[i]);
    };
    const std::size_t n = candidates.size();
    const std::size_t threads = std::min<std::size_t>(std::max(1u, opts_.threads), n);
    if (threads <= 1) {
      work(0, n);
      return out;
    }
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t b = 0; b < n; b += chunk) {
      pool.emplace_back(work, b, std::min(n, b + chunk));
    }
    pool.clear();
    return out;
  }

  Sentence generate(const Table &table, const DecodeOptions &opts) override {
    return model_->decode(table, opts);
  }

  const DelexModel &model() const { return *model_; }

 private:
  double score_one(const Table &table, const Sentence &s) const {
    double lp = model_->log_prob(table, s);
    if (opts_.length_normalize) {
      lp /= static_cast<double>(delexicalize(s, table).tokens.size() + 1);
    }
    return lp;
  }

  std::shared_ptr<const DelexModel> model_;
  LocalScorerOptions opts_;
};

}  // namespace s2l
