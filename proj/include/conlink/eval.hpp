// Copyright 2026 The conlink Authors
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

// Acc@k scoring.
//
// A single-part in-vocabulary mention is correct at k when any gold concept
// is among its top-k candidates. A composite mention is correct only if every
// part is: parts are matched in order, each consuming the best-ranked gold
// concept still unclaimed within its top-k. A nil-gold mention is correct
// when every part was rejected by the nil gate (full_set mode) and is left
// out of the denominator in in_kb_only mode.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "conlink/corpus.hpp"
#include "conlink/error.hpp"
#include "conlink/index.hpp"
#include "conlink/nilgate.hpp"
#include "conlink/random.hpp"

namespace conlink {

enum class NilMode { kInKbOnly, kFullSet };

inline const char* nil_mode_name(NilMode m) { return m == NilMode::kInKbOnly ? "in_kb_only" : "full_set"; }

inline NilMode parse_nil_mode(std::string_view s) {
  if (s == "in_kb_only") return NilMode::kInKbOnly;
  if (s == "full_set") return NilMode::kFullSet;
  throw ValidationError("unknown nil mode \"" + std::string(s) + "\"");
}

struct EvalConfig {
  std::vector<std::size_t> ks{1};
  NilMode nil_mode = NilMode::kInKbOnly;
  bool refined = false;

  void validate() const {
    if (ks.empty()) throw ValidationError("at least one k is required");
    for (auto k : ks)
      if (k < 1) throw ValidationError("k must be at least 1");
  }
};

struct Adjudication {
  std::size_t record = 0;  // position in the scored corpus
  std::string source_id;
  std::string text;
  bool gold_nil = false;
  bool predicted_nil = false;
  std::vector<bool> correct;  // one per k
  std::string predicted;      // top-1 concepts per part, '|' separated; "nil" for rejected parts
};

struct EvalReport {
  std::vector<std::size_t> ks;
  std::vector<double> accuracy;      // per k, correct / total
  std::vector<std::size_t> correct;  // per k
  NilMode nil_mode = NilMode::kInKbOnly;
  std::size_t total = 0;          // records in the denominator
  std::size_t nil_gold = 0;       // nil-gold records seen (scored or excluded)
  std::size_t excluded_nil = 0;   // nil-gold records left out in in_kb_only mode
  std::size_t nil_predicted = 0;  // records whose every part was rejected
  std::size_t skipped = 0;        // gold concept missing from the terminology
  std::vector<Adjudication> adjudications;

  double acc(std::size_t k) const {
    for (std::size_t i = 0; i < ks.size(); ++i)
      if (ks[i] == k) return accuracy[i];
    throw NotFoundError("k=" + std::to_string(k) + " was not evaluated");
  }
};

namespace detail {

inline bool predicted_nil(const RecordPrediction& p) {
  return std::all_of(p.begin(), p.end(), [](const ComponentPrediction& c) { return !c.has_value(); });
}

inline bool correct_at(const RecordPrediction& pred, const MentionRecord& gold, std::size_t k) {
  if (gold.gold.empty()) return predicted_nil(pred);
  std::set<ConceptId> available = gold.gold;
  const bool single = pred.size() == 1;
  for (const auto& comp : pred) {
    if (!comp) return false;
    const std::size_t depth = std::min(k, comp->ranked.size());
    bool matched = false;
    for (std::size_t r = 0; r < depth && !matched; ++r) {
      auto it = available.find(comp->ranked[r].cui);
      if (it != available.end()) {
        if (!single) available.erase(it);
        matched = true;
      }
    }
    if (!matched) return false;
  }
  return true;
}

}  // namespace detail

/// Scores aligned predictions against gold records for every k in `ks`.
inline EvalReport score(std::span<const RecordPrediction> preds, std::span<const MentionRecord> golds,
                        std::span<const std::size_t> ks, NilMode mode) {
  if (preds.size() != golds.size())
    throw ValidationError("have " + std::to_string(preds.size()) + " predictions for " +
                          std::to_string(golds.size()) + " gold records");
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i].size() != golds[i].components.size())
      throw ValidationError("record " + std::to_string(i) + " has " + std::to_string(preds[i].size()) +
                            " predicted parts but " + std::to_string(golds[i].components.size()) + " components");
  EvalReport rep;
  rep.ks.assign(ks.begin(), ks.end());
  rep.nil_mode = mode;
  rep.correct.assign(ks.size(), 0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& g = golds[i];
    const bool pnil = detail::predicted_nil(preds[i]);
    rep.nil_predicted += pnil;
    if (g.is_nil()) {
      ++rep.nil_gold;
      if (mode == NilMode::kInKbOnly) {
        ++rep.excluded_nil;
        continue;
      }
    }
    Adjudication a;
    a.record = i;
    a.source_id = g.source_id;
    a.text = g.normalized_text;
    a.gold_nil = g.is_nil();
    a.predicted_nil = pnil;
    for (std::size_t c = 0; c < preds[i].size(); ++c) {
      if (c) a.predicted += '|';
      const auto& comp = preds[i][c];
      a.predicted += (comp && !comp->ranked.empty()) ? comp->top().str() : std::string("nil");
    }
    for (std::size_t j = 0; j < ks.size(); ++j) {
      const bool ok = detail::correct_at(preds[i], g, ks[j]);
      a.correct.push_back(ok);
      rep.correct[j] += ok;
    }
    rep.adjudications.push_back(std::move(a));
    ++rep.total;
  }
  for (auto c : rep.correct)
    rep.accuracy.push_back(rep.total ? static_cast<double>(c) / static_cast<double>(rep.total) : 0.0);
  return rep;
}

inline EvalReport acc_at_k(std::span<const RecordPrediction> preds, std::span<const MentionRecord> golds,
                           std::size_t k, NilMode mode = NilMode::kInKbOnly) {
  if (k < 1) throw ValidationError("k must be at least 1");
  const std::size_t ks[] = {k};
  return score(preds, golds, ks, mode);
}

/// Refine (when configured), drop records with uncovered gold, link, gate
/// and score.
inline EvalReport evaluate_pipeline(const Terminology& t, const Encoder& enc, const VectorIndex& ix,
                                    const NilThreshold* th, const Corpus& test, const EvalConfig& cfg,
                                    const Corpus* train = nullptr,
                                    FingerprintPolicy policy = FingerprintPolicy::kFail) {
  cfg.validate();
  const Corpus scored_input = cfg.refined ? refine(test, train) : test;
  std::vector<MentionRecord> kept;
  std::size_t skipped = 0;
  for (const auto& r : scored_input.records) {
    if (gold_covered(r, t)) kept.push_back(r);
    else ++skipped;
  }
  Linker linker(ix, enc, policy);
  const std::size_t kmax = *std::max_element(cfg.ks.begin(), cfg.ks.end());
  auto preds = linker.link_records(kept, kmax);
  if (th)
    for (auto& p : preds) p = apply_gate(p, *th);
  EvalReport rep = score(preds, kept, cfg.ks, cfg.nil_mode);
  rep.skipped = skipped;
  return rep;
}

inline void print_report(std::ostream& os, const EvalReport& rep) {
  os << "mode          " << nil_mode_name(rep.nil_mode) << '\n';
  os << "records       " << rep.total << '\n';
  os << "nil gold      " << rep.nil_gold << (rep.excluded_nil ? " (excluded)" : "") << '\n';
  os << "nil predicted " << rep.nil_predicted << '\n';
  os << "skipped       " << rep.skipped << '\n';
  for (std::size_t i = 0; i < rep.ks.size(); ++i) {
    char line[96];
    std::snprintf(line, sizeof line, "Acc@%-9zu %.4f  (%zu/%zu)\n", rep.ks[i], rep.accuracy[i], rep.correct[i],
                  rep.total);
    os << line;
  }
}

inline void write_adjudications(std::ostream& os, const EvalReport& rep) {
  os << "record\tsource_id\ttext\tgold_nil\tpredicted\tpredicted_nil";
  for (auto k : rep.ks) os << "\tacc@" << k;
  os << '\n';
  for (const auto& a : rep.adjudications) {
    os << a.record << '\t' << a.source_id << '\t' << a.text << '\t' << a.gold_nil << '\t' << a.predicted << '\t'
       << a.predicted_nil;
    for (bool c : a.correct) os << '\t' << c;
    os << '\n';
  }
}

struct NilStudyResult {
  // Full-set Acc@1 per repetition, per strategy (min_fp, max_tp, weighted).
  std::vector<double> min_fp, max_tp, weighted;

  static double mean(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  }
};

/// Repeated dev/test resampling: each repetition draws `dev_size` records
/// for fitting, scores the rest in full_set mode with each strategy's
/// threshold. Linking is done once; only the split changes.
inline NilStudyResult nil_threshold_study(const VectorIndex& ix, const Encoder& enc, const Corpus& pool,
                                          std::size_t dev_size, std::size_t repetitions, std::uint64_t seed,
                                          Weighting w = Weighting::kTpOnMinFp) {
  Linker linker(ix, enc, FingerprintPolicy::kIgnore);
  const auto preds = linker.link_records(pool.records, 1);
  NilStudyResult res;
  const std::size_t k1[] = {1};
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    Rng rng(derive_seed(seed, {rep}));
    auto dev_idx = sample_without_replacement(pool.size(), dev_size, rng);
    std::vector<bool> in_dev(pool.size(), false);
    for (auto i : dev_idx) in_dev[i] = true;
    std::vector<RecordPrediction> dev_p, test_p;
    std::vector<MentionRecord> dev_g, test_g;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      (in_dev[i] ? dev_p : test_p).push_back(preds[i]);
      (in_dev[i] ? dev_g : test_g).push_back(pool.records[i]);
    }
    const auto dist = collect_dev_distances(dev_p, dev_g);
    const auto run = [&](ThresholdStrategy s) {
      const auto th = fit_from_distances(dist, s, w);
      std::vector<RecordPrediction> gated;
      gated.reserve(test_p.size());
      for (const auto& p : test_p) gated.push_back(apply_gate(p, th));
      return score(gated, test_g, k1, NilMode::kFullSet).accuracy.front();
    };
    res.min_fp.push_back(run(ThresholdStrategy::kMinFp));
    res.max_tp.push_back(run(ThresholdStrategy::kMaxTp));
    res.weighted.push_back(run(ThresholdStrategy::kWeighted));
  }
  return res;
}

}  // namespace conlink
