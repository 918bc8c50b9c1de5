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

// Out-of-vocabulary (nil) detection: a mention component is rejected when
// its nearest concept is farther than a threshold fitted on a dev set.
//
// Dev distances come in two sets, both taken from the nearest candidate:
//   FP  components of nil-gold mentions (the linker would map them anyway)
//   TP  components of in-vocabulary mentions whose top-1 concept is gold
// min_fp uses min(FP), max_tp uses max(TP) and weighted blends the two with
// w = n_tp / (n_tp + n_fp).

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "conlink/corpus.hpp"
#include "conlink/error.hpp"
#include "conlink/index.hpp"

namespace conlink {

enum class ThresholdStrategy { kMinFp, kMaxTp, kWeighted };

inline const char* threshold_strategy_name(ThresholdStrategy s) {
  switch (s) {
    case ThresholdStrategy::kMinFp: return "min_fp";
    case ThresholdStrategy::kMaxTp: return "max_tp";
    case ThresholdStrategy::kWeighted: return "weighted";
  }
  return "?";
}

inline ThresholdStrategy parse_threshold_strategy(std::string_view s) {
  if (s == "min_fp") return ThresholdStrategy::kMinFp;
  if (s == "max_tp") return ThresholdStrategy::kMaxTp;
  if (s == "weighted") return ThresholdStrategy::kWeighted;
  throw ValidationError("unknown threshold strategy \"" + std::string(s) + "\"");
}

// Which term of the weighted blend receives the TP proportion.
enum class Weighting { kTpOnMinFp, kTpOnMaxTp };

inline const char* weighting_name(Weighting w) { return w == Weighting::kTpOnMinFp ? "tp_on_min_fp" : "tp_on_max_tp"; }

inline Weighting parse_weighting(std::string_view s) {
  if (s == "tp_on_min_fp") return Weighting::kTpOnMinFp;
  if (s == "tp_on_max_tp") return Weighting::kTpOnMaxTp;
  throw ValidationError("unknown threshold weighting \"" + std::string(s) + "\"");
}

struct NilThreshold {
  ThresholdStrategy strategy = ThresholdStrategy::kWeighted;
  Weighting weighting = Weighting::kTpOnMinFp;
  double value = 0;
  std::size_t n_tp = 0;
  std::size_t n_fp = 0;
  std::optional<double> t_min_fp;
  std::optional<double> t_max_tp;

  friend bool operator==(const NilThreshold&, const NilThreshold&) = default;
};

struct DevDistances {
  std::vector<double> tp;
  std::vector<double> fp;
};

/// Recomputes a threshold value from stored statistics.
inline double threshold_from_stats(ThresholdStrategy s, Weighting w, std::size_t n_tp, std::size_t n_fp,
                                   std::optional<double> t_min_fp, std::optional<double> t_max_tp) {
  switch (s) {
    case ThresholdStrategy::kMinFp:
      if (!t_min_fp) throw ValidationError("min_fp threshold needs at least one out-of-vocabulary dev mention");
      return *t_min_fp;
    case ThresholdStrategy::kMaxTp:
      if (!t_max_tp) throw ValidationError("max_tp threshold needs at least one correctly linked dev mention");
      return *t_max_tp;
    case ThresholdStrategy::kWeighted: {
      if (!t_min_fp || !t_max_tp || n_tp + n_fp == 0)
        throw ValidationError(
            "weighted threshold needs both an out-of-vocabulary and a correctly linked dev mention");
      const double tp_share = static_cast<double>(n_tp) / static_cast<double>(n_tp + n_fp);
      const double w_min_fp = w == Weighting::kTpOnMinFp ? tp_share : 1.0 - tp_share;
      return w_min_fp * *t_min_fp + (1.0 - w_min_fp) * *t_max_tp;
    }
  }
  throw ValidationError("unknown threshold strategy");
}

inline NilThreshold fit_from_distances(const DevDistances& d, ThresholdStrategy s,
                                       Weighting w = Weighting::kTpOnMinFp) {
  NilThreshold th;
  th.strategy = s;
  th.weighting = w;
  th.n_tp = d.tp.size();
  th.n_fp = d.fp.size();
  if (!d.fp.empty()) th.t_min_fp = *std::min_element(d.fp.begin(), d.fp.end());
  if (!d.tp.empty()) th.t_max_tp = *std::max_element(d.tp.begin(), d.tp.end());
  th.value = threshold_from_stats(s, w, th.n_tp, th.n_fp, th.t_min_fp, th.t_max_tp);
  return th;
}

/// Splits nearest-candidate distances of ungated predictions into the TP
/// and FP sets.
inline DevDistances collect_dev_distances(std::span<const RecordPrediction> preds,
                                          std::span<const MentionRecord> golds) {
  if (preds.size() != golds.size()) throw ValidationError("prediction and gold counts differ");
  DevDistances d;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& gold = golds[i].gold;
    for (const auto& comp : preds[i]) {
      if (!comp || comp->ranked.empty()) continue;
      if (gold.empty()) d.fp.push_back(comp->nearest());
      else if (gold.count(comp->top())) d.tp.push_back(comp->nearest());
    }
  }
  return d;
}

inline NilThreshold fit_threshold(const VectorIndex& ix, const Encoder& enc, const Corpus& dev, ThresholdStrategy s,
                                  Weighting w = Weighting::kTpOnMinFp,
                                  FingerprintPolicy policy = FingerprintPolicy::kFail) {
  Linker linker(ix, enc, policy);
  const auto preds = linker.link_records(dev.records, 1);
  return fit_from_distances(collect_dev_distances(preds, dev.records), s, w);
}

/// nullopt (nil) when the nearest candidate is strictly farther than the
/// threshold; otherwise the result unchanged.
inline ComponentPrediction apply_gate(const LinkResult& res, const NilThreshold& th) {
  if (res.nearest() > th.value) return std::nullopt;
  return res;
}

inline RecordPrediction apply_gate(const RecordPrediction& pred, const NilThreshold& th) {
  RecordPrediction out;
  out.reserve(pred.size());
  for (const auto& c : pred) out.push_back(c ? apply_gate(*c, th) : std::nullopt);
  return out;
}

}  // namespace conlink
