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

// JSON forms of thresholds and reports. Nothing time-dependent is written,
// so equal inputs give byte-equal files.

#include <fstream>
#include <string>

#include <json.hpp>

#include "conlink/error.hpp"
#include "conlink/eval.hpp"
#include "conlink/nilgate.hpp"
#include "conlink/trainer.hpp"

namespace conlink {

inline nlohmann::json to_json(const NilThreshold& th) {
  nlohmann::json j;
  j["strategy"] = threshold_strategy_name(th.strategy);
  j["weighting"] = weighting_name(th.weighting);
  j["value"] = th.value;
  j["n_tp"] = th.n_tp;
  j["n_fp"] = th.n_fp;
  j["t_min_fp"] = th.t_min_fp ? nlohmann::json(*th.t_min_fp) : nlohmann::json(nullptr);
  j["t_max_tp"] = th.t_max_tp ? nlohmann::json(*th.t_max_tp) : nlohmann::json(nullptr);
  return j;
}

/// Parses a threshold and checks that its value follows from its statistics.
inline NilThreshold threshold_from_json(const nlohmann::json& j, const std::string& source = "<threshold>") {
  try {
    NilThreshold th;
    th.strategy = parse_threshold_strategy(j.at("strategy").get<std::string>());
    th.weighting = parse_weighting(j.at("weighting").get<std::string>());
    th.value = j.at("value").get<double>();
    th.n_tp = j.at("n_tp").get<std::size_t>();
    th.n_fp = j.at("n_fp").get<std::size_t>();
    if (!j.at("t_min_fp").is_null()) th.t_min_fp = j["t_min_fp"].get<double>();
    if (!j.at("t_max_tp").is_null()) th.t_max_tp = j["t_max_tp"].get<double>();
    const double expect = threshold_from_stats(th.strategy, th.weighting, th.n_tp, th.n_fp, th.t_min_fp, th.t_max_tp);
    if (expect != th.value) throw ValidationError(source + ": stored value does not follow from its statistics");
    return th;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(source + ": malformed threshold: " + e.what());
  }
}

inline NilThreshold load_threshold(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw NotFoundError("cannot open threshold " + path);
  try {
    return threshold_from_json(nlohmann::json::parse(is), path);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path, 0, e.what());
  }
}

inline nlohmann::json to_json(const TrainReport& r) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : r.epochs) {
    nlohmann::json je;
    je["loss"] = e.mean_loss;
    je["active_frac"] = e.active_fraction;
    je["triplets"] = e.triplets;
    je["dev_acc1"] = e.dev_acc1 ? nlohmann::json(*e.dev_acc1) : nlohmann::json(nullptr);
    epochs.push_back(std::move(je));
  }
  return {{"epochs", epochs}, {"usable_records", r.usable_records}, {"skipped_records", r.skipped_records}};
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json acc = nlohmann::json::object();
  for (std::size_t i = 0; i < r.ks.size(); ++i)
    acc["acc@" + std::to_string(r.ks[i])] = {{"accuracy", r.accuracy[i]}, {"correct", r.correct[i]}};
  return {{"nil_mode", nil_mode_name(r.nil_mode)}, {"total", r.total},           {"nil_gold", r.nil_gold},
          {"excluded_nil", r.excluded_nil},       {"nil_predicted", r.nil_predicted}, {"skipped", r.skipped},
          {"accuracy", acc}};
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write " + path);
  os << j.dump(2) << '\n';
}

}  // namespace conlink
