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

// Declarative run file for the command-line tool. Parsing is strict: every
// object rejects keys it does not know and every value must have the right
// JSON type. to_json() gives the resolved configuration that commands echo
// into their outputs.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "conlink/error.hpp"
#include "conlink/eval.hpp"
#include "conlink/metric.hpp"
#include "conlink/nilgate.hpp"
#include "conlink/sampler.hpp"
#include "conlink/trainer.hpp"

namespace conlink {

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct DataPaths {
  std::string terminology, train, dev, test;
};

struct RunConfig {
  DataPaths data;  // as written; see resolve()
  std::uint64_t seed = 42;
  unsigned threads = 0;
  TrainConfig train;
  ThresholdStrategy threshold = ThresholdStrategy::kWeighted;
  Weighting weighting = Weighting::kTpOnMinFp;
  EvalConfig eval;
  std::size_t link_k = 10;

  DistanceKind distance() const { return train.loss.distance; }

  // Seeds every random stream from `seed`.
  void set_seed(std::uint64_t s) {
    seed = s;
    train.seed = s;
  }
};

namespace detail {

using nlohmann::json;

inline void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!ok.count(key)) throw ConfigError("unknown key \"" + key + "\" in " + where);
}

inline std::uint64_t get_u64(const json& j, const std::string& where) {
  if (!j.is_number_unsigned()) throw ConfigError(where + " must be a non-negative integer");
  return j.get<std::uint64_t>();
}

inline double get_real(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + " must be a number");
  return j.get<double>();
}

inline bool get_bool(const json& j, const std::string& where) {
  if (!j.is_boolean()) throw ConfigError(where + " must be true or false");
  return j.get<bool>();
}

inline std::string get_string(const json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError(where + " must be a string");
  return j.get<std::string>();
}

// Enum parsers throw ValidationError; a bad config value is a usage error.
template <class F>
auto get_enum(const json& j, const std::string& where, F parse) {
  try {
    return parse(get_string(j, where));
  } catch (const ValidationError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
  using detail::get_u64;
  using detail::get_real;
  RunConfig c;
  detail::check_keys(j, "run config", {"data", "seed", "threads", "distance", "encoder", "train", "threshold", "eval", "link"});
  if (j.contains("data")) {
    const auto& d = j["data"];
    detail::check_keys(d, "data", {"terminology", "train", "dev", "test"});
    if (d.contains("terminology")) c.data.terminology = detail::get_string(d["terminology"], "data.terminology");
    if (d.contains("train")) c.data.train = detail::get_string(d["train"], "data.train");
    if (d.contains("dev")) c.data.dev = detail::get_string(d["dev"], "data.dev");
    if (d.contains("test")) c.data.test = detail::get_string(d["test"], "data.test");
  }
  if (j.contains("seed")) c.seed = get_u64(j["seed"], "seed");
  c.set_seed(c.seed);
  if (j.contains("threads")) c.threads = static_cast<unsigned>(get_u64(j["threads"], "threads"));
  if (j.contains("distance")) c.train.loss.distance = detail::get_enum(j["distance"], "distance", parse_distance);
  if (j.contains("encoder")) {
    const auto& e = j["encoder"];
    detail::check_keys(e, "encoder", {"buckets", "dimension", "hash_seed", "init_scale"});
    auto& ec = c.train.encoder;
    if (e.contains("buckets")) ec.buckets = get_u64(e["buckets"], "encoder.buckets");
    if (e.contains("dimension")) ec.dimension = get_u64(e["dimension"], "encoder.dimension");
    if (e.contains("hash_seed")) ec.hash_seed = get_u64(e["hash_seed"], "encoder.hash_seed");
    if (e.contains("init_scale")) ec.init_scale = get_real(e["init_scale"], "encoder.init_scale");
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    detail::check_keys(t, "train", {"strategy", "k_par", "k_nn", "k_sib", "n_pos", "n_neg", "max_triples", "epochs",
                                    "batch_size", "learning_rate", "margin"});
    auto& tc = c.train;
    if (t.contains("strategy")) tc.strategy.kind = detail::get_enum(t["strategy"], "train.strategy", parse_strategy);
    if (t.contains("k_par")) tc.strategy.k_par = get_u64(t["k_par"], "train.k_par");
    if (t.contains("k_nn")) tc.strategy.k_nn = get_u64(t["k_nn"], "train.k_nn");
    if (t.contains("k_sib")) tc.strategy.k_sib = get_u64(t["k_sib"], "train.k_sib");
    if (t.contains("n_pos")) tc.counts.n_pos = get_u64(t["n_pos"], "train.n_pos");
    if (t.contains("n_neg")) tc.counts.n_neg = get_u64(t["n_neg"], "train.n_neg");
    if (t.contains("max_triples")) tc.counts.max_triples = get_u64(t["max_triples"], "train.max_triples");
    if (t.contains("epochs")) tc.epochs = get_u64(t["epochs"], "train.epochs");
    if (t.contains("batch_size")) tc.batch_size = get_u64(t["batch_size"], "train.batch_size");
    if (t.contains("learning_rate")) tc.learning_rate = get_real(t["learning_rate"], "train.learning_rate");
    if (t.contains("margin")) tc.loss.margin = get_real(t["margin"], "train.margin");
  }
  if (j.contains("threshold")) {
    const auto& t = j["threshold"];
    detail::check_keys(t, "threshold", {"strategy", "weighting"});
    if (t.contains("strategy")) c.threshold = detail::get_enum(t["strategy"], "threshold.strategy", parse_threshold_strategy);
    if (t.contains("weighting")) c.weighting = detail::get_enum(t["weighting"], "threshold.weighting", parse_weighting);
  }
  if (j.contains("eval")) {
    const auto& e = j["eval"];
    detail::check_keys(e, "eval", {"ks", "nil_mode", "refined"});
    if (e.contains("ks")) {
      if (!e["ks"].is_array()) throw ConfigError("eval.ks must be an array");
      c.eval.ks.clear();
      for (const auto& k : e["ks"]) c.eval.ks.push_back(get_u64(k, "eval.ks[]"));
    }
    if (e.contains("nil_mode")) c.eval.nil_mode = detail::get_enum(e["nil_mode"], "eval.nil_mode", parse_nil_mode);
    if (e.contains("refined")) c.eval.refined = detail::get_bool(e["refined"], "eval.refined");
  }
  if (j.contains("link")) {
    const auto& l = j["link"];
    detail::check_keys(l, "link", {"k"});
    if (l.contains("k")) c.link_k = get_u64(l["k"], "link.k");
  }
  try {
    c.train.validate();
    c.eval.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("invalid run config: ") + e.what());
  }
  if (c.link_k == 0) throw ConfigError("link.k must be at least 1");
  if (c.train.encoder.buckets == 0 || c.train.encoder.dimension == 0)
    throw ConfigError("encoder.buckets and encoder.dimension must be positive");
  return c;
}

inline nlohmann::json to_json(const RunConfig& c) {
  using nlohmann::json;
  const auto& tc = c.train;
  json j;
  j["data"] = {{"terminology", c.data.terminology}, {"train", c.data.train}, {"dev", c.data.dev}, {"test", c.data.test}};
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["distance"] = distance_name(tc.loss.distance);
  j["encoder"] = {{"buckets", tc.encoder.buckets},
                  {"dimension", tc.encoder.dimension},
                  {"hash_seed", tc.encoder.hash_seed},
                  {"init_scale", tc.encoder.init_scale}};
  j["train"] = {{"strategy", strategy_name(tc.strategy.kind)},
                {"k_par", tc.strategy.k_par},
                {"k_nn", tc.strategy.k_nn},
                {"k_sib", tc.strategy.k_sib},
                {"n_pos", tc.counts.n_pos},
                {"n_neg", tc.counts.n_neg},
                {"max_triples", tc.counts.max_triples},
                {"epochs", tc.epochs},
                {"batch_size", tc.batch_size},
                {"learning_rate", tc.learning_rate},
                {"margin", tc.loss.margin}};
  j["threshold"] = {{"strategy", threshold_strategy_name(c.threshold)}, {"weighting", weighting_name(c.weighting)}};
  j["eval"] = {{"ks", c.eval.ks}, {"nil_mode", nil_mode_name(c.eval.nil_mode)}, {"refined", c.eval.refined}};
  j["link"] = {{"k", c.link_k}};
  return j;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open run config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("run config " + path + " is not valid JSON: " + e.what());
  }
  return parse_run_config(j);
}

/// Data paths made absolute against `base` (the config file's directory).
inline DataPaths resolve(const DataPaths& d, const std::filesystem::path& base) {
  const auto fix = [&](const std::string& p) {
    if (p.empty()) return p;
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? p : (base / fp).lexically_normal().string();
  };
  return {fix(d.terminology), fix(d.train), fix(d.dev), fix(d.test)};
}

}  // namespace conlink
