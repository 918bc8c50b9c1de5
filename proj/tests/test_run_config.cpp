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

#include "conlink/run_config.hpp"

#include <gtest/gtest.h>

namespace conlink {
namespace {

using nlohmann::json;

const std::string kData = CONLINK_TEST_DATA;

TEST(RunConfig, EmptyObjectGivesDefaults) {
  const auto c = parse_run_config(json::object());
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.train.encoder.buckets, 1u << 16);
  EXPECT_EQ(c.train.encoder.dimension, 64u);
  EXPECT_EQ(c.train.encoder.hash_seed, 0x5eedu);
  EXPECT_EQ(c.threshold, ThresholdStrategy::kWeighted);
  EXPECT_EQ(c.distance(), DistanceKind::kEuclidean);
}

TEST(RunConfig, RejectsUnknownKeysAndBadTypes) {
  for (const char* text : {R"({"sede": 1})", R"({"train": {"epoch": 3}})", R"({"encoder": {"dim": 8}})",
                           R"({"seed": -1})", R"({"seed": "7"})", R"({"train": {"learning_rate": "fast"}})",
                           R"({"eval": {"ks": [1, "5"]}})", R"({"eval": {"refined": 1}})",
                           R"({"train": {"strategy": "hardest"}})", R"({"distance": "manhattan"})", R"([])"}) {
    EXPECT_THROW(parse_run_config(json::parse(text)), ConfigError) << text;
  }
}

TEST(RunConfig, RoundTrip) {
  const auto c = parse_run_config(json::parse(R"({
    "seed": 9, "distance": "cosine",
    "encoder": {"buckets": 1024, "dimension": 8},
    "train": {"strategy": "resampling_plus_siblings", "k_sib": 3, "epochs": 2, "learning_rate": 0.5},
    "threshold": {"strategy": "max_tp"},
    "eval": {"ks": [1, 5, 10], "nil_mode": "full_set", "refined": true},
    "link": {"k": 3}})"));
  EXPECT_EQ(c.train.seed, 9u);
  EXPECT_EQ(c.distance(), DistanceKind::kCosine);
  EXPECT_EQ(c.train.strategy.k_sib, 3u);
  EXPECT_EQ(c.eval.ks, (std::vector<std::size_t>{1, 5, 10}));
  EXPECT_EQ(to_json(parse_run_config(to_json(c))), to_json(c));
}

TEST(RunConfig, SeedOverrideReachesTraining) {
  auto c = parse_run_config(json::parse(R"({"seed": 3})"));
  EXPECT_EQ(c.train.seed, 3u);
  c.set_seed(11);
  EXPECT_EQ(c.train.seed, 11u);
  EXPECT_EQ(to_json(c)["seed"], 11);
}

TEST(RunConfig, ShippedFilesLoadAndResolve) {
  for (const char* f : {"/synthetic/run.json", "/drugs/run.json"}) {
    const auto c = load_run_config(kData + f);
    const auto d = resolve(c.data, std::filesystem::path(kData + f).parent_path());
    EXPECT_TRUE(std::filesystem::exists(d.terminology)) << d.terminology;
    EXPECT_TRUE(std::filesystem::path(d.train).is_absolute());
  }
  EXPECT_THROW(load_run_config(kData + "/bad/unknown_key.json"), ConfigError);
  EXPECT_THROW(load_run_config(kData + "/bad/bad_strategy.json"), ConfigError);
  EXPECT_THROW(load_run_config(kData + "/missing.json"), ConfigError);
}

TEST(Resolve, KeepsAbsoluteAndEmpty) {
  const auto d = resolve({"/abs/t.tsv", "rel/train.tsv", "", "../test.tsv"}, "/base/dir");
  EXPECT_EQ(d.terminology, "/abs/t.tsv");
  EXPECT_EQ(d.train, "/base/dir/rel/train.tsv");
  EXPECT_EQ(d.dev, "");
  EXPECT_EQ(d.test, "/base/test.tsv");
}

}  // namespace
}  // namespace conlink
