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

#include "conlink/trainer.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "conlink/synthetic.hpp"

namespace conlink {
namespace {

synthetic::Benchmark small_benchmark() {
  synthetic::Config cfg;
  cfg.roots = 4;
  cfg.mids_per_root = 2;
  cfg.leaves_per_mid = 3;
  cfg.mentions_per_concept = 4;
  return synthetic::generate(cfg);
}

TrainConfig small_config(StrategyKind kind = StrategyKind::kRandom) {
  TrainConfig cfg;
  cfg.strategy.kind = kind;
  cfg.encoder = {4096, 16, 1, 0.1};
  cfg.counts = {5, 3, 0};
  cfg.epochs = 4;
  cfg.seed = 5;
  return cfg;
}

TEST(Train, ZeroLearningRateLeavesTableUnchanged) {
  const auto b = small_benchmark();
  auto cfg = small_config();
  cfg.learning_rate = 0;
  const auto init = NGramEncoder::random_init(cfg.encoder, 1);
  const auto res = train(b.terminology, b.train, cfg, init);
  EXPECT_EQ(res.encoder, init);
  ASSERT_EQ(res.report.epochs.size(), 4u);
  EXPECT_GT(res.report.epochs[0].active_fraction, 0.0);
}

TEST(Train, ZeroEpochs) {
  const auto b = small_benchmark();
  auto cfg = small_config();
  cfg.epochs = 0;
  const auto init = NGramEncoder::random_init(cfg.encoder, 1);
  const auto res = train(b.terminology, b.train, cfg, init);
  EXPECT_EQ(res.encoder, init);
  EXPECT_TRUE(res.report.epochs.empty());
  EXPECT_EQ(res.report.usable_records, b.train.size());
}

TEST(Train, DeterministicAndLossFalls) {
  const auto b = small_benchmark();
  for (auto kind : {StrategyKind::kRandom, StrategyKind::kRandomParents, StrategyKind::kResampling,
                    StrategyKind::kResamplingSiblings}) {
    auto cfg = small_config(kind);
    cfg.epochs = 6;
    const auto a = train(b.terminology, b.train, cfg);
    const auto c = train(b.terminology, b.train, cfg);
    EXPECT_EQ(a.encoder, c.encoder) << strategy_name(kind);
    EXPECT_EQ(a.encoder.fingerprint(), c.encoder.fingerprint());
    const auto& e = a.report.epochs;
    if (kind == StrategyKind::kRandom || kind == StrategyKind::kRandomParents) {
      EXPECT_LT(e.back().mean_loss, e.front().mean_loss) << strategy_name(kind);
    }
    for (const auto& s : e) EXPECT_EQ(s.mined, cfg.strategy.mines());
    cfg.seed = 6;
    EXPECT_NE(train(b.terminology, b.train, cfg).encoder, a.encoder);
  }
}

TEST(Train, DevMonitoringDoesNotChangeTraining) {
  const auto b = small_benchmark();
  auto cfg = small_config(StrategyKind::kResampling);
  cfg.epochs = 2;
  const auto a = train(b.terminology, b.train, cfg);
  const auto dev = b.dev;
  const auto with_dev = train(b.terminology, b.train, cfg, &dev);
  EXPECT_EQ(a.encoder, with_dev.encoder);
  for (const auto& e : with_dev.report.epochs) EXPECT_TRUE(e.dev_acc1.has_value());
}

TEST(Train, ZeroMarginNeverUpdatesWhenMentionIsItsName) {
  std::istringstream in("A\talpha name\nB\tbeta other\nC\tgamma third\n");
  const auto t = parse_terminology(in);
  Corpus c;
  c.split = Split::kTrain;
  c.records = {make_record("1", "alpha name", {ConceptId("A")}), make_record("2", "beta other", {ConceptId("B")})};
  auto cfg = small_config();
  cfg.loss.margin = 0;
  const auto init = NGramEncoder::random_init(cfg.encoder, 2);
  const auto res = train(t, c, cfg, init);
  EXPECT_EQ(res.encoder, init);
  for (const auto& e : res.report.epochs) {
    EXPECT_EQ(e.mean_loss, 0.0);
    EXPECT_EQ(e.active_fraction, 0.0);
  }
}

TEST(Train, MiningScheduleRunsEveryEpoch) {
  auto cfg = small_config(StrategyKind::kResamplingSiblings);
  cfg.epochs = 20;
  std::size_t remines = 0;
  for (std::size_t e = 0; e < cfg.epochs; ++e) remines += epoch_schedule(cfg, e).remine;
  EXPECT_EQ(remines, 20u);
  EXPECT_FALSE(epoch_schedule(small_config(StrategyKind::kRandom), 0).remine);
}

TEST(Train, NoUsableRecordsThrows) {
  const auto b = small_benchmark();
  Corpus c;
  c.records = {make_record("1", "nothing known", {}), make_record("2", "a plus b", {ConceptId("X")})};
  EXPECT_THROW(train(b.terminology, c, small_config()), ValidationError);
}

TEST(Train, SkipsCountedRecords) {
  const auto b = small_benchmark();
  Corpus c = b.train;
  c.records.push_back(make_record("nil", "nothing known", {}));
  const auto res = train(b.terminology, c, small_config());
  EXPECT_EQ(res.report.skipped_records, 1u);
  EXPECT_EQ(res.report.usable_records, b.train.size());
}

TEST(Train, InvalidConfig) {
  const auto b = small_benchmark();
  auto cfg = small_config();
  cfg.batch_size = 0;
  EXPECT_THROW(train(b.terminology, b.train, cfg), ValidationError);
  cfg = small_config();
  cfg.learning_rate = -1;
  EXPECT_THROW(train(b.terminology, b.train, cfg), ValidationError);
}

}  // namespace
}  // namespace conlink
