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

#include "conlink/sampler.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "conlink/synthetic.hpp"
#include "oracles.hpp"

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

NGramEncoder small_encoder(std::uint64_t seed = 3) { return NGramEncoder::random_init({4096, 16, 1, 0.1}, seed); }

bool is_parent_of_gold(const Terminology& t, const ConceptId& c, const std::set<ConceptId>& gold) {
  for (const auto& g : gold)
    for (const auto& p : t.direct_parents(g))
      if (p == c) return true;
  return false;
}

std::vector<std::optional<TripletBatch>> sample_all(const synthetic::Benchmark& b, const SamplingStrategy& s,
                                                    const SampleCounts& counts, std::uint64_t seed) {
  std::vector<std::optional<MinedRecord>> mined;
  if (s.mines()) mined = mine_resampling(b.terminology, b.train, small_encoder(), DistanceKind::kEuclidean, s.k_nn);
  std::vector<std::optional<TripletBatch>> out;
  for (std::size_t i = 0; i < b.train.size(); ++i) {
    const MinedRecord* m = s.mines() && mined[i] ? &*mined[i] : nullptr;
    out.push_back(sample_triplets(s, b.terminology, b.train.records[i], counts, m, derive_seed(seed, {i})));
  }
  return out;
}

const StrategyKind kAll[] = {StrategyKind::kRandom, StrategyKind::kRandomParents, StrategyKind::kResampling,
                             StrategyKind::kResamplingSiblings};

TEST(Strategy, Names) {
  for (auto k : kAll) EXPECT_EQ(parse_strategy(strategy_name(k)), k);
  EXPECT_THROW(parse_strategy("hard"), ValidationError);
  SamplingStrategy s{StrategyKind::kRandomParents, 6, 20, 5};
  EXPECT_THROW(s.validate(), ValidationError);
  s = {StrategyKind::kResamplingSiblings, 2, 20, 0};
  EXPECT_THROW(s.validate(), ValidationError);
}

TEST(Sampling, NegativesNeverGoldAndPositivesAreGoldOrParents) {
  const auto b = small_benchmark();
  const auto& t = b.terminology;
  for (auto kind : kAll) {
    const SamplingStrategy s{kind, 3, 10, 3};
    const auto batches = sample_all(b, s, {6, 4, 0}, 11);
    std::size_t total = 0;
    for (std::size_t i = 0; i < batches.size(); ++i) {
      ASSERT_TRUE(batches[i].has_value()) << strategy_name(kind) << " record " << i;
      const auto& gold = b.train.records[i].gold;
      for (const auto& tr : batches[i]->triples) {
        ++total;
        EXPECT_EQ(tr.mention, b.train.records[i].components.front());
        EXPECT_FALSE(gold.count(t.name(tr.negative).cui)) << strategy_name(kind);
        const auto& pc = t.name(tr.positive).cui;
        if (tr.positive_source == PositiveSource::kParent) {
          EXPECT_TRUE(is_parent_of_gold(t, pc, gold));
        } else {
          EXPECT_TRUE(gold.count(pc));
        }
        if (tr.negative_source == NegativeSource::kSibling) {
          bool sib = false;
          for (const auto& g : gold)
            for (const auto& c : t.siblings(g)) sib |= c == t.name(tr.negative).cui;
          EXPECT_TRUE(sib);
        }
      }
    }
    EXPECT_GT(total, 0u);
  }
}

TEST(Sampling, RandomCrossProductSize) {
  const auto b = small_benchmark();
  const auto batch = sample_random(b.terminology, b.train.records[0], {7, 3, 0}, 5);
  ASSERT_TRUE(batch);
  EXPECT_EQ(batch->size(), 21u);
}

TEST(Sampling, RootsGiveSameBatchWithAndWithoutParents) {
  const auto b = small_benchmark();
  const auto& t = b.terminology;
  std::size_t roots = 0;
  for (const auto& r : b.train.records) {
    if (!t.direct_parents(*r.gold.begin()).empty()) continue;
    ++roots;
    EXPECT_EQ(sample_random(t, r, {5, 5, 0}, 9), sample_random_plus_parents(t, r, {5, 5, 0}, 3, 9));
  }
  EXPECT_GT(roots, 0u);
}

TEST(Sampling, ParentsJoinPositivesForChildren) {
  const auto b = small_benchmark();
  const auto& t = b.terminology;
  for (const auto& r : b.train.records) {
    if (t.direct_parents(*r.gold.begin()).empty()) continue;
    const auto batch = sample_random_plus_parents(t, r, {2, 2, 0}, 2, 4);
    std::size_t parents = 0;
    for (const auto& tr : batch->triples) parents += tr.positive_source == PositiveSource::kParent;
    EXPECT_EQ(parents, 2u * 2u);  // two parent names crossed with two negatives
  }
}

TEST(Sampling, SkipsNilCompositeAndUncovered) {
  const auto b = small_benchmark();
  const auto& t = b.terminology;
  const auto gold = b.train.records[0].gold;
  const MinedRecord m{{0}, {}, 0};
  for (const auto& rec : {make_record("n", "unknown", {}), make_record("c", "a plus b", gold),
                          make_record("u", "x", {ConceptId("NOT-IN-KB")})}) {
    EXPECT_FALSE(sample_random(t, rec, {}, 1));
    EXPECT_FALSE(sample_random_plus_parents(t, rec, {}, 2, 1));
    EXPECT_FALSE(sample_resampling(t, rec, m, {}, 0, 1));
  }
}

TEST(Sampling, DeterministicPerSeed) {
  const auto b = small_benchmark();
  for (auto kind : kAll) {
    const SamplingStrategy s{kind, 2, 10, 2};
    EXPECT_EQ(sample_all(b, s, {4, 4, 0}, 1), sample_all(b, s, {4, 4, 0}, 1));
    EXPECT_NE(sample_all(b, s, {4, 4, 0}, 1), sample_all(b, s, {4, 4, 0}, 2));
  }
}

TEST(Mining, MatchesNaiveRanking) {
  const auto b = small_benchmark();
  const auto& t = b.terminology;
  const auto enc = small_encoder(8);
  for (auto kind : {DistanceKind::kEuclidean, DistanceKind::kCosine}) {
    const std::size_t k_nn = 15;
    const auto mined = mine_resampling(t, b.train, enc, kind, k_nn);
    const auto ix = build_index(t, enc, kind);
    ASSERT_EQ(mined.size(), b.train.size());
    std::size_t with_hard = 0;
    for (std::size_t i = 0; i < mined.size(); ++i) {
      const auto& rec = b.train.records[i];
      ASSERT_TRUE(mined[i]);
      const auto q = enc.encode(rec.components.front());
      const auto ranked = oracle::naive_knn(ix, q, ix.size());
      std::vector<NameId> hard, gold_rows;
      bool seen_gold = false;
      for (std::size_t r = 0; r < ranked.size(); ++r) {
        const bool g = rec.gold.count(t.name(ranked[r].row).cui) > 0;
        if (g) gold_rows.push_back(ranked[r].row);
        seen_gold |= g;
        if (!seen_gold && r < k_nn) hard.push_back(ranked[r].row);
      }
      EXPECT_EQ(mined[i]->hard_negatives, hard);
      EXPECT_EQ(mined[i]->positives, gold_rows);
      EXPECT_EQ(mined[i]->best_gold_distance, distance(kind, q, ix.row(gold_rows.front())));
      with_hard += !hard.empty();
    }
    EXPECT_GT(with_hard, 0u);
  }
  EXPECT_THROW(mine_resampling(t, b.train, enc, DistanceKind::kEuclidean, 0), ValidationError);
}

TEST(Resampling, PoolsAndCap) {
  const auto b = small_benchmark();
  const auto& t = b.terminology;
  const auto& rec = b.train.records[3];
  const auto gold_ids = t.name_ids(*rec.gold.begin());
  MinedRecord m;
  m.positives.assign(gold_ids.begin(), gold_ids.end());
  for (NameId id = 0; m.hard_negatives.size() < 4; ++id)
    if (!rec.gold.count(t.name(id).cui)) m.hard_negatives.push_back(id);

  const SampleCounts open{3, 2, 1000};
  const auto full = sample_resampling(t, rec, m, open, 0, 6);
  ASSERT_TRUE(full);
  EXPECT_EQ(full->size(), (m.positives.size() + 3) * 4);
  for (const auto& tr : full->triples) EXPECT_EQ(tr.negative_source, NegativeSource::kHard);

  const SampleCounts capped{3, 2, 7};
  const auto thin = sample_resampling(t, rec, m, capped, 0, 6);
  ASSERT_EQ(thin->size(), 7u);
  std::size_t pos = 0;
  for (const auto& tr : thin->triples) {
    while (pos < full->size() && !(full->triples[pos] == tr)) ++pos;
    ASSERT_LT(pos, full->size()) << "capped triples must be an ordered subset";
    ++pos;
  }

  MinedRecord easy = m;
  easy.hard_negatives.clear();
  const auto fallback = sample_resampling(t, rec, easy, open, 0, 6);
  EXPECT_EQ(fallback->size(), (m.positives.size() + 3) * 2);
  for (const auto& tr : fallback->triples) EXPECT_EQ(tr.negative_source, NegativeSource::kRandom);

  const auto sib = sample_resampling_plus_siblings(t, rec, easy, open, 2, 6);
  std::size_t sib_negs = 0;
  for (const auto& tr : sib->triples) sib_negs += tr.negative_source == NegativeSource::kSibling;
  EXPECT_EQ(sib_negs, (m.positives.size() + 3) * 2);
}

TEST(Sampling, TenThousandTriplesPerStrategy) {
  const auto b = synthetic::generate({});
  const auto& t = b.terminology;
  for (auto kind : kAll) {
    const SamplingStrategy s{kind, 2, 20, 5};
    std::vector<std::optional<MinedRecord>> mined;
    if (s.mines()) mined = mine_resampling(t, b.train, small_encoder(), DistanceKind::kEuclidean, s.k_nn);
    std::size_t n = 0;
    for (std::size_t i = 0; n < 10000; i = (i + 1) % b.train.size()) {
      const MinedRecord* m = s.mines() && mined[i] ? &*mined[i] : nullptr;
      const auto batch = sample_triplets(s, t, b.train.records[i], {}, m, derive_seed(77, {n, i}));
      if (!batch) continue;
      for (const auto& tr : batch->triples) {
        ASSERT_FALSE(b.train.records[i].gold.count(t.name(tr.negative).cui));
        ++n;
      }
    }
  }
}

}  // namespace
}  // namespace conlink
