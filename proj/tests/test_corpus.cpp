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

#include "conlink/corpus.hpp"

#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "oracles.hpp"

namespace conlink {
namespace {

Corpus parse(const std::string& text, Split s = Split::kTest) {
  std::istringstream in(text);
  return parse_corpus(in, s, "fixture");
}

TEST(LoadCorpus, NilRecord) {
  const auto c = parse("NCT02493335\tPlacebo orodispersible tablet twice daily\tnil\n");
  ASSERT_EQ(c.size(), 1u);
  EXPECT_TRUE(c.records[0].is_nil());
  EXPECT_EQ(c.records[0].normalized_text, "placebo orodispersible tablet twice daily");
}

TEST(LoadCorpus, SingleConcept) {
  const auto c = parse("NCT03375593\tIbuprofen 600 mg tab\tDB01050\n");
  const auto& r = c.records.at(0);
  EXPECT_EQ(r.components, std::vector<std::string>{"ibuprofen 600 mg tab"});
  EXPECT_EQ(r.gold, std::set<ConceptId>{ConceptId("DB01050")});
  EXPECT_FALSE(r.is_composite());
}

TEST(LoadCorpus, CompositeAndMultipleGold) {
  const auto c = parse("X1\tcombination of ribociclib + capecitabine\tDB11730|DB01101\n");
  const auto& r = c.records.at(0);
  EXPECT_EQ(r.components, (std::vector<std::string>{"ribociclib", "capecitabine"}));
  EXPECT_EQ(r.gold.size(), 2u);
  EXPECT_EQ(r.normalized_text, "combination of ribociclib capecitabine");
}

TEST(LoadCorpus, MalformedRowsCarryLineNumbers) {
  try {
    parse("A\tok\tC1\nB\tmissing gold\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse("A\t!!!\tC1\n"), ParseError);
  EXPECT_THROW(parse("A\ttext\t\n"), ParseError);
  EXPECT_THROW(parse("A\ttext\tC1||C2\n"), ParseError);
  EXPECT_THROW(parse("A\ttext\tC1\textra\n"), ParseError);
}

TEST(LoadCorpus, RoundTrip) {
  const std::string text = "a\tIbuprofen 600 mg\tDB01050\nb\tplacebo\tnil\nc\tx + y\tC1|C2\n";
  const auto c = parse(text);
  std::ostringstream out;
  write_corpus(out, c);
  EXPECT_EQ(out.str(), text);
}

TEST(Refine, RemovesDuplicatesAndTrainOverlap) {
  const auto test = parse("1\tAspirin\tA\n2\taspirin!\tA\n3\tnaproxen\tB\n4\tcold\tC\n");
  const auto train = parse("9\tCold\tC\n", Split::kTrain);
  const auto r = refine(test, &train);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r.records[0].source_id, "1");
  EXPECT_EQ(r.records[1].source_id, "3");
  EXPECT_EQ(refine(test).size(), 3u);
}

TEST(Refine, MatchesSetDifferenceOracle) {
  Rng rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const Corpus test = oracle::random_corpus(rng, uniform_below(rng, 25));
    const Corpus train = oracle::random_corpus(rng, uniform_below(rng, 6));
    const bool with_train = uniform_below(rng, 2);
    const Corpus got = refine(test, with_train ? &train : nullptr);
    const Corpus want = oracle::refine(test, with_train ? &train : nullptr);
    ASSERT_EQ(got.records, want.records) << "trial " << trial;
  }
}

TEST(Refine, IsIdempotent) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Corpus c = oracle::random_corpus(rng, 20);
    const Corpus once = refine(c);
    EXPECT_EQ(refine(once).records, once.records);
  }
}

TEST(SampleSplit, SeededPartitionInOriginalOrder) {
  Rng rng(1);
  const Corpus c = oracle::random_corpus(rng, 30);
  const auto [a, rest] = sample_split(c, 10, 4);
  EXPECT_EQ(a.records, sample_split(c, 10, 4).first.records);
  ASSERT_EQ(a.size(), 10u);
  ASSERT_EQ(rest.size(), 20u);
  std::set<std::string> ids;
  for (const auto* part : {&a, &rest}) {
    std::size_t last = 0;
    for (const auto& r : part->records) {
      const std::size_t pos = std::stoul(r.source_id);
      EXPECT_GE(pos, last);
      last = pos;
      ids.insert(r.source_id);
    }
  }
  EXPECT_EQ(ids.size(), 30u);
  EXPECT_EQ(sample_split(c, 100, 4).first.size(), 30u);
}

TEST(GoldCovered, NeedsEveryGoldConcept) {
  const Terminology t({{"a", ConceptId("A")}, {"b", ConceptId("B")}}, {});
  EXPECT_TRUE(gold_covered(make_record("1", "x", {ConceptId("A"), ConceptId("B")}), t));
  EXPECT_FALSE(gold_covered(make_record("2", "x", {ConceptId("A"), ConceptId("Z")}), t));
  EXPECT_TRUE(gold_covered(make_record("3", "x", {}), t));
}

}  // namespace
}  // namespace conlink
