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

#include "conlink/index.hpp"

#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "oracles.hpp"

namespace conlink {
namespace {

std::vector<ConceptName> names_for(std::size_t n, std::size_t concepts) {
  std::vector<ConceptName> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back({"name " + std::to_string(i), ConceptId("C" + std::to_string(i % concepts))});
  return out;
}

// Coordinates are small integers so many distances tie exactly.
VectorIndex random_index(Rng& rng, std::size_t n, std::size_t dim, DistanceKind kind, std::size_t concepts = 50) {
  std::vector<double> m(n * dim);
  for (std::size_t r = 0; r < n; ++r) {
    if (r > 0 && uniform_below(rng, 10) == 0) {
      const std::size_t src = uniform_below(rng, r);
      std::copy_n(m.begin() + src * dim, dim, m.begin() + r * dim);
      continue;
    }
    bool nonzero = false;
    for (std::size_t j = 0; j < dim; ++j) {
      m[r * dim + j] = static_cast<double>(static_cast<int>(uniform_below(rng, 5)) - 2);
      nonzero |= m[r * dim + j] != 0;
    }
    if (!nonzero) m[r * dim] = 1;
  }
  return VectorIndex(names_for(n, concepts), std::move(m), dim, kind, 99);
}

std::vector<double> random_query(Rng& rng, std::size_t dim) {
  std::vector<double> q(dim);
  for (double& v : q) v = static_cast<double>(static_cast<int>(uniform_below(rng, 5)) - 2);
  q[0] = q[0] == 0 ? 0.5 : q[0];
  return q;
}

void expect_same(const std::vector<Neighbor>& got, const std::vector<Neighbor>& want) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_EQ(got[i].row, want[i].row) << "rank " << i;
    EXPECT_EQ(got[i].distance, want[i].distance) << "rank " << i;
  }
}

TEST(Knn, MatchesNaiveScanWithTies) {
  Rng rng(5);
  for (auto kind : {DistanceKind::kEuclidean, DistanceKind::kCosine}) {
    const auto ix = random_index(rng, 700, 6, kind);
    std::vector<std::vector<double>> qs;
    for (int i = 0; i < 60; ++i) qs.push_back(random_query(rng, 6));
    std::vector<std::span<const double>> spans(qs.begin(), qs.end());
    for (std::size_t k : {1u, 7u, 100u, 700u, 5000u}) {
      const auto many = ix.knn_many(spans, k);
      for (std::size_t i = 0; i < qs.size(); ++i) {
        expect_same(many[i], oracle::naive_knn(ix, qs[i], k));
        expect_same(ix.knn(qs[i], k), many[i]);
      }
    }
  }
}

TEST(Knn, QueryEqualToRowRanksItFirst) {
  Rng rng(8);
  std::vector<double> m(40 * 4);
  for (double& v : m) v = uniform_real(rng, -1, 1);
  const VectorIndex ix(names_for(40, 40), m, 4, DistanceKind::kEuclidean, 0);
  for (std::size_t r = 0; r < 40; ++r) {
    const auto hits = ix.knn(ix.row(r), 3);
    EXPECT_EQ(hits.front().row, r);
    EXPECT_EQ(hits.front().distance, 0.0);
  }
}

TEST(Knn, Errors) {
  Rng rng(1);
  const auto ix = random_index(rng, 10, 3, DistanceKind::kCosine);
  EXPECT_THROW(ix.knn(std::vector<double>{1, 2}, 1), DimensionError);
  EXPECT_THROW(ix.knn(std::vector<double>{1, 2, 3}, 0), ValidationError);
  EXPECT_THROW(ix.knn(std::vector<double>{0, 0, 0}, 1), ValidationError);
  EXPECT_THROW(VectorIndex(names_for(2, 2), {1, 0, 0, 0}, 2, DistanceKind::kCosine, 0), ValidationError);
  EXPECT_THROW(VectorIndex(names_for(2, 2), {1, 0, 0}, 2, DistanceKind::kEuclidean, 0), ValidationError);
  EXPECT_THROW(VectorIndex(names_for(1, 1), {std::nan(""), 0}, 2, DistanceKind::kEuclidean, 0), ValidationError);
}

TEST(IndexFile, RoundTrip) {
  Rng rng(2);
  const auto ix = random_index(rng, 30, 5, DistanceKind::kCosine, 7);
  std::stringstream s;
  ix.save(s);
  const std::string bytes = s.str();
  EXPECT_EQ(bytes.substr(0, 5), "CIDX1");
  std::istringstream in(bytes);
  const auto back = VectorIndex::load(in);
  EXPECT_EQ(back.size(), ix.size());
  EXPECT_EQ(back.kind(), ix.kind());
  EXPECT_EQ(back.fingerprint(), ix.fingerprint());
  EXPECT_TRUE(std::equal(back.matrix().begin(), back.matrix().end(), ix.matrix().begin(), ix.matrix().end()));
  EXPECT_TRUE(std::equal(back.names().begin(), back.names().end(), ix.names().begin(), ix.names().end()));
  std::stringstream again;
  back.save(again);
  EXPECT_EQ(again.str(), bytes);

  const auto load = [](const std::string& b) {
    std::istringstream is(b);
    return VectorIndex::load(is);
  };
  EXPECT_THROW(load(bytes.substr(0, bytes.size() - 3)), ParseError);
  EXPECT_THROW(load("CIDX2" + bytes.substr(5)), ParseError);
  std::string bad_kind = bytes;
  bad_kind[5 + 16] = 7;
  EXPECT_THROW(load(bad_kind), ParseError);
}

// Maps known texts to fixed vectors.
class TableEncoder : public Encoder {
 public:
  TableEncoder(std::map<std::string, Vector> table, std::uint64_t fp = 99) : table_(std::move(table)), fp_(fp) {}
  std::size_t dimension() const override { return table_.begin()->second.size(); }
  Vector encode(std::string_view text) const override { return table_.at(std::string(text)); }
  std::uint64_t fingerprint() const override { return fp_; }

 private:
  std::map<std::string, Vector> table_;
  std::uint64_t fp_;
};

// Best distance per concept, ordered by (distance, cui), first k.
std::vector<RankedConcept> naive_link(const VectorIndex& ix, const Vector& q, std::size_t k) {
  std::map<std::string, double> best;
  for (std::size_t r = 0; r < ix.size(); ++r) {
    const double d = distance(ix.kind(), q, ix.row(r));
    auto [it, fresh] = best.emplace(ix.names()[r].cui.str(), d);
    if (!fresh) it->second = std::min(it->second, d);
  }
  std::vector<RankedConcept> all;
  for (const auto& [c, d] : best) all.push_back({ConceptId(c), d});
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.distance < b.distance; });
  all.resize(std::min(k, all.size()));
  return all;
}

TEST(Link, CollapsesToDistinctConceptsLikeNaive) {
  Rng rng(17);
  for (auto kind : {DistanceKind::kEuclidean, DistanceKind::kCosine}) {
    // 12 concepts over 400 rows: retrieval has to widen past 4k names.
    const auto ix = random_index(rng, 400, 3, kind, 12);
    std::map<std::string, Vector> table;
    for (int i = 0; i < 80; ++i) table["q" + std::to_string(i)] = random_query(rng, 3);
    const TableEncoder enc(table);
    const Linker linker(ix, enc);
    for (const auto& [text, q] : table)
      for (std::size_t k : {1u, 3u, 12u, 20u}) {
        const auto res = linker.link_text(text, k);
        EXPECT_EQ(res.ranked, naive_link(ix, q, k)) << text << " k=" << k;
        for (std::size_t i = 1; i < res.ranked.size(); ++i)
          EXPECT_TRUE(res.ranked[i - 1].distance < res.ranked[i].distance ||
                      (res.ranked[i - 1].distance == res.ranked[i].distance &&
                       res.ranked[i - 1].cui < res.ranked[i].cui));
      }
  }
}

TEST(Link, ExactNameAndComposites) {
  std::vector<ConceptName> names{{"ibuprofen", ConceptId("A")}, {"advil", ConceptId("A")},
                                 {"codeine", ConceptId("B")},   {"aspirin", ConceptId("C")}};
  const TableEncoder enc({{"ibuprofen", {1, 0}}, {"advil", {0.9, 0.1}}, {"codeine", {0, 1}},
                          {"aspirin", {-1, 0}}});
  std::vector<double> m;
  for (const auto& n : names) {
    const auto v = enc.encode(n.surface);
    m.insert(m.end(), v.begin(), v.end());
  }
  const VectorIndex ix(names, m, 2, DistanceKind::kEuclidean, enc.fingerprint());
  const Linker linker(ix, enc);
  const auto r = linker.link_text("advil", 10);
  ASSERT_EQ(r.ranked.size(), 3u);
  EXPECT_EQ(r.ranked[0], (RankedConcept{ConceptId("A"), 0.0}));
  EXPECT_EQ(r.trace.size(), 4u);

  const auto rec = make_record("m1", "ibuprofen + codeine", {ConceptId("A"), ConceptId("B")});
  const auto parts = linker.link(rec, 1);
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_EQ(parts[0].top(), ConceptId("A"));
  EXPECT_EQ(parts[1].top(), ConceptId("B"));
  EXPECT_THROW(linker.link_text("", 1), ValidationError);
  EXPECT_THROW(linker.link_text("advil", 0), ValidationError);
}

TEST(Link, FingerprintPolicy) {
  const TableEncoder enc({{"x", {1, 0}}}, 5), other({{"x", {1, 0}}}, 6);
  const VectorIndex ix(names_for(1, 1), {1, 0}, 2, DistanceKind::kEuclidean, 5);
  EXPECT_NO_THROW(Linker(ix, enc));
  EXPECT_THROW(Linker(ix, other), ValidationError);
  EXPECT_NO_THROW(Linker(ix, other, FingerprintPolicy::kWarn));
  EXPECT_NO_THROW(Linker(ix, other, FingerprintPolicy::kIgnore));
  const TableEncoder wide({{"x", {1, 0, 0}}}, 5);
  EXPECT_THROW(Linker(ix, wide, FingerprintPolicy::kIgnore), DimensionError);
}

TEST(BuildIndex, RowsAreEncodedNames) {
  std::istringstream in("A\tfirst name\nA\tsecond\nB\tthird one\tA\n");
  const auto t = parse_terminology(in);
  const auto enc = NGramEncoder::random_init({256, 4, 1, 0.1}, 3);
  const auto ix = build_index(t, enc, DistanceKind::kCosine);
  ASSERT_EQ(ix.size(), 3u);
  EXPECT_EQ(ix.fingerprint(), enc.fingerprint());
  for (std::size_t i = 0; i < 3; ++i) {
    const auto v = enc.encode(t.name(i).surface);
    EXPECT_TRUE(std::equal(v.begin(), v.end(), ix.row(i).begin()));
  }
}

}  // namespace
}  // namespace conlink
