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

// Flat exact nearest-neighbour index over precomputed name embeddings, and
// the linker that turns a ranked list of names into a ranked list of
// concepts.
//
// Rankings are total orders: names by (distance, row), concepts by
// (distance, identifier). The Euclidean scan skips the square root for rows
// that cannot enter the current top-k; rows are visited in ascending order
// so a later row never wins a tie against an earlier one.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "conlink/binary_io.hpp"
#include "conlink/corpus.hpp"
#include "conlink/encoder.hpp"
#include "conlink/error.hpp"
#include "conlink/metric.hpp"
#include "conlink/terminology.hpp"

namespace conlink {

struct Neighbor {
  std::size_t row = 0;
  double distance = 0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

inline bool neighbor_less(const Neighbor& a, const Neighbor& b) {
  return a.distance < b.distance || (a.distance == b.distance && a.row < b.row);
}

class VectorIndex {
 public:
  static constexpr std::string_view kMagic = "CIDX1";

  VectorIndex() = default;

  VectorIndex(std::vector<ConceptName> names, std::vector<double> matrix, std::size_t dim, DistanceKind kind,
              std::uint64_t fingerprint)
      : names_(std::move(names)), matrix_(std::move(matrix)), dim_(dim), kind_(kind), fingerprint_(fingerprint) {
    if (dim_ == 0) throw ValidationError("index dimension must be positive");
    if (matrix_.size() != names_.size() * dim_) throw ValidationError("index matrix does not match name count");
    norms_.resize(names_.size());
    for (std::size_t i = 0; i < names_.size(); ++i) {
      auto r = row(i);
      if (!std::all_of(r.begin(), r.end(), [](double v) { return std::isfinite(v); }))
        throw ValidationError("non-finite embedding in index row " + std::to_string(i));
      norms_[i] = l2_norm(r);
      if (kind_ == DistanceKind::kCosine && norms_[i] == 0.0)
        throw ValidationError("zero embedding in index row " + std::to_string(i) + " (\"" + names_[i].surface +
                              "\") under cosine distance");
    }
  }

  std::size_t size() const { return names_.size(); }
  std::size_t dimension() const { return dim_; }
  DistanceKind kind() const { return kind_; }
  std::uint64_t fingerprint() const { return fingerprint_; }
  std::span<const ConceptName> names() const { return names_; }
  std::span<const double> row(std::size_t i) const { return {matrix_.data() + i * dim_, dim_}; }
  std::span<const double> matrix() const { return matrix_; }

  /// The k nearest rows, ascending by (distance, row). k > size() returns
  /// every row.
  std::vector<Neighbor> knn(std::span<const double> query, std::size_t k) const {
    std::vector<std::span<const double>> qs{query};
    return std::move(knn_many(qs, k).front());
  }

  /// knn() for many queries at once, scanning the matrix in cache-sized row
  /// blocks shared by a group of queries.
  std::vector<std::vector<Neighbor>> knn_many(std::span<const std::span<const double>> queries,
                                              std::size_t k) const {
    if (k == 0) throw ValidationError("k must be at least 1");
    for (const auto& q : queries)
      if (q.size() != dim_)
        throw DimensionError("query dimension " + std::to_string(q.size()) + " != index dimension " +
                             std::to_string(dim_));
    k = std::min(k, size());
    std::vector<std::vector<Neighbor>> out(queries.size());
    constexpr std::size_t kQueryBlock = 32;
    constexpr std::size_t kRowBlock = 256;
    std::vector<Selector> sel;
    std::vector<double> qnorm;
    for (std::size_t q0 = 0; q0 < queries.size(); q0 += kQueryBlock) {
      const std::size_t q1 = std::min(queries.size(), q0 + kQueryBlock);
      sel.assign(q1 - q0, Selector(k));
      qnorm.assign(q1 - q0, 0.0);
      if (kind_ == DistanceKind::kCosine)
        for (std::size_t q = q0; q < q1; ++q) {
          qnorm[q - q0] = l2_norm(queries[q]);
          if (qnorm[q - q0] == 0.0) throw ValidationError("cosine distance is undefined for a zero query vector");
        }
      for (std::size_t r0 = 0; r0 < size(); r0 += kRowBlock) {
        const std::size_t r1 = std::min(size(), r0 + kRowBlock);
        for (std::size_t q = q0; q < q1; ++q) {
          Selector& s = sel[q - q0];
          const auto query = queries[q];
          if (kind_ == DistanceKind::kEuclidean) {
            for (std::size_t r = r0; r < r1; ++r) {
              const double sq = squared_l2(query, row(r));
              if (s.full() && sq > s.worst_key()) continue;
              s.offer({r, std::sqrt(sq)}, sq);
            }
          } else {
            for (std::size_t r = r0; r < r1; ++r) {
              const double d = cosine_distance_from(dot(query, row(r)), qnorm[q - q0], norms_[r]);
              s.offer({r, d}, d);
            }
          }
        }
      }
      for (std::size_t q = q0; q < q1; ++q) out[q] = sel[q - q0].take_sorted();
    }
    return out;
  }

  void save(std::ostream& os) const {
    io::write_bytes(os, kMagic);
    io::write_u64(os, size());
    io::write_u64(os, dim_);
    io::write_u8(os, static_cast<std::uint8_t>(kind_));
    io::write_u64(os, fingerprint_);
    for (double v : matrix_) io::write_f64(os, v);
    std::ostringstream tsv;
    for (const auto& n : names_) tsv << n.cui.str() << '\t' << n.surface << '\n';
    const std::string block = tsv.str();
    io::write_u64(os, block.size());
    io::write_bytes(os, block);
  }

  static VectorIndex load(std::istream& is, const std::string& source = "<index>") {
    io::Reader r(is, source);
    r.expect_magic(kMagic);
    const std::uint64_t n = r.u64();
    const std::uint64_t dim = r.u64();
    const std::uint8_t kind = r.u8();
    if (kind > 1) r.fail("unknown distance kind byte");
    const std::uint64_t fp = r.u64();
    if (dim == 0 || dim > 4096 || n > (1ULL << 32)) r.fail("implausible index shape");
    std::vector<double> matrix(n * dim);
    for (double& v : matrix) v = r.f64();
    const std::uint64_t block_len = r.u64();
    std::istringstream block(r.bytes(block_len));
    r.expect_eof();
    std::vector<ConceptName> names;
    names.reserve(n);
    std::string line;
    while (std::getline(block, line)) {
      const auto tab = line.find('\t');
      if (tab == std::string::npos) r.fail("malformed name table row");
      names.push_back({line.substr(tab + 1), ConceptId(std::string_view(line).substr(0, tab))});
    }
    if (names.size() != n) r.fail("name table has " + std::to_string(names.size()) + " rows, expected " + std::to_string(n));
    return VectorIndex(std::move(names), std::move(matrix), dim, static_cast<DistanceKind>(kind), fp);
  }

  void save_file(const std::string& path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot write index " + path);
    save(os);
  }

  static VectorIndex load_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw NotFoundError("cannot open index " + path);
    return load(is, path);
  }

  friend bool operator==(const VectorIndex& a, const VectorIndex& b) {
    return a.names_ == b.names_ && a.matrix_ == b.matrix_ && a.dim_ == b.dim_ && a.kind_ == b.kind_ &&
           a.fingerprint_ == b.fingerprint_;
  }

 private:
  // Bounded max-heap keeping the k best (distance, row) pairs. The key is
  // the squared distance for Euclidean scans and the distance otherwise;
  // it is only used for the early rejection test.
  class Selector {
   public:
    explicit Selector(std::size_t k) : k_(k) { heap_.reserve(k); }

    bool full() const { return heap_.size() == k_; }
    double worst_key() const { return heap_.front().key; }

    void offer(Neighbor n, double key) {
      Item item{n, key};
      if (!full()) {
        heap_.push_back(item);
        std::push_heap(heap_.begin(), heap_.end(), cmp);
      } else if (neighbor_less(n, heap_.front().n)) {
        std::pop_heap(heap_.begin(), heap_.end(), cmp);
        heap_.back() = item;
        std::push_heap(heap_.begin(), heap_.end(), cmp);
      }
    }

    std::vector<Neighbor> take_sorted() {
      std::vector<Neighbor> out;
      out.reserve(heap_.size());
      for (const auto& it : heap_) out.push_back(it.n);
      std::sort(out.begin(), out.end(), neighbor_less);
      return out;
    }

   private:
    struct Item {
      Neighbor n;
      double key;
    };
    static bool cmp(const Item& a, const Item& b) { return neighbor_less(a.n, b.n); }

    std::size_t k_;
    std::vector<Item> heap_;
  };

  std::vector<ConceptName> names_;
  std::vector<double> matrix_;
  std::vector<double> norms_;
  std::size_t dim_ = 0;
  DistanceKind kind_ = DistanceKind::kEuclidean;
  std::uint64_t fingerprint_ = 0;
};

/// One row per terminology name, embedded with `enc`.
inline VectorIndex build_index(const Terminology& t, const Encoder& enc, DistanceKind kind, unsigned threads = 0) {
  std::vector<std::string> texts;
  texts.reserve(t.name_count());
  for (const auto& n : t.names()) texts.push_back(n.surface);
  auto vecs = encode_batch(enc, texts, threads);
  const std::size_t dim = enc.dimension();
  std::vector<double> matrix;
  matrix.reserve(vecs.size() * dim);
  for (std::size_t i = 0; i < vecs.size(); ++i) {
    if (vecs[i].size() != dim) throw DimensionError("encoder returned wrong dimension for row " + std::to_string(i));
    matrix.insert(matrix.end(), vecs[i].begin(), vecs[i].end());
  }
  return VectorIndex({t.names().begin(), t.names().end()}, std::move(matrix), dim, kind, enc.fingerprint());
}

struct RankedConcept {
  ConceptId cui;
  double distance = 0;

  friend bool operator==(const RankedConcept&, const RankedConcept&) = default;
};

struct NameHit {
  std::size_t row = 0;
  double distance = 0;
  std::size_t rank = 0;  // 1-based
};

struct LinkResult {
  std::vector<RankedConcept> ranked;  // ascending by (distance, cui), cuis distinct
  std::vector<NameHit> trace;         // names examined, in rank order

  double nearest() const { return ranked.empty() ? std::numeric_limits<double>::infinity() : ranked.front().distance; }
  const ConceptId& top() const { return ranked.front().cui; }
};

// Per-component results of one mention; a disengaged entry is a nil verdict.
using ComponentPrediction = std::optional<LinkResult>;
using RecordPrediction = std::vector<ComponentPrediction>;

enum class FingerprintPolicy { kFail, kWarn, kIgnore };

/// Links mentions against an index. The encoder must be the one that built
/// the index; the fingerprints are compared once, at construction.
class Linker {
 public:
  Linker(const VectorIndex& ix, const Encoder& enc, FingerprintPolicy policy = FingerprintPolicy::kFail)
      : ix_(ix), enc_(enc) {
    if (enc.dimension() != ix.dimension()) throw DimensionError("encoder and index dimensions differ");
    if (policy != FingerprintPolicy::kIgnore && enc.fingerprint() != ix.fingerprint()) {
      if (policy == FingerprintPolicy::kFail)
        throw ValidationError("encoder fingerprint does not match the one recorded in the index");
      std::cerr << "warning: encoder fingerprint does not match the one recorded in the index\n";
    }
  }

  const VectorIndex& index() const { return ix_; }

  LinkResult link_text(std::string_view text, std::size_t k) const {
    std::vector<std::string> one{std::string(text)};
    return std::move(link_texts(one, k).front());
  }

  std::vector<LinkResult> link(const MentionRecord& rec, std::size_t k) const {
    if (rec.components.empty()) throw ValidationError("mention " + rec.source_id + " has no components");
    return link_texts(rec.components, k);
  }

  /// Top-k concepts for every text. Enough names are retrieved that the
  /// k-th concept and every name tied with it are seen.
  std::vector<LinkResult> link_texts(std::span<const std::string> texts, std::size_t k) const {
    if (k == 0) throw ValidationError("k must be at least 1");
    for (std::size_t i = 0; i < texts.size(); ++i)
      if (texts[i].empty()) throw ValidationError("empty mention component at position " + std::to_string(i));
    const auto vecs = encode_batch(enc_, texts);
    std::vector<LinkResult> out(texts.size());
    std::vector<std::size_t> pending(texts.size());
    for (std::size_t i = 0; i < pending.size(); ++i) pending[i] = i;
    std::size_t depth = std::min(ix_.size(), 4 * k);
    while (!pending.empty()) {
      std::vector<std::span<const double>> qs;
      qs.reserve(pending.size());
      for (auto i : pending) qs.emplace_back(vecs[i]);
      auto hits = ix_.knn_many(qs, depth);
      std::vector<std::size_t> again;
      for (std::size_t j = 0; j < pending.size(); ++j)
        if (!collapse(hits[j], k, depth, out[pending[j]])) again.push_back(pending[j]);
      pending = std::move(again);
      depth = std::min(ix_.size(), depth * 4);
    }
    return out;
  }

  std::vector<RecordPrediction> link_records(std::span<const MentionRecord> recs, std::size_t k) const {
    std::vector<std::string> texts;
    for (const auto& r : recs) {
      if (r.components.empty()) throw ValidationError("mention " + r.source_id + " has no components");
      texts.insert(texts.end(), r.components.begin(), r.components.end());
    }
    auto flat = link_texts(texts, k);
    std::vector<RecordPrediction> out(recs.size());
    std::size_t pos = 0;
    for (std::size_t i = 0; i < recs.size(); ++i)
      for (std::size_t c = 0; c < recs[i].components.size(); ++c) out[i].emplace_back(std::move(flat[pos++]));
    return out;
  }

 private:
  // Returns false when more names are needed to settle the top-k concepts.
  bool collapse(const std::vector<Neighbor>& hits, std::size_t k, std::size_t depth, LinkResult& res) const {
    res = {};
    std::unordered_map<std::string_view, bool> seen;
    for (std::size_t i = 0; i < hits.size(); ++i) {
      const auto& name = ix_.names()[hits[i].row];
      res.trace.push_back({hits[i].row, hits[i].distance, i + 1});
      if (seen.emplace(name.cui.str(), true).second) res.ranked.push_back({name.cui, hits[i].distance});
    }
    std::stable_sort(res.ranked.begin(), res.ranked.end(), [](const RankedConcept& a, const RankedConcept& b) {
      return a.distance < b.distance || (a.distance == b.distance && a.cui < b.cui);
    });
    const bool exhausted = depth >= ix_.size();
    if (!exhausted) {
      if (res.ranked.size() < k) return false;
      // A name beyond the cut could still tie with the k-th concept.
      if (!(res.ranked[k - 1].distance < hits.back().distance)) return false;
    }
    if (res.ranked.size() > k) res.ranked.resize(k);
    return true;
  }

  const VectorIndex& ix_;
  const Encoder& enc_;
};

/// Convenience wrapper: per-component results without a fingerprint check.
inline std::vector<LinkResult> link(const VectorIndex& ix, const Encoder& enc, const MentionRecord& rec,
                                    std::size_t k) {
  return Linker(ix, enc, FingerprintPolicy::kIgnore).link(rec, k);
}

}  // namespace conlink
