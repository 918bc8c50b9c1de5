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

// Triplet construction for the four sampling strategies:
//
//   random              gold-concept names as positives, uniform random
//                       non-gold names as negatives
//   random + parents    as random, plus k names of the gold concepts' direct
//                       parents added to the positive pool
//   resampling          positives and hard negatives mined with a snapshot
//                       of the current encoder: every non-gold name ranked
//                       above the best gold name among the k nearest
//   resampling+siblings as resampling, plus k names of sibling concepts added
//                       to the negative pool
//
// Every pool is crossed (positive x negative). Names are referred to by
// their NameId in the terminology.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "conlink/corpus.hpp"
#include "conlink/encoder.hpp"
#include "conlink/error.hpp"
#include "conlink/index.hpp"
#include "conlink/metric.hpp"
#include "conlink/random.hpp"
#include "conlink/terminology.hpp"

namespace conlink {

enum class StrategyKind { kRandom, kRandomParents, kResampling, kResamplingSiblings };

inline const char* strategy_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::kRandom: return "random";
    case StrategyKind::kRandomParents: return "random_plus_parents";
    case StrategyKind::kResampling: return "resampling";
    case StrategyKind::kResamplingSiblings: return "resampling_plus_siblings";
  }
  return "?";
}

inline StrategyKind parse_strategy(std::string_view s) {
  if (s == "random") return StrategyKind::kRandom;
  if (s == "random_plus_parents") return StrategyKind::kRandomParents;
  if (s == "resampling") return StrategyKind::kResampling;
  if (s == "resampling_plus_siblings") return StrategyKind::kResamplingSiblings;
  throw ValidationError("unknown sampling strategy \"" + std::string(s) + "\"");
}

struct SamplingStrategy {
  StrategyKind kind = StrategyKind::kRandom;
  std::size_t k_par = 2;   // parent names, 1..5
  std::size_t k_nn = 20;   // neighbours inspected when mining
  std::size_t k_sib = 5;   // sibling names, 1..5

  bool mines() const { return kind == StrategyKind::kResampling || kind == StrategyKind::kResamplingSiblings; }

  void validate() const {
    if (kind == StrategyKind::kRandomParents && (k_par < 1 || k_par > 5))
      throw ValidationError("k_par must be in [1, 5]");
    if (mines() && k_nn < 1) throw ValidationError("k_nn must be at least 1");
    if (kind == StrategyKind::kResamplingSiblings && (k_sib < 1 || k_sib > 5))
      throw ValidationError("k_sib must be in [1, 5]");
  }
};

struct SampleCounts {
  std::size_t n_pos = 30;
  std::size_t n_neg = 5;
  // Upper bound on triples per mention for the mined strategies; 0 means
  // n_pos * n_neg.
  std::size_t max_triples = 0;

  std::size_t cap() const { return max_triples ? max_triples : n_pos * n_neg; }
};

enum class PositiveSource : std::uint8_t { kGold, kParent };
enum class NegativeSource : std::uint8_t { kRandom, kHard, kSibling };

struct Triplet {
  std::string mention;
  NameId positive = 0;
  NameId negative = 0;
  PositiveSource positive_source = PositiveSource::kGold;
  NegativeSource negative_source = NegativeSource::kRandom;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

struct TripletBatch {
  std::vector<Triplet> triples;

  std::size_t size() const { return triples.size(); }
  friend bool operator==(const TripletBatch&, const TripletBatch&) = default;
};

/// What mining found for one mention under a snapshot encoder.
struct MinedRecord {
  std::vector<NameId> positives;       // every gold name, closest first
  std::vector<NameId> hard_negatives;  // non-gold names ranked above the best gold name, in rank order
  double best_gold_distance = 0;
};

namespace detail {

struct Pool {
  std::vector<NameId> ids;
  std::vector<std::uint8_t> source;
};

// The text a record is trained on, or nullopt when the record cannot be
// sampled: nil gold, a gold concept missing from the terminology, or a
// composite mention whose parts cannot be matched to gold concepts.
inline std::optional<std::string> trainable_text(const Terminology& t, const MentionRecord& rec) {
  if (rec.gold.empty() || rec.is_composite() || !gold_covered(rec, t)) return std::nullopt;
  return rec.components.front();
}

inline std::vector<NameId> gold_name_ids(const Terminology& t, const std::set<ConceptId>& gold) {
  std::vector<NameId> ids;
  for (const auto& g : gold) {
    auto n = t.name_ids(g);
    ids.insert(ids.end(), n.begin(), n.end());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

// n uniform draws with replacement from the gold names.
inline std::vector<NameId> draw_positives(const std::vector<NameId>& gold_ids, std::size_t n, Rng& rng) {
  std::vector<NameId> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(gold_ids[uniform_below(rng, gold_ids.size())]);
  return out;
}

// n uniform draws with replacement from the names outside `gold_sorted`.
inline std::vector<NameId> draw_negatives(std::size_t total_names, const std::vector<NameId>& gold_sorted,
                                          std::size_t n, Rng& rng) {
  const std::size_t free = total_names - gold_sorted.size();
  std::vector<NameId> out;
  if (free == 0) return out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    NameId r = uniform_below(rng, free);
    for (NameId g : gold_sorted) {
      if (g <= r) ++r;
      else break;
    }
    out.push_back(r);
  }
  return out;
}

inline TripletBatch cross(const std::string& mention, const Pool& pos, const Pool& neg) {
  TripletBatch b;
  b.triples.reserve(pos.ids.size() * neg.ids.size());
  for (std::size_t i = 0; i < pos.ids.size(); ++i)
    for (std::size_t j = 0; j < neg.ids.size(); ++j)
      b.triples.push_back({mention, pos.ids[i], neg.ids[j], static_cast<PositiveSource>(pos.source[i]),
                           static_cast<NegativeSource>(neg.source[j])});
  return b;
}

inline void append(Pool& p, const std::vector<NameId>& ids, std::uint8_t source) {
  p.ids.insert(p.ids.end(), ids.begin(), ids.end());
  p.source.insert(p.source.end(), ids.size(), source);
}

inline std::vector<NameId> union_parent_names(const Terminology& t, const std::set<ConceptId>& gold, std::size_t k,
                                              std::uint64_t seed) {
  std::vector<NameId> all;
  for (const auto& g : gold) {
    auto ids = t.parent_name_ids(g, k, seed);
    all.insert(all.end(), ids.begin(), ids.end());
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  if (all.size() > k) {
    Rng rng(derive_seed(seed, {0x9a4e47}));
    auto picks = sample_without_replacement(all.size(), k, rng);
    std::sort(picks.begin(), picks.end());
    std::vector<NameId> kept;
    for (auto p : picks) kept.push_back(all[p]);
    all = std::move(kept);
  }
  return all;
}

inline std::vector<NameId> union_sibling_names(const Terminology& t, const std::set<ConceptId>& gold, std::size_t k,
                                               std::uint64_t seed) {
  std::vector<NameId> all;
  for (const auto& g : gold)
    for (auto id : t.sibling_name_ids(g, k, seed))
      if (!gold.count(t.name(id).cui)) all.push_back(id);
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  if (all.size() > k) {
    Rng rng(derive_seed(seed, {0x5b1b}));
    auto picks = sample_without_replacement(all.size(), k, rng);
    std::sort(picks.begin(), picks.end());
    std::vector<NameId> kept;
    for (auto p : picks) kept.push_back(all[p]);
    all = std::move(kept);
  }
  return all;
}

}  // namespace detail

/// Strategy 1. Returns nullopt (skip the record) when it has no usable
/// gold concept or every name in the terminology is gold.
inline std::optional<TripletBatch> sample_random(const Terminology& t, const MentionRecord& rec,
                                                 const SampleCounts& counts, std::uint64_t seed) {
  auto text = detail::trainable_text(t, rec);
  if (!text) return std::nullopt;
  const auto gold_ids = detail::gold_name_ids(t, rec.gold);
  if (gold_ids.size() == t.name_count()) return std::nullopt;
  Rng pos_rng(derive_seed(seed, {1})), neg_rng(derive_seed(seed, {2}));
  detail::Pool pos, neg;
  detail::append(pos, detail::draw_positives(gold_ids, counts.n_pos, pos_rng), 0);
  detail::append(neg, detail::draw_negatives(t.name_count(), gold_ids, counts.n_neg, neg_rng), 0);
  return detail::cross(*text, pos, neg);
}

/// Strategy 2: parent names join the positive pool. Without parents the
/// result equals sample_random under the same seed.
inline std::optional<TripletBatch> sample_random_plus_parents(const Terminology& t, const MentionRecord& rec,
                                                              const SampleCounts& counts, std::size_t k_par,
                                                              std::uint64_t seed) {
  auto text = detail::trainable_text(t, rec);
  if (!text) return std::nullopt;
  const auto gold_ids = detail::gold_name_ids(t, rec.gold);
  if (gold_ids.size() == t.name_count()) return std::nullopt;
  Rng pos_rng(derive_seed(seed, {1})), neg_rng(derive_seed(seed, {2}));
  detail::Pool pos, neg;
  detail::append(pos, detail::draw_positives(gold_ids, counts.n_pos, pos_rng), 0);
  detail::append(pos, detail::union_parent_names(t, rec.gold, k_par, derive_seed(seed, {3})),
                 static_cast<std::uint8_t>(PositiveSource::kParent));
  detail::append(neg, detail::draw_negatives(t.name_count(), gold_ids, counts.n_neg, neg_rng), 0);
  return detail::cross(*text, pos, neg);
}

/// Strategy 3, mining half: ranks every name against each record with a
/// frozen encoder. Entries are nullopt for records that cannot be sampled.
inline std::vector<std::optional<MinedRecord>> mine_resampling(const Terminology& t, const Corpus& corpus,
                                                               const Encoder& snapshot, DistanceKind kind,
                                                               std::size_t k_nn) {
  if (k_nn == 0) throw ValidationError("k_nn must be at least 1");
  const VectorIndex ix = build_index(t, snapshot, kind);
  std::vector<std::optional<MinedRecord>> out(corpus.size());
  std::vector<std::size_t> usable;
  std::vector<std::string> texts;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (auto text = detail::trainable_text(t, corpus.records[i])) {
      usable.push_back(i);
      texts.push_back(*text);
    }
  const auto vecs = encode_batch(snapshot, texts);
  std::vector<std::span<const double>> qs(vecs.begin(), vecs.end());
  const auto hits = ix.knn_many(qs, k_nn);
  for (std::size_t u = 0; u < usable.size(); ++u) {
    const auto& gold = corpus.records[usable[u]].gold;
    MinedRecord m;
    std::vector<Neighbor> gold_ranked;
    for (auto id : detail::gold_name_ids(t, gold)) gold_ranked.push_back({id, distance(kind, vecs[u], ix.row(id))});
    std::sort(gold_ranked.begin(), gold_ranked.end(), neighbor_less);
    for (const auto& g : gold_ranked) m.positives.push_back(g.row);
    m.best_gold_distance = gold_ranked.front().distance;
    for (const auto& h : hits[u]) {
      if (gold.count(ix.names()[h.row].cui)) break;
      m.hard_negatives.push_back(h.row);
    }
    out[usable[u]] = std::move(m);
  }
  return out;
}

/// Strategies 3 and 4, assembly half. Positives are the mined gold names
/// followed by n_pos random gold names; negatives are the hard negatives,
/// or n_neg random ones when the gold name already ranks first, plus
/// k_sib sibling names when k_sib > 0. More than counts.cap() triples are
/// thinned to a seeded uniform subset in original order.
inline std::optional<TripletBatch> sample_resampling(const Terminology& t, const MentionRecord& rec,
                                                     const MinedRecord& mined, const SampleCounts& counts,
                                                     std::size_t k_sib, std::uint64_t seed) {
  auto text = detail::trainable_text(t, rec);
  if (!text) return std::nullopt;
  const auto gold_ids = detail::gold_name_ids(t, rec.gold);
  if (gold_ids.size() == t.name_count()) return std::nullopt;
  Rng pos_rng(derive_seed(seed, {1})), neg_rng(derive_seed(seed, {2}));
  detail::Pool pos, neg;
  detail::append(pos, mined.positives, 0);
  detail::append(pos, detail::draw_positives(gold_ids, counts.n_pos, pos_rng), 0);
  if (!mined.hard_negatives.empty())
    detail::append(neg, mined.hard_negatives, static_cast<std::uint8_t>(NegativeSource::kHard));
  else
    detail::append(neg, detail::draw_negatives(t.name_count(), gold_ids, counts.n_neg, neg_rng), 0);
  if (k_sib > 0)
    detail::append(neg, detail::union_sibling_names(t, rec.gold, k_sib, derive_seed(seed, {4})),
                   static_cast<std::uint8_t>(NegativeSource::kSibling));
  TripletBatch all = detail::cross(*text, pos, neg);
  const std::size_t cap = counts.cap();
  if (all.size() <= cap) return all;
  Rng cap_rng(derive_seed(seed, {5}));
  auto keep = sample_without_replacement(all.size(), cap, cap_rng);
  std::sort(keep.begin(), keep.end());
  TripletBatch out;
  out.triples.reserve(cap);
  for (auto i : keep) out.triples.push_back(std::move(all.triples[i]));
  return out;
}

/// Strategy 4 entry point; identical to sample_resampling with k_sib names
/// of sibling concepts in the negative pool.
inline std::optional<TripletBatch> sample_resampling_plus_siblings(const Terminology& t, const MentionRecord& rec,
                                                                   const MinedRecord& mined,
                                                                   const SampleCounts& counts, std::size_t k_sib,
                                                                   std::uint64_t seed) {
  return sample_resampling(t, rec, mined, counts, k_sib, seed);
}

/// Dispatches on the strategy. `mined` is required for the mining
/// strategies and ignored otherwise.
inline std::optional<TripletBatch> sample_triplets(const SamplingStrategy& s, const Terminology& t,
                                                   const MentionRecord& rec, const SampleCounts& counts,
                                                   const MinedRecord* mined, std::uint64_t seed) {
  switch (s.kind) {
    case StrategyKind::kRandom: return sample_random(t, rec, counts, seed);
    case StrategyKind::kRandomParents: return sample_random_plus_parents(t, rec, counts, s.k_par, seed);
    case StrategyKind::kResampling:
    case StrategyKind::kResamplingSiblings:
      if (!mined) return std::nullopt;
      return sample_resampling(t, rec, *mined, counts, s.kind == StrategyKind::kResamplingSiblings ? s.k_sib : 0,
                               seed);
  }
  return std::nullopt;
}

}  // namespace conlink
