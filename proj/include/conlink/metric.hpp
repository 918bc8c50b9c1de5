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

// Mention/name scoring and the triplet objective.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "conlink/error.hpp"

namespace conlink {

enum class DistanceKind : std::uint8_t { kEuclidean = 0, kCosine = 1 };

inline const char* distance_name(DistanceKind k) { return k == DistanceKind::kEuclidean ? "euclidean" : "cosine"; }

inline DistanceKind parse_distance(std::string_view s) {
  if (s == "euclidean") return DistanceKind::kEuclidean;
  if (s == "cosine" || s == "cosine_distance") return DistanceKind::kCosine;
  throw ValidationError("unknown distance kind \"" + std::string(s) + "\"");
}

namespace detail {

inline void check_dims(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw DimensionError("dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
}

}  // namespace detail

// Both reductions use four interleaved accumulators combined in a fixed
// order, so every caller sees bit-identical results.
inline double squared_l2(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  double acc[4] = {0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    for (int l = 0; l < 4; ++l) {
      const double d = a[i + l] - b[i + l];
      acc[l] += d * d;
    }
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    acc[i & 3] += d * d;
  }
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  double acc[4] = {0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    for (int l = 0; l < 4; ++l) acc[l] += a[i + l] * b[i + l];
  for (; i < n; ++i) acc[i & 3] += a[i] * b[i];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

inline double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// 1 - cos, clamped to [0, 2] against rounding.
inline double cosine_distance_from(double dot_ab, double norm_a, double norm_b) {
  return std::clamp(1.0 - dot_ab / (norm_a * norm_b), 0.0, 2.0);
}

inline double distance(DistanceKind kind, std::span<const double> a, std::span<const double> b) {
  detail::check_dims(a, b);
  if (kind == DistanceKind::kEuclidean) return std::sqrt(squared_l2(a, b));
  const double na = l2_norm(a), nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) throw ValidationError("cosine distance is undefined for a zero vector");
  return cosine_distance_from(dot(a, b), na, nb);
}

struct TripletLossParams {
  double margin = 1.0;
  DistanceKind distance = DistanceKind::kEuclidean;
};

/// max(d(m, g) - d(m, n) + margin, 0) for mention m, positive g, negative n.
inline double triplet_loss(const TripletLossParams& p, std::span<const double> m, std::span<const double> g,
                           std::span<const double> n) {
  if (p.margin < 0) throw ValidationError("triplet margin must be non-negative");
  return std::max(distance(p.distance, m, g) - distance(p.distance, m, n) + p.margin, 0.0);
}

struct TripletGrad {
  double loss = 0;
  std::vector<double> mention, positive, negative;
};

inline constexpr double kCoincidentGuard = 1e-12;

namespace detail {

// Gradients of d(a, b) with respect to a and b.
inline void distance_grad(DistanceKind kind, std::span<const double> a, std::span<const double> b,
                          std::vector<double>& ga, std::vector<double>& gb) {
  const std::size_t n = a.size();
  ga.assign(n, 0.0);
  gb.assign(n, 0.0);
  if (kind == DistanceKind::kEuclidean) {
    const double d = std::max(std::sqrt(squared_l2(a, b)), kCoincidentGuard);
    for (std::size_t i = 0; i < n; ++i) {
      ga[i] = (a[i] - b[i]) / d;
      gb[i] = -ga[i];
    }
    return;
  }
  const double na = l2_norm(a), nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) throw ValidationError("cosine distance is undefined for a zero vector");
  const double ab = dot(a, b);
  const double inv = 1.0 / (na * nb);
  for (std::size_t i = 0; i < n; ++i) {
    ga[i] = -inv * (b[i] - ab / (na * na) * a[i]);
    gb[i] = -inv * (a[i] - ab / (nb * nb) * b[i]);
  }
}

}  // namespace detail

/// Analytic gradient of triplet_loss. All three gradients are zero when the
/// hinge is inactive (loss exactly 0).
inline TripletGrad triplet_grad(const TripletLossParams& p, std::span<const double> m, std::span<const double> g,
                                std::span<const double> n) {
  detail::check_dims(m, g);
  detail::check_dims(m, n);
  TripletGrad out;
  out.loss = triplet_loss(p, m, g, n);
  const std::size_t dim = m.size();
  if (out.loss == 0.0) {
    out.mention.assign(dim, 0.0);
    out.positive.assign(dim, 0.0);
    out.negative.assign(dim, 0.0);
    return out;
  }
  std::vector<double> dm_g, dg, dm_n, dn;
  detail::distance_grad(p.distance, m, g, dm_g, dg);
  detail::distance_grad(p.distance, m, n, dm_n, dn);
  out.mention.resize(dim);
  out.positive = std::move(dg);
  out.negative.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    out.mention[i] = dm_g[i] - dm_n[i];
    out.negative[i] = -dn[i];
  }
  return out;
}

}  // namespace conlink
