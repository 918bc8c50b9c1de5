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

// Text encoders. An encoder maps a normalized string to a fixed-dimension
// vector; mentions and concept names share the same encoder so that their
// distance is meaningful.
//
// NGramEncoder is the trainable reference implementation: every boundary
// marked character trigram of "^text$" is hashed into one of B buckets, each
// bucket owns a D-dimensional row, and the embedding is the elementwise mean
// of the rows of all trigrams (duplicates included).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "conlink/binary_io.hpp"
#include "conlink/error.hpp"
#include "conlink/random.hpp"

namespace conlink {

using Vector = std::vector<double>;

class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual std::size_t dimension() const = 0;
  virtual Vector encode(std::string_view text) const = 0;
  // Identifies the exact parameters; indexes record it to detect mismatches.
  virtual std::uint64_t fingerprint() const = 0;
};

struct NGramEncoderConfig {
  std::uint64_t buckets = 1u << 16;
  std::uint64_t dimension = 64;
  std::uint64_t hash_seed = 0x5eed;
  double init_scale = 0.05;  // rows start ~ uniform(-scale, scale)
};

class NGramEncoder final : public Encoder {
 public:
  static constexpr std::string_view kMagic = "CLNK1";
  static constexpr std::size_t kGramSize = 3;

  NGramEncoder() = default;

  // Zero-initialized table.
  NGramEncoder(std::uint64_t buckets, std::uint64_t dimension, std::uint64_t hash_seed)
      : buckets_(buckets), dim_(dimension), hash_seed_(hash_seed), table_(checked_size(buckets, dimension), 0.0) {}

  static NGramEncoder random_init(const NGramEncoderConfig& cfg, std::uint64_t init_seed) {
    NGramEncoder e(cfg.buckets, cfg.dimension, cfg.hash_seed);
    Rng rng(init_seed);
    for (double& v : e.table_) v = uniform_real(rng, -cfg.init_scale, cfg.init_scale);
    return e;
  }

  std::size_t dimension() const override { return dim_; }
  std::uint64_t buckets() const { return buckets_; }
  std::uint64_t hash_seed() const { return hash_seed_; }

  std::span<const double> table() const { return table_; }
  std::span<double> mutable_table() { return table_; }
  std::span<const double> row(std::uint64_t b) const { return {table_.data() + b * dim_, dim_}; }
  std::span<double> mutable_row(std::uint64_t b) { return {table_.data() + b * dim_, dim_}; }

  /// Bucket index of every trigram of "^text$", in text order, duplicates
  /// kept. A text of n bytes yields n trigrams.
  std::vector<std::uint32_t> featurize(std::string_view text) const {
    if (text.empty()) throw ValidationError("cannot featurize empty text");
    std::string marked;
    marked.reserve(text.size() + 2);
    marked.push_back('^');
    marked.append(text);
    marked.push_back('$');
    std::vector<std::uint32_t> out;
    out.reserve(marked.size() - kGramSize + 1);
    const std::uint64_t basis = 0xcbf29ce484222325ULL ^ splitmix64(hash_seed_);
    for (std::size_t i = 0; i + kGramSize <= marked.size(); ++i) {
      const std::uint64_t h = splitmix64(io::fnv1a(std::string_view(marked).substr(i, kGramSize), basis));
      out.push_back(static_cast<std::uint32_t>(h % buckets_));
    }
    return out;
  }

  Vector encode(std::string_view text) const override {
    const auto grams = featurize(text);
    Vector y(dim_, 0.0);
    for (auto b : grams) {
      const double* r = table_.data() + static_cast<std::size_t>(b) * dim_;
      for (std::size_t j = 0; j < dim_; ++j) y[j] += r[j];
    }
    const double t = static_cast<double>(grams.size());
    for (double& v : y) v /= t;
    return y;
  }

  /// (bucket, multiplicity / trigram count), ascending by bucket. These are
  /// the coefficients of the mean, so they sum to one.
  std::vector<std::pair<std::uint32_t, double>> bucket_weights(std::string_view text) const {
    auto grams = featurize(text);
    const double t = static_cast<double>(grams.size());
    std::sort(grams.begin(), grams.end());
    std::vector<std::pair<std::uint32_t, double>> out;
    for (std::size_t i = 0; i < grams.size();) {
      std::size_t j = i;
      while (j < grams.size() && grams[j] == grams[i]) ++j;
      out.emplace_back(grams[i], static_cast<double>(j - i) / t);
      i = j;
    }
    return out;
  }

  /// Gradient of <upstream, encode(text)> with respect to the table rows.
  std::map<std::uint32_t, Vector> grad_wrt_table(std::string_view text, std::span<const double> upstream) const {
    if (upstream.size() != dim_) throw DimensionError("upstream gradient has wrong dimension");
    std::map<std::uint32_t, Vector> grad;
    for (auto [b, w] : bucket_weights(text)) {
      Vector g(dim_);
      for (std::size_t j = 0; j < dim_; ++j) g[j] = w * upstream[j];
      grad.emplace(b, std::move(g));
    }
    return grad;
  }

  std::uint64_t fingerprint() const override {
    std::uint64_t h = io::fnv1a(kMagic);
    const auto mix = [&h](std::uint64_t v) {
      for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xff;
        h *= 0x100000001b3ULL;
      }
    };
    mix(buckets_);
    mix(dim_);
    mix(hash_seed_);
    for (double v : table_) mix(std::bit_cast<std::uint64_t>(v));
    return h;
  }

  void save(std::ostream& os) const {
    io::write_bytes(os, kMagic);
    io::write_u64(os, buckets_);
    io::write_u64(os, dim_);
    io::write_u64(os, hash_seed_);
    for (double v : table_) io::write_f64(os, v);
  }

  static NGramEncoder load(std::istream& is, const std::string& source = "<checkpoint>") {
    io::Reader r(is, source);
    r.expect_magic(kMagic);
    const std::uint64_t buckets = r.u64();
    const std::uint64_t dim = r.u64();
    const std::uint64_t seed = r.u64();
    if (buckets == 0 || dim == 0 || buckets > (1ULL << 28) || dim > 4096) r.fail("implausible table shape");
    NGramEncoder e(buckets, dim, seed);
    for (double& v : e.table_) {
      v = r.f64();
      if (!std::isfinite(v)) r.fail("non-finite table entry");
    }
    r.expect_eof();
    return e;
  }

  void save_file(const std::string& path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot write checkpoint " + path);
    save(os);
  }

  static NGramEncoder load_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw NotFoundError("cannot open checkpoint " + path);
    return load(is, path);
  }

  friend bool operator==(const NGramEncoder& a, const NGramEncoder& b) {
    return a.buckets_ == b.buckets_ && a.dim_ == b.dim_ && a.hash_seed_ == b.hash_seed_ && a.table_ == b.table_;
  }

 private:
  static std::size_t checked_size(std::uint64_t buckets, std::uint64_t dim) {
    if (buckets == 0 || dim == 0) throw ValidationError("encoder needs at least one bucket and one dimension");
    return static_cast<std::size_t>(buckets * dim);
  }

  std::uint64_t buckets_ = 0;
  std::uint64_t dim_ = 0;
  std::uint64_t hash_seed_ = 0;
  std::vector<double> table_;
};

/// encode() over many texts; results are identical to a sequential loop.
/// Work is split over up to `threads` workers (0 = hardware concurrency).
inline std::vector<Vector> encode_batch(const Encoder& enc, std::span<const std::string> texts, unsigned threads = 0) {
  for (std::size_t i = 0; i < texts.size(); ++i)
    if (texts[i].empty()) throw ValidationError("empty text at batch index " + std::to_string(i));
  std::vector<Vector> out(texts.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  constexpr std::size_t kMinPerThread = 2048;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, texts.size() / kMinPerThread + 1));
  if (threads <= 1) {
    for (std::size_t i = 0; i < texts.size(); ++i) out[i] = enc.encode(texts[i]);
    return out;
  }
  {
    std::vector<std::jthread> workers;
    const std::size_t chunk = (texts.size() + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
      const std::size_t lo = w * chunk, hi = std::min(texts.size(), lo + chunk);
      workers.emplace_back([&, lo, hi] {
        for (std::size_t i = lo; i < hi; ++i) out[i] = enc.encode(texts[i]);
      });
    }
  }
  return out;
}

}  // namespace conlink
