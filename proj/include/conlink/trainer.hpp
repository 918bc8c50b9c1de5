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

// Triplet-loss training of the n-gram encoder with plain minibatch SGD.
//
// Each epoch: optionally re-mine hard negatives with a frozen copy of the
// current table, build every record's triplets, shuffle them, and step
// through minibatches. The step is table_row -= lr * g where g is the
// gradient of the summed triplet loss over the batch, routed through the
// mean pooling.
// All randomness derives from TrainConfig::seed; the run is sequential and
// bit-reproducible.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "conlink/corpus.hpp"
#include "conlink/encoder.hpp"
#include "conlink/error.hpp"
#include "conlink/eval.hpp"
#include "conlink/index.hpp"
#include "conlink/metric.hpp"
#include "conlink/random.hpp"
#include "conlink/sampler.hpp"
#include "conlink/terminology.hpp"

namespace conlink {

struct TrainConfig {
  SamplingStrategy strategy;
  SampleCounts counts;
  std::size_t epochs = 20;
  std::size_t batch_size = 48;  // triplets per SGD step
  double learning_rate = 1e-2;
  TripletLossParams loss;
  NGramEncoderConfig encoder;
  std::uint64_t seed = 42;

  void validate() const {
    strategy.validate();
    if (counts.n_pos == 0 || counts.n_neg == 0) throw ValidationError("n_pos and n_neg must be positive");
    if (batch_size == 0) throw ValidationError("batch_size must be positive");
    if (!(learning_rate >= 0) || !std::isfinite(learning_rate))
      throw ValidationError("learning_rate must be finite and non-negative");
    if (!(loss.margin >= 0)) throw ValidationError("margin must be non-negative");
  }
};

struct EpochStats {
  double mean_loss = 0;
  double active_fraction = 0;  // triplets with positive loss
  std::size_t triplets = 0;
  bool mined = false;
  double wall_seconds = 0;
  std::optional<double> dev_acc1;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::size_t usable_records = 0;
  std::size_t skipped_records = 0;
};

struct EpochDirective {
  bool remine = false;
};

/// Mining strategies refresh their hard negatives at the start of every
/// epoch; the others need nothing.
inline EpochDirective epoch_schedule(const TrainConfig& cfg, std::size_t /*epoch_index*/) {
  return {cfg.strategy.mines()};
}

struct TrainResult {
  NGramEncoder encoder;
  TrainReport report;
};

namespace detail {

// Dense gradient buffer that remembers which rows were touched.
class RowAccumulator {
 public:
  RowAccumulator(std::size_t rows, std::size_t dim) : dim_(dim), grad_(rows * dim, 0.0), touched_flag_(rows, 0) {}

  void add(std::uint32_t row, double weight, std::span<const double> g) {
    if (!touched_flag_[row]) {
      touched_flag_[row] = 1;
      touched_.push_back(row);
    }
    double* dst = grad_.data() + static_cast<std::size_t>(row) * dim_;
    for (std::size_t j = 0; j < dim_; ++j) dst[j] += weight * g[j];
  }

  // table_row -= scale * grad_row for every touched row, then reset.
  void apply(NGramEncoder& enc, double scale) {
    for (auto row : touched_) {
      double* src = grad_.data() + static_cast<std::size_t>(row) * dim_;
      auto dst = enc.mutable_row(row);
      for (std::size_t j = 0; j < dim_; ++j) {
        dst[j] -= scale * src[j];
        src[j] = 0.0;
      }
      touched_flag_[row] = 0;
    }
    touched_.clear();
  }

 private:
  std::size_t dim_;
  std::vector<double> grad_;
  std::vector<std::uint8_t> touched_flag_;
  std::vector<std::uint32_t> touched_;
};

}  // namespace detail

/// Trains `init` in place of a fresh table. Records that cannot be sampled
/// (nil, uncovered gold, composite) are counted and skipped.
inline TrainResult train(const Terminology& t, const Corpus& train_corpus, const TrainConfig& cfg,
                         NGramEncoder init, const Corpus* dev = nullptr) {
  cfg.validate();
  TrainResult res;
  res.encoder = std::move(init);
  NGramEncoder& enc = res.encoder;

  for (const auto& r : train_corpus.records) {
    if (detail::trainable_text(t, r)) ++res.report.usable_records;
    else ++res.report.skipped_records;
  }
  if (res.report.usable_records == 0) throw ValidationError("no usable training records");

  detail::RowAccumulator acc(enc.buckets(), enc.dimension());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochStats stats;
    const EpochDirective directive = epoch_schedule(cfg, epoch);
    std::vector<std::optional<MinedRecord>> mined;
    if (directive.remine) {
      mined = mine_resampling(t, train_corpus, enc, cfg.loss.distance, cfg.strategy.k_nn);
      stats.mined = true;
    }

    std::vector<Triplet> triples;
    for (std::size_t i = 0; i < train_corpus.size(); ++i) {
      const MinedRecord* m = directive.remine && mined[i] ? &*mined[i] : nullptr;
      auto batch = sample_triplets(cfg.strategy, t, train_corpus.records[i], cfg.counts, m,
                                   derive_seed(cfg.seed, {0x7a1b, epoch, i}));
      if (!batch) continue;
      for (auto& tr : batch->triples) triples.push_back(std::move(tr));
    }
    Rng shuffle_rng(derive_seed(cfg.seed, {0x5bff, epoch}));
    shuffle(triples, shuffle_rng);

    double loss_sum = 0;
    std::size_t active = 0;
    for (std::size_t b0 = 0; b0 < triples.size(); b0 += cfg.batch_size) {
      const std::size_t b1 = std::min(triples.size(), b0 + cfg.batch_size);
      for (std::size_t i = b0; i < b1; ++i) {
        const Triplet& tr = triples[i];
        const std::string& pos = t.name(tr.positive).surface;
        const std::string& neg = t.name(tr.negative).surface;
        const Vector ym = enc.encode(tr.mention), yg = enc.encode(pos), yn = enc.encode(neg);
        const TripletGrad g = triplet_grad(cfg.loss, ym, yg, yn);
        if (!std::isfinite(g.loss)) {
          std::ostringstream msg;
          msg << "non-finite loss at epoch " << epoch << ", triplet " << i << " (mention \"" << tr.mention
              << "\", positive \"" << pos << "\", negative \"" << neg << "\")";
          throw TrainingError(msg.str());
        }
        loss_sum += g.loss;
        if (g.loss == 0.0) continue;
        ++active;
        for (auto [row, w] : enc.bucket_weights(tr.mention)) acc.add(row, w, g.mention);
        for (auto [row, w] : enc.bucket_weights(pos)) acc.add(row, w, g.positive);
        for (auto [row, w] : enc.bucket_weights(neg)) acc.add(row, w, g.negative);
      }
      acc.apply(enc, cfg.learning_rate);
    }
    stats.triplets = triples.size();
    stats.mean_loss = triples.empty() ? 0.0 : loss_sum / static_cast<double>(triples.size());
    stats.active_fraction = triples.empty() ? 0.0 : static_cast<double>(active) / static_cast<double>(triples.size());
    if (!std::isfinite(stats.mean_loss))
      throw TrainingError("non-finite mean loss in epoch " + std::to_string(epoch));

    if (dev) {
      const VectorIndex ix = build_index(t, enc, cfg.loss.distance);
      EvalConfig ecfg;
      stats.dev_acc1 = evaluate_pipeline(t, enc, ix, nullptr, *dev, ecfg, nullptr, FingerprintPolicy::kIgnore).acc(1);
    }
    stats.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    res.report.epochs.push_back(stats);
  }
  return res;
}

/// Trains from a freshly initialized table (seeded by cfg.seed).
inline TrainResult train(const Terminology& t, const Corpus& train_corpus, const TrainConfig& cfg,
                         const Corpus* dev = nullptr) {
  return train(t, train_corpus, cfg, NGramEncoder::random_init(cfg.encoder, derive_seed(cfg.seed, {0x1417})), dev);
}

}  // namespace conlink
