/**
 * Copyright 2026 The GUSD Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "gusd/checkpoint.hpp"
#include "gusd/metrics.hpp"
#include "gusd/model.hpp"

namespace gusd {

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;  // mean per training review
  double val_f1 = 0.0;
};

struct RunResult {
  RunConfig config;
  Metrics train, val, test;
  int best_epoch = 0;
  int epochs_run = 0;
  std::int64_t train_size = 0;
  std::vector<EpochLog> log;
  std::optional<double> bias_link_auc;
  std::vector<NamedTensor> checkpoint;  // best-validation parameters
};

/// Link-prediction pretraining of U_b with the run's bias settings and seed.
UserBiasResult pretrain_bias(const DatasetBundle& bundle, const RunConfig& cfg);

/// Training reviews after the reduce-labels perturbation (all training
/// reviews otherwise).
std::vector<Index> training_reviews(const DatasetBundle& bundle, const RunConfig& cfg);

/// Edge list after dropping round(level * |E|) edges; drops are nested
/// across levels for a fixed seed.
EdgePairs drop_edges(const HeteroGraph& graph, double level, std::uint64_t seed);

/// Zeroes text and metadata rows of round(level * n) nodes, nested across
/// levels for a fixed seed.
void zero_features(GraphInputs& in, double level, std::uint64_t seed);

/// Class-1 probabilities for `reviews`, evaluated in chunks of `chunk`.
template <typename T>
std::vector<double> predict(ReviewClassifier<T>& model, const GraphTensors<T>& x, const GraphInputs& in,
                            const std::vector<Index>& reviews, Index chunk) {
  NoGradGuard guard;
  const Mode mode{};
  model.encode(x, in, mode);
  std::vector<double> out;
  out.reserve(reviews.size());
  for (std::size_t begin = 0; begin < reviews.size(); begin += static_cast<std::size_t>(chunk)) {
    const std::size_t end = std::min(reviews.size(), begin + static_cast<std::size_t>(chunk));
    const std::vector<Index> batch(reviews.begin() + static_cast<std::ptrdiff_t>(begin),
                                   reviews.begin() + static_cast<std::ptrdiff_t>(end));
    const Matrix<T> p = softmax(model.logits(x, in, batch, mode), 1).value();
    for (Index i = 0; i < p.rows(); ++i) out.push_back(static_cast<double>(p(i, 1)));
  }
  return out;
}

/// Weighted cross-entropy summed over the batch plus lambda * sum theta^2.
template <typename T>
Tensor<T> training_loss(const Tensor<T>& logits, const std::vector<int>& labels, double ce_weight, double lambda,
                        const ParameterSet<T>* params) {
  const std::vector<double> cw{1.0, ce_weight};
  Tensor<T> loss = weighted_cross_entropy(logits, std::span<const int>(labels), std::span<const double>(cw));
  if (lambda > 0 && params != nullptr) {
    for (const auto& [_, p] : params->items()) loss = add(loss, scale(sum_all(mul(p, p)), static_cast<T>(lambda)));
  }
  return loss;
}

/// One seed: trains with early stopping on validation F1, restores the
/// best parameters and reports train/val/test metrics. `user_bias` skips
/// pretraining when given.
RunResult train_run(const DatasetBundle& bundle, const RunConfig& cfg, const Matrix<float>* user_bias = nullptr);

/// One training per seed, test metrics at every level. Edge drops and
/// feature zeroing touch only the test-time inputs, so those kinds share a
/// single trained model across levels; other kinds retrain per level.
std::vector<RunResult> train_levels(const DatasetBundle& bundle, const RunConfig& cfg, const std::vector<double>& levels,
                                    const Matrix<float>* user_bias = nullptr);

struct SweepResult {
  std::vector<RunResult> runs;

  Summary summary(const std::string& split, const std::string& metric) const;
  nlohmann::json to_json() const;
};

/// Runs seeds cfg.seed, cfg.seed + 1, ... (`n_seeds` of them).
SweepResult run_seeds(const DatasetBundle& bundle, const RunConfig& cfg, int n_seeds);

/// Seeds as in run_seeds, one sweep per level (in `levels` order).
std::vector<SweepResult> run_seeds_levels(const DatasetBundle& bundle, const RunConfig& cfg, int n_seeds,
                                          const std::vector<double>& levels);

/// F1 of predicting "not spoiler" everywhere on the test split (always 0
/// for the positive class) and its accuracy.
Metrics all_negative_baseline(const DatasetBundle& bundle);

}  // namespace gusd
