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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gusd/graph.hpp"
#include "gusd/tensor.hpp"

namespace gusd {

/// Two-component user spoiler-propensity mixture (a low mode near 0 and a
/// high mode near 1). Propensities are logit-normal around each mean.
struct PropensityMix {
  std::array<double, 2> weights{0.7, 0.3};
  std::array<double, 2> means{0.06, 0.8};
  double spread = 0.5;  // std of the logit around each mode
};

struct GeneratorConfig {
  std::int64_t n_users = 2000;
  std::int64_t n_movies = 300;
  std::int64_t n_reviews = 20000;
  int n_genres = 21;
  /// Per-genre base spoiler rate; empty selects a monotone ramp.
  std::vector<double> genre_rate;
  PropensityMix user_propensity_mix;
  std::int64_t embed_dim = 32;
  std::uint64_t seed = 7;
  /// Global multiplier on every label-correlated effect; 0 gives pure noise.
  double signal_strength = 1.0;
  double target_rate = 0.25;

  // Label logit weights before scaling by signal_strength.
  double genre_weight = 2.0;
  double user_weight = 1.0;
  double text_weight = 0.8;

  double text_noise = 1.0;       // isotropic embedding noise
  double text_signal = 0.8;      // latent text signal amplitude in the embedding
  double spoiler_signal = 0.5;   // spoiler direction amplitude
  double spoiler_shared = 1.0;   // weight of the genre-independent spoiler direction
  double genre_signal = 1.0;     // genre direction amplitude
  double user_style = 1.0;       // per-author style direction amplitude (label independent)
  double taste_strength = 0.2;   // chance a review targets the user's favourite genre
  double max_genres_per_movie = 3;

  static GeneratorConfig defaults() { return {}; }
  /// Stronger user-propensity effect and weaker per-review text signal.
  static GeneratorConfig bias_driven();

  /// Effective per-genre base rates (ramp when genre_rate is empty).
  std::vector<double> genre_rates() const;

  void validate() const;
};

void to_json(nlohmann::json& j, const GeneratorConfig& c);
/// Rejects unknown keys with ConfigError.
void from_json(const nlohmann::json& j, GeneratorConfig& c);

enum class Split : std::uint8_t { Train, Val, Test };
std::string to_string(Split s);
Split parse_split(const std::string& s);

/// Graph, per-node metadata and text embeddings, review labels and splits.
struct DatasetBundle {
  GeneratorConfig config;
  HeteroGraph graph;
  std::vector<std::vector<float>> meta;  // per node id
  Matrix<float> user_embeddings, review_embeddings, movie_embeddings;
  std::vector<int> labels;   // per review index
  std::vector<Split> splits; // per review index
  std::uint64_t split_seed = 0;

  /// All embeddings stacked in node-id order.
  Matrix<float> node_embeddings() const;
  std::vector<std::int64_t> reviews_in(Split s) const;
  double spoiler_rate() const;

  bool operator==(const DatasetBundle& other) const;
};

/// Samples a dataset. Throws ConfigError when the target spoiler rate cannot
/// be met under the configured effects.
DatasetBundle generate(const GeneratorConfig& config);

/// Label-stratified random 7:2:1 review split, deterministic given seed.
void split(DatasetBundle& bundle, std::uint64_t seed);

/// Latent per-user propensities used by `generate` (for calibration checks).
std::vector<double> sample_user_propensities(const GeneratorConfig& config);

}  // namespace gusd
