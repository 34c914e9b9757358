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

#include <cstdint>
#include <string>

#include <json.hpp>

#include "gusd/encoders.hpp"

namespace gusd {

enum class PerturbKind { None, DropEdges, ZeroFeatures, ReduceLabels };

std::string to_string(PerturbKind k);
PerturbKind parse_perturb_kind(const std::string& s);

/// Every knob of one training run. Serialized in full into the run
/// manifest; unknown JSON keys are rejected.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string model = "gusd";  // gusd | text-mlp

  // Optimization
  double lr = 1e-4;
  double weight_decay = 1e-5;
  double lambda = 0.0;  // explicit L2 term, off by default
  double ce_weight = 1.3;
  int epochs = 20;
  int batch_size = 128;
  int patience = 3;
  double dropout = 0.3;
  int eval_batch = 1024;

  // Encoders
  Index hidden = 32;
  Index meta_hidden = 32;
  bool user_bias = true;
  UserBiasConfig bias;

  // R2GFormer
  int gnn_layers = 2;
  int hops = 2;
  double alpha = 0.3;
  Index gat_heads = 4;
  std::string khop = "exact";  // exact | approx
  double sample_ratio = 1.0;
  std::string hop_aggregator = "sum";
  std::string genre_pooling = "mean";
  bool genreformer = true;
  Index trm_heads = 4;
  Index trm_layers = 2;

  // Review mixer
  std::string mixer = "gmoe";  // gmoe | mlp | moe | soft-moe
  std::string gmoe_aggregator = "sum";
  int gmoe_layers = 2;
  Index gmoe_hidden = 32;
  int experts = 0;  // 0: one per genre

  // Perturbation
  PerturbKind perturb = PerturbKind::None;
  double perturb_level = 0.0;

  /// Throws ConfigError on any out-of-range or unknown enumerated value.
  void validate() const;

  bool operator==(const RunConfig&) const = default;
};

/// Defaults with a larger batch and step size. Every step re-encodes the
/// full graph, so this cuts the cost of an epoch on one CPU core.
inline RunConfig desk_profile() {
  RunConfig c;
  c.batch_size = 2048;
  c.lr = 3e-3;
  return c;
}

void to_json(nlohmann::json& j, const UserBiasConfig& c);
void from_json(const nlohmann::json& j, UserBiasConfig& c);
void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

/// Named ablation arms: full, w/o-ub, approx-khop, normal-gat, mlp, moe,
/// soft-moe, w/o-genreformer, sum-pooling, max-pooling.
RunConfig apply_arm(RunConfig base, const std::string& arm);
const std::vector<std::string>& ablation_arms();

}  // namespace gusd
