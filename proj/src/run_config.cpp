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
#include "gusd/run_config.hpp"

#include <set>

#include "gusd/errors.hpp"
#include "gusd/fusion_gmoe.hpp"
#include "gusd/r2gformer.hpp"

namespace gusd {

using nlohmann::json;

namespace {

template <typename V>
void read_field(const json& j, const char* key, V& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<V>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: bad value for '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError(what + ": unknown key '" + key + "'");
  }
}

}  // namespace

std::string to_string(PerturbKind k) {
  switch (k) {
    case PerturbKind::None: return "none";
    case PerturbKind::DropEdges: return "drop-edges";
    case PerturbKind::ZeroFeatures: return "zero-features";
    case PerturbKind::ReduceLabels: return "reduce-labels";
  }
  return "?";
}

PerturbKind parse_perturb_kind(const std::string& s) {
  if (s == "none") return PerturbKind::None;
  if (s == "drop-edges") return PerturbKind::DropEdges;
  if (s == "zero-features") return PerturbKind::ZeroFeatures;
  if (s == "reduce-labels") return PerturbKind::ReduceLabels;
  throw ConfigError("unknown perturbation '" + s + "'");
}

void RunConfig::validate() const {
  if (model != "gusd" && model != "text-mlp") throw ConfigError("run config: unknown model '" + model + "'");
  if (lr <= 0) throw ConfigError("run config: lr must be > 0");
  if (weight_decay < 0 || lambda < 0) throw ConfigError("run config: weight_decay and lambda must be >= 0");
  if (ce_weight <= 0) throw ConfigError("run config: ce_weight must be > 0");
  if (epochs < 1 || batch_size < 1 || patience < 1 || eval_batch < 1) {
    throw ConfigError("run config: epochs, batch_size, patience, eval_batch must be >= 1");
  }
  if (dropout < 0 || dropout >= 1) throw ConfigError("run config: dropout must be in [0, 1)");
  if (hidden < 1 || meta_hidden < 1 || gmoe_hidden < 1) throw ConfigError("run config: widths must be >= 1");
  if (khop != "exact" && khop != "approx") throw ConfigError("run config: khop must be exact or approx");
  if (sample_ratio <= 0 || sample_ratio > 1) throw ConfigError("run config: sample_ratio must be in (0, 1]");
  if (experts < 0) throw ConfigError("run config: experts must be >= 0");
  if (perturb_level < 0 || perturb_level > 1) throw ConfigError("run config: perturb_level must be in [0, 1]");
  if (bias.epochs < 1 || bias.dim < 1 || bias.lr <= 0) throw ConfigError("run config: bad user bias settings");
  parse_hop_aggregator(hop_aggregator);
  parse_genre_pooling(genre_pooling);
  parse_mixer_kind(mixer);
  parse_moe_aggregator(gmoe_aggregator);
  R2GConfig r;
  r.dim = hidden;
  r.K = hops;
  r.alpha = alpha;
  r.layers = gnn_layers;
  r.gat_heads = gat_heads;
  r.trm_heads = trm_heads;
  r.validate();
  if (gmoe_layers < 1) throw ConfigError("run config: gmoe_layers must be >= 1");
  if ((3 * hidden) % trm_heads != 0) throw ConfigError("run config: 3 x hidden must be divisible by trm_heads");
}

void to_json(json& j, const UserBiasConfig& c) {
  j = json{{"dim", c.dim},       {"epochs", c.epochs}, {"lr", c.lr},
           {"weight_decay", c.weight_decay}, {"neg_ratio", c.neg_ratio}, {"tau", c.tau},
           {"holdout_fraction", c.holdout_fraction}};
}

void from_json(const json& j, UserBiasConfig& c) {
  reject_unknown(j, {"dim", "epochs", "lr", "weight_decay", "neg_ratio", "tau", "holdout_fraction"}, "bias config");
  read_field(j, "dim", c.dim);
  read_field(j, "epochs", c.epochs);
  read_field(j, "lr", c.lr);
  read_field(j, "weight_decay", c.weight_decay);
  read_field(j, "neg_ratio", c.neg_ratio);
  read_field(j, "tau", c.tau);
  read_field(j, "holdout_fraction", c.holdout_fraction);
}

void to_json(json& j, const RunConfig& c) {
  j = json{{"seed", c.seed},
           {"model", c.model},
           {"lr", c.lr},
           {"weight_decay", c.weight_decay},
           {"lambda", c.lambda},
           {"ce_weight", c.ce_weight},
           {"epochs", c.epochs},
           {"batch_size", c.batch_size},
           {"patience", c.patience},
           {"dropout", c.dropout},
           {"eval_batch", c.eval_batch},
           {"hidden", c.hidden},
           {"meta_hidden", c.meta_hidden},
           {"user_bias", c.user_bias},
           {"bias", c.bias},
           {"gnn_layers", c.gnn_layers},
           {"hops", c.hops},
           {"alpha", c.alpha},
           {"gat_heads", c.gat_heads},
           {"khop", c.khop},
           {"sample_ratio", c.sample_ratio},
           {"hop_aggregator", c.hop_aggregator},
           {"genre_pooling", c.genre_pooling},
           {"genreformer", c.genreformer},
           {"trm_heads", c.trm_heads},
           {"trm_layers", c.trm_layers},
           {"mixer", c.mixer},
           {"gmoe_aggregator", c.gmoe_aggregator},
           {"gmoe_layers", c.gmoe_layers},
           {"gmoe_hidden", c.gmoe_hidden},
           {"experts", c.experts},
           {"perturb", to_string(c.perturb)},
           {"perturb_level", c.perturb_level}};
}

void from_json(const json& j, RunConfig& c) {
  static const std::set<std::string> known = {
      "seed",       "model",        "lr",           "weight_decay",   "lambda",        "ce_weight",
      "epochs",     "batch_size",   "patience",     "dropout",        "eval_batch",    "hidden",
      "meta_hidden", "user_bias",   "bias",         "gnn_layers",     "hops",          "alpha",
      "gat_heads",  "khop",         "sample_ratio", "hop_aggregator", "genre_pooling", "genreformer",
      "trm_heads",  "trm_layers",   "mixer",        "gmoe_aggregator", "gmoe_layers",  "gmoe_hidden",
      "experts",    "perturb",      "perturb_level"};
  reject_unknown(j, known, "run config");
  c = RunConfig{};
  read_field(j, "seed", c.seed);
  read_field(j, "model", c.model);
  read_field(j, "lr", c.lr);
  read_field(j, "weight_decay", c.weight_decay);
  read_field(j, "lambda", c.lambda);
  read_field(j, "ce_weight", c.ce_weight);
  read_field(j, "epochs", c.epochs);
  read_field(j, "batch_size", c.batch_size);
  read_field(j, "patience", c.patience);
  read_field(j, "dropout", c.dropout);
  read_field(j, "eval_batch", c.eval_batch);
  read_field(j, "hidden", c.hidden);
  read_field(j, "meta_hidden", c.meta_hidden);
  read_field(j, "user_bias", c.user_bias);
  if (j.contains("bias")) c.bias = j.at("bias").get<UserBiasConfig>();
  read_field(j, "gnn_layers", c.gnn_layers);
  read_field(j, "hops", c.hops);
  read_field(j, "alpha", c.alpha);
  read_field(j, "gat_heads", c.gat_heads);
  read_field(j, "khop", c.khop);
  read_field(j, "sample_ratio", c.sample_ratio);
  read_field(j, "hop_aggregator", c.hop_aggregator);
  read_field(j, "genre_pooling", c.genre_pooling);
  read_field(j, "genreformer", c.genreformer);
  read_field(j, "trm_heads", c.trm_heads);
  read_field(j, "trm_layers", c.trm_layers);
  read_field(j, "mixer", c.mixer);
  read_field(j, "gmoe_aggregator", c.gmoe_aggregator);
  read_field(j, "gmoe_layers", c.gmoe_layers);
  read_field(j, "gmoe_hidden", c.gmoe_hidden);
  read_field(j, "experts", c.experts);
  if (j.contains("perturb")) c.perturb = parse_perturb_kind(j.at("perturb").get<std::string>());
  read_field(j, "perturb_level", c.perturb_level);
  c.validate();
}

const std::vector<std::string>& ablation_arms() {
  static const std::vector<std::string> arms = {"full", "w/o-ub", "approx-khop", "normal-gat", "mlp", "moe",
                                                "soft-moe", "w/o-genreformer", "sum-pooling", "max-pooling"};
  return arms;
}

RunConfig apply_arm(RunConfig c, const std::string& arm) {
  if (arm == "full") {
  } else if (arm == "w/o-ub") {
    c.user_bias = false;
  } else if (arm == "approx-khop") {
    c.khop = "approx";
  } else if (arm == "normal-gat") {
    c.hops = 1;
    c.alpha = 0.0;
  } else if (arm == "mlp") {
    c.mixer = "mlp";
  } else if (arm == "moe") {
    c.mixer = "moe";
  } else if (arm == "soft-moe") {
    c.mixer = "soft-moe";
  } else if (arm == "w/o-genreformer") {
    c.genreformer = false;
  } else if (arm == "sum-pooling") {
    c.genre_pooling = "sum";
  } else if (arm == "max-pooling") {
    c.genre_pooling = "max";
  } else {
    throw ConfigError("unknown ablation arm '" + arm + "'");
  }
  return c;
}

}  // namespace gusd
