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
#include "gusd/train.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "gusd/errors.hpp"
#include "gusd/optim.hpp"

namespace gusd {

namespace {

constexpr std::uint64_t kInitStream = 0x1417;
constexpr std::uint64_t kOrderStream = 0xBA7C;
constexpr std::uint64_t kDropoutStream = 0xD20F;
constexpr std::uint64_t kReduceStream = 0x4ED0;
constexpr std::uint64_t kEdgeDropStream = 0xED6E;
constexpr std::uint64_t kZeroStream = 0x2E40;
constexpr std::uint64_t kSampleStream = 0x5A3B;

std::vector<int> labels_of(const DatasetBundle& b, const std::vector<Index>& reviews) {
  std::vector<int> y;
  y.reserve(reviews.size());
  for (Index r : reviews) {
    const int v = b.labels.at(static_cast<std::size_t>(r));
    if (v != 0 && v != 1) throw IntegrityError("label of review " + std::to_string(r) + " is not 0 or 1");
    y.push_back(v);
  }
  return y;
}

std::vector<Index> to_index(const std::vector<std::int64_t>& v) { return {v.begin(), v.end()}; }

Metrics evaluate(ReviewClassifier<float>& model, const GraphTensors<float>& x, const GraphInputs& in,
                 const DatasetBundle& b, const std::vector<Index>& reviews, Index chunk) {
  const auto scores = predict(model, x, in, reviews, chunk);
  const auto y = labels_of(b, reviews);
  return compute_metrics(scores, y);
}

std::string grad_norm_report(const ParameterSet<float>& ps) {
  std::ostringstream out;
  for (const auto& [name, t] : ps.items()) {
    out << "\n  " << name << ": ";
    if (t.has_grad()) {
      out << t.grad().norm();
    } else {
      out << "(none)";
    }
  }
  return out.str();
}

}  // namespace

GraphInputs make_inputs(const DatasetBundle& bundle, const RunConfig& cfg, const Matrix<float>& user_bias,
                        const EdgePairs* edges) {
  const HeteroGraph& g = bundle.graph;
  GraphInputs in;
  in.n_users = g.num_users();
  in.n_reviews = g.num_reviews();
  in.n_movies = g.num_movies();
  in.n_genres = g.num_genres();
  in.text = bundle.node_embeddings();
  in.meta = standardize_meta(g, bundle.meta, kMetaPad);
  in.user_bias = user_bias;
  const EdgePairs all = edges != nullptr ? *edges : g.edge_pairs();
  in.hops = cfg.khop == "approx" ? khop_approx(g.num_nodes(), all, cfg.hops) : khop_exact(g.num_nodes(), all, cfg.hops);
  if (cfg.sample_ratio < 1.0) in.hops = sample_khop(in.hops, cfg.sample_ratio, keyed_rng(cfg.seed, kSampleStream).below(~0ULL));
  in.genres = genre_index(g);
  in.review_user.resize(static_cast<std::size_t>(in.n_reviews));
  in.review_movie.resize(static_cast<std::size_t>(in.n_reviews));
  in.review_genres.resize(static_cast<std::size_t>(in.n_reviews));
  for (std::int64_t r = 0; r < in.n_reviews; ++r) {
    const auto& rec = g.review(r);
    in.review_user[static_cast<std::size_t>(r)] = rec.user;
    in.review_movie[static_cast<std::size_t>(r)] = rec.movie;
    in.review_genres[static_cast<std::size_t>(r)] = g.genres(g.review_node(r));
    in.max_slots = std::max<Index>(in.max_slots, static_cast<Index>(in.review_genres[static_cast<std::size_t>(r)].size()));
  }
  return in;
}

UserBiasResult pretrain_bias(const DatasetBundle& bundle, const RunConfig& cfg) {
  UserBiasConfig u = cfg.bias;
  u.seed = cfg.seed;
  return pretrain_user_bias(build_event_stream(bundle.graph), bundle.review_embeddings, u);
}

std::vector<Index> training_reviews(const DatasetBundle& bundle, const RunConfig& cfg) {
  auto ids = to_index(bundle.reviews_in(Split::Train));
  if (cfg.perturb != PerturbKind::ReduceLabels || cfg.perturb_level == 0.0) return ids;
  Rng rng = keyed_rng(cfg.seed, kReduceStream);
  rng.shuffle(ids);
  const auto keep = static_cast<std::size_t>(std::llround((1.0 - cfg.perturb_level) * static_cast<double>(ids.size())));
  ids.resize(keep);
  std::sort(ids.begin(), ids.end());
  return ids;
}

EdgePairs drop_edges(const HeteroGraph& graph, double level, std::uint64_t seed) {
  EdgePairs edges = graph.edge_pairs();
  if (level <= 0.0) return edges;
  std::vector<std::size_t> order(edges.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = keyed_rng(seed, kEdgeDropStream);
  rng.shuffle(order);
  const auto n_drop = static_cast<std::size_t>(std::llround(level * static_cast<double>(edges.size())));
  std::vector<bool> dropped(edges.size(), false);
  for (std::size_t k = 0; k < n_drop; ++k) dropped[order[k]] = true;
  EdgePairs kept;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (!dropped[e]) kept.push_back(edges[e]);
  }
  return kept;
}

void zero_features(GraphInputs& in, double level, std::uint64_t seed) {
  if (level <= 0.0) return;
  std::vector<Index> nodes(static_cast<std::size_t>(in.num_nodes()));
  std::iota(nodes.begin(), nodes.end(), 0);
  Rng rng = keyed_rng(seed, kZeroStream);
  rng.shuffle(nodes);
  const auto n_zero = static_cast<std::size_t>(std::llround(level * static_cast<double>(nodes.size())));
  for (std::size_t k = 0; k < n_zero; ++k) {
    in.text.row(nodes[k]).setZero();
    in.meta.row(nodes[k]).setZero();
  }
}

namespace {

// Trains once under `cfg` and scores the test split at each level of a
// test-time perturbation (the levels are ignored for other kinds).
std::vector<RunResult> train_core(const DatasetBundle& bundle, const RunConfig& cfg, const std::vector<double>& levels,
                                  const Matrix<float>* user_bias) {
  const bool test_only = cfg.perturb == PerturbKind::DropEdges || cfg.perturb == PerturbKind::ZeroFeatures;
  cfg.validate();
  std::vector<RunResult> out;
  RunResult result;
  result.config = cfg;

  Matrix<float> ub;
  if (cfg.model == "gusd" && cfg.user_bias) {
    if (user_bias != nullptr) {
      ub = *user_bias;
    } else {
      auto pre = pretrain_bias(bundle, cfg);
      ub = std::move(pre.user_bias);
      result.bias_link_auc = pre.holdout_auc;
    }
  }
  const GraphInputs clean = make_inputs(bundle, cfg, ub);
  const auto x_clean = GraphTensors<float>::from(clean);

  Rng init = keyed_rng(cfg.seed, kInitStream);
  auto model = make_classifier<float>(cfg, clean, init);
  auto& ps = model->parameters();
  AdamW<float> opt(ps.tensors(), AdamWConfig{.lr = cfg.lr, .weight_decay = cfg.weight_decay});
  Rng order = keyed_rng(cfg.seed, kOrderStream);
  Rng drop = keyed_rng(cfg.seed, kDropoutStream);

  auto train_ids = training_reviews(bundle, cfg);
  if (train_ids.empty()) throw ConfigError("no training reviews left after perturbation");
  result.train_size = static_cast<std::int64_t>(train_ids.size());
  const auto val_ids = to_index(bundle.reviews_in(Split::Val));
  const auto test_ids = to_index(bundle.reviews_in(Split::Test));

  double best_f1 = -1.0;
  int bad_epochs = 0;
  std::vector<Matrix<float>> best = ps.snapshot();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    order.shuffle(train_ids);
    double total = 0.0;
    for (std::size_t begin = 0; begin < train_ids.size(); begin += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(train_ids.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      const std::vector<Index> batch(train_ids.begin() + static_cast<std::ptrdiff_t>(begin),
                                     train_ids.begin() + static_cast<std::ptrdiff_t>(end));
      opt.zero_grad();
      const Mode mode{true, &drop};
      model->encode(x_clean, clean, mode);
      const Tensor<float> loss =
          training_loss(model->logits(x_clean, clean, batch, mode), labels_of(bundle, batch), cfg.ce_weight, cfg.lambda, &ps);
      const double value = loss.item();
      backward(loss);
      if (!std::isfinite(value)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + "; gradient norms:" + grad_norm_report(ps));
      }
      opt.step();
      total += value;
    }
    const double val_f1 = evaluate(*model, x_clean, clean, bundle, val_ids, cfg.eval_batch).f1;
    result.log.push_back({epoch, total / static_cast<double>(train_ids.size()), val_f1});
    result.epochs_run = epoch;
    if (val_f1 > best_f1) {
      best_f1 = val_f1;
      result.best_epoch = epoch;
      best = ps.snapshot();
      bad_epochs = 0;
    } else if (++bad_epochs >= cfg.patience) {
      break;
    }
  }
  ps.restore(best);
  result.checkpoint = to_named(ps);

  result.train = evaluate(*model, x_clean, clean, bundle, to_index(bundle.reviews_in(Split::Train)), cfg.eval_batch);
  result.val = evaluate(*model, x_clean, clean, bundle, val_ids, cfg.eval_batch);
  for (double level : levels) {
    RunResult r = result;
    r.config.perturb_level = level;
    if (test_only && level > 0.0) {
      GraphInputs perturbed;
      if (cfg.perturb == PerturbKind::DropEdges) {
        const EdgePairs kept = drop_edges(bundle.graph, level, cfg.seed);
        perturbed = make_inputs(bundle, cfg, ub, &kept);
      } else {
        perturbed = clean;
        zero_features(perturbed, level, cfg.seed);
      }
      const auto x_p = GraphTensors<float>::from(perturbed);
      r.test = evaluate(*model, x_p, perturbed, bundle, test_ids, cfg.eval_batch);
    } else {
      r.test = evaluate(*model, x_clean, clean, bundle, test_ids, cfg.eval_batch);
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

RunResult train_run(const DatasetBundle& bundle, const RunConfig& cfg, const Matrix<float>* user_bias) {
  return train_core(bundle, cfg, {cfg.perturb_level}, user_bias).front();
}

std::vector<RunResult> train_levels(const DatasetBundle& bundle, const RunConfig& cfg, const std::vector<double>& levels,
                                    const Matrix<float>* user_bias) {
  if (levels.empty()) throw ConfigError("at least one perturbation level is required");
  for (double level : levels) {
    RunConfig c = cfg;
    c.perturb_level = level;
    c.validate();
  }
  if (cfg.perturb == PerturbKind::DropEdges || cfg.perturb == PerturbKind::ZeroFeatures) {
    return train_core(bundle, cfg, levels, user_bias);
  }
  std::vector<RunResult> out;
  for (double level : levels) {
    RunConfig c = cfg;
    c.perturb_level = level;
    out.push_back(train_run(bundle, c, user_bias));
  }
  return out;
}

Summary SweepResult::summary(const std::string& split, const std::string& metric) const {
  std::vector<double> v;
  for (const auto& r : runs) {
    const Metrics& m = split == "train" ? r.train : split == "val" ? r.val : r.test;
    if (metric == "f1") v.push_back(m.f1);
    if (metric == "acc") v.push_back(m.acc);
    if (metric == "auc" && m.auc) v.push_back(*m.auc);
  }
  return summarize(v);
}

nlohmann::json SweepResult::to_json() const {
  nlohmann::json j;
  j["runs"] = nlohmann::json::array();
  for (const auto& r : runs) {
    nlohmann::json run{{"seed", r.config.seed},     {"best_epoch", r.best_epoch}, {"epochs_run", r.epochs_run},
                       {"train_size", r.train_size}, {"train", r.train},          {"val", r.val},
                       {"test", r.test}};
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& e : r.log) curve.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_f1", e.val_f1}});
    run["curve"] = curve;
    if (r.bias_link_auc) run["bias_link_auc"] = *r.bias_link_auc;
    j["runs"].push_back(run);
  }
  for (const char* split : {"train", "val", "test"}) {
    for (const char* metric : {"f1", "auc", "acc"}) j["summary"][split][metric] = summary(split, metric);
  }
  return j;
}

SweepResult run_seeds(const DatasetBundle& bundle, const RunConfig& cfg, int n_seeds) {
  if (n_seeds < 1) throw ConfigError("seeds must be >= 1");
  SweepResult out;
  for (int i = 0; i < n_seeds; ++i) {
    RunConfig c = cfg;
    c.seed = cfg.seed + static_cast<std::uint64_t>(i);
    out.runs.push_back(train_run(bundle, c));
  }
  return out;
}

std::vector<SweepResult> run_seeds_levels(const DatasetBundle& bundle, const RunConfig& cfg, int n_seeds,
                                          const std::vector<double>& levels) {
  if (n_seeds < 1) throw ConfigError("seeds must be >= 1");
  std::vector<SweepResult> out(levels.size());
  for (int i = 0; i < n_seeds; ++i) {
    RunConfig c = cfg;
    c.seed = cfg.seed + static_cast<std::uint64_t>(i);
    auto runs = train_levels(bundle, c, levels);
    for (std::size_t l = 0; l < levels.size(); ++l) out[l].runs.push_back(std::move(runs[l]));
  }
  return out;
}

Metrics all_negative_baseline(const DatasetBundle& bundle) {
  const auto ids = to_index(bundle.reviews_in(Split::Test));
  const std::vector<double> scores(ids.size(), 0.0);
  return compute_metrics(scores, labels_of(bundle, ids));
}

}  // namespace gusd
