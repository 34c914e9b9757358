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
#include "gusd/encoders.hpp"

#include <algorithm>
#include <numeric>

#include "gusd/optim.hpp"

namespace gusd {

Matrix<float> pad_meta(const std::vector<std::vector<float>>& rows, Index pad_len) {
  Matrix<float> out = Matrix<float>::Zero(static_cast<Index>(rows.size()), pad_len);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (static_cast<Index>(r.size()) > pad_len) {
      throw ConfigError("meta row " + std::to_string(i) + " has length " + std::to_string(r.size()) +
                        " > pad_len " + std::to_string(pad_len));
    }
    for (std::size_t k = 0; k < r.size(); ++k) out(static_cast<Index>(i), static_cast<Index>(k)) = r[k];
  }
  return out;
}

Matrix<float> standardize_meta(const HeteroGraph& graph, const std::vector<std::vector<float>>& meta, Index pad_len) {
  if (static_cast<std::int64_t>(meta.size()) != graph.num_nodes()) throw ShapeError("meta: one row per node");
  std::vector<std::vector<float>> rows = meta;
  for (NodeKind kind : {NodeKind::User, NodeKind::Review, NodeKind::Movie}) {
    std::vector<std::size_t> ids;
    for (std::int64_t v = 0; v < graph.num_nodes(); ++v) {
      if (graph.kind(v) == kind) ids.push_back(static_cast<std::size_t>(v));
    }
    if (ids.empty()) continue;
    std::size_t width = 0;
    for (auto v : ids) width = std::max(width, rows[v].size());
    for (std::size_t k = 0; k < width; ++k) {
      double sum = 0, sq = 0, n = 0;
      for (auto v : ids) {
        if (k < rows[v].size()) {
          sum += rows[v][k];
          sq += static_cast<double>(rows[v][k]) * rows[v][k];
          n += 1;
        }
      }
      const double mean = sum / n;
      const double var = std::max(0.0, sq / n - mean * mean);
      const double sd = var > 1e-12 ? std::sqrt(var) : 1.0;
      for (auto v : ids) {
        if (k < rows[v].size()) rows[v][k] = static_cast<float>((rows[v][k] - mean) / sd);
      }
    }
  }
  return pad_meta(rows, pad_len);
}

EventStream build_event_stream(const HeteroGraph& graph) {
  EventStream s;
  s.n_users = graph.num_users();
  s.n_reviews = graph.num_reviews();
  s.n_movies = graph.num_movies();
  s.events.reserve(static_cast<std::size_t>(graph.num_reviews()));
  for (std::int64_t r = 0; r < graph.num_reviews(); ++r) {
    const auto& rec = graph.review(r);
    if (rec.timestamp < 0) throw IntegrityError("review " + std::to_string(r) + " has no timestamp");
    s.events.push_back({rec.user, r, rec.movie, rec.timestamp});
  }
  std::sort(s.events.begin(), s.events.end(),
            [](const Event& a, const Event& b) { return a.t != b.t ? a.t < b.t : a.review < b.review; });
  return s;
}

double median_user_gap(const EventStream& stream) {
  std::vector<std::int64_t> last(static_cast<std::size_t>(stream.n_users), -1);
  std::vector<double> gaps;
  for (const auto& e : stream.events) {
    auto& l = last[static_cast<std::size_t>(e.user)];
    if (l >= 0) gaps.push_back(static_cast<double>(e.t - l));
    l = e.t;
  }
  if (gaps.empty()) return 0.0;
  const auto mid = gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2);
  std::nth_element(gaps.begin(), mid, gaps.end());
  return *mid;
}

UserBiasResult pretrain_user_bias(const EventStream& stream, const Matrix<float>& review_text,
                                  const UserBiasConfig& config) {
  if (stream.events.empty()) throw ContractError("pretrain_user_bias: empty event stream");
  if (review_text.rows() != stream.n_reviews) throw ShapeError("pretrain_user_bias: one text row per review");
  if (config.neg_ratio < 1) throw ConfigError("pretrain_user_bias: neg_ratio must be >= 1");
  UserBiasResult result;
  result.tau = config.tau > 0 ? config.tau : 10.0 * median_user_gap(stream);
  if (result.tau <= 0) result.tau = 1.0;

  Rng rng(config.seed);
  ParameterSet<float> ps;
  UserBiasModel<float> model(ps, stream.n_users, stream.n_movies, review_text.cols(), config.dim, rng);
  AdamW<float> opt(ps.tensors(), {.lr = config.lr, .weight_decay = config.weight_decay});
  Rng neg_rng = rng.fork(0x6e6567);

  const auto n = static_cast<std::int64_t>(stream.size());
  const auto n_hold = static_cast<std::int64_t>(std::floor(config.holdout_fraction * static_cast<double>(n)));
  const auto n_train = n - n_hold;
  auto queries = [&](std::int64_t begin, std::int64_t end) {
    std::vector<std::int64_t> users, times;
    std::vector<Index> rows;
    for (auto e = begin; e < end; ++e) {
      users.push_back(stream.events[static_cast<std::size_t>(e)].user);
      times.push_back(stream.events[static_cast<std::size_t>(e)].t);
      rows.push_back(static_cast<Index>(e));
    }
    return std::make_tuple(UserBiasModel<float>::history(stream, users, times, result.tau), rows);
  };
  const auto [train_hist, train_rows] = queries(0, n_train);
  const auto [hold_hist, hold_rows] = queries(n_train, n);

  auto negatives = [&](std::size_t count, std::int64_t pool) {
    std::vector<Index> out(count);
    for (auto& v : out) v = static_cast<Index>(neg_rng.below(pool));
    return out;
  };
  auto repeat_rows = [&](std::size_t rows, int times) {
    std::vector<Index> out;
    for (int k = 0; k < times; ++k) {
      for (std::size_t i = 0; i < rows; ++i) out.push_back(static_cast<Index>(i));
    }
    return out;
  };

  if (n_train > 0) {
    const auto reps = repeat_rows(train_rows.size(), config.neg_ratio);
    std::vector<float> targets(train_rows.size() * static_cast<std::size_t>(1 + config.neg_ratio), 0.0f);
    std::fill(targets.begin(), targets.begin() + static_cast<std::ptrdiff_t>(train_rows.size()), 1.0f);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      const auto items = model.items(stream, review_text);
      const auto st = model.states(train_hist, items);
      const auto pos = model.score(st, gather_rows(items, train_rows));
      const auto neg = model.score(gather_rows(st, reps), gather_rows(items, negatives(reps.size(), n_train)));
      const auto loss = bce_with_logits(concat<float>({pos, neg}, 0), std::span<const float>(targets));
      ps.zero_grad();
      backward(loss);
      const double lv = loss.item();
      if (!std::isfinite(lv)) throw NumericError("pretrain_user_bias: non-finite loss at epoch " + std::to_string(epoch));
      result.losses.push_back(lv);
      opt.step();
    }
  }

  NoGradGuard guard;
  const auto items = model.items(stream, review_text);
  if (n_hold > 0) {
    const auto st = model.states(hold_hist, items);
    const auto pos = model.score(st, gather_rows(items, hold_rows)).value();
    const auto neg = model.score(st, gather_rows(items, negatives(hold_rows.size(), n))).value();
    std::vector<double> scores;
    std::vector<int> y;
    for (Index i = 0; i < pos.rows(); ++i) {
      scores.push_back(pos(i, 0));
      y.push_back(1);
      scores.push_back(neg(i, 0));
      y.push_back(0);
    }
    result.holdout_auc = roc_auc(scores, y);
  }
  std::vector<std::int64_t> users(static_cast<std::size_t>(stream.n_users)), times(users.size(), stream.events.back().t + 1);
  std::iota(users.begin(), users.end(), 0);
  const auto final_hist = UserBiasModel<float>::history(stream, users, times, result.tau);
  result.user_bias = model.states(final_hist, items).value();
  return result;
}

std::vector<int> majority_spoiler_users(const HeteroGraph& graph, const std::vector<int>& labels) {
  std::vector<double> pos(static_cast<std::size_t>(graph.num_users()), 0), tot(pos.size(), 0);
  for (std::int64_t r = 0; r < graph.num_reviews(); ++r) {
    const auto u = static_cast<std::size_t>(graph.review(r).user);
    pos[u] += labels.at(static_cast<std::size_t>(r));
    tot[u] += 1;
  }
  std::vector<int> out(pos.size());
  for (std::size_t u = 0; u < pos.size(); ++u) out[u] = tot[u] > 0 && pos[u] > 0.5 * tot[u] ? 1 : 0;
  return out;
}

ProbeResult probe_features(const Matrix<float>& features, const std::vector<int>& labels, const ProbeConfig& config) {
  ProbeResult result;
  if (static_cast<Index>(labels.size()) != features.rows()) throw ShapeError("probe: one label per feature row");
  const auto n_pos = std::count(labels.begin(), labels.end(), 1);
  if (n_pos == 0 || n_pos == static_cast<std::ptrdiff_t>(labels.size())) {
    result.skipped = true;
    result.notice = "probe skipped: labels contain a single class";
    return result;
  }
  Rng rng(config.seed);
  std::vector<Index> train, test;
  for (int cls = 0; cls <= 1; ++cls) {
    std::vector<Index> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) members.push_back(static_cast<Index>(i));
    }
    rng.shuffle(members);
    const auto n_train = static_cast<std::size_t>(std::llround(config.train_fraction * static_cast<double>(members.size())));
    train.insert(train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    test.insert(test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  if (train.empty() || test.empty()) {
    result.skipped = true;
    result.notice = "probe skipped: too few rows for a train/test split";
    return result;
  }
  // z-score with training statistics.
  Matrix<double> x = features.cast<double>();
  for (Index k = 0; k < x.cols(); ++k) {
    double mean = 0, sq = 0;
    for (auto i : train) mean += x(i, k);
    mean /= static_cast<double>(train.size());
    for (auto i : train) sq += (x(i, k) - mean) * (x(i, k) - mean);
    const double sd = std::sqrt(sq / static_cast<double>(train.size()));
    x.col(k).array() -= mean;
    if (sd > 1e-12) x.col(k) /= sd;
  }
  auto rows_of = [&](const std::vector<Index>& ids) {
    Matrix<float> m(static_cast<Index>(ids.size()), x.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) m.row(static_cast<Index>(i)) = x.row(ids[i]).cast<float>();
    return Tensor<float>(std::move(m));
  };
  const auto x_train = rows_of(train), x_test = rows_of(test);
  std::vector<float> y_train;
  for (auto i : train) y_train.push_back(static_cast<float>(labels[static_cast<std::size_t>(i)]));

  ParameterSet<float> ps;
  Mlp<float> mlp(ps, "probe", x.cols(), config.hidden, 1, rng);
  AdamW<float> opt(ps.tensors(), {.lr = config.lr, .weight_decay = config.weight_decay});
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    ps.zero_grad();
    backward(bce_with_logits(mlp(x_train), std::span<const float>(y_train)));
    opt.step();
  }
  NoGradGuard guard;
  const auto logits = mlp(x_test).value();
  std::vector<double> scores;
  std::vector<int> y_test;
  for (std::size_t i = 0; i < test.size(); ++i) {
    scores.push_back(1.0 / (1.0 + std::exp(-static_cast<double>(logits(static_cast<Index>(i), 0)))));
    y_test.push_back(labels[static_cast<std::size_t>(test[i])]);
  }
  result.metrics = compute_metrics(scores, y_test);
  return result;
}

}  // namespace gusd
