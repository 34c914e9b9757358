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
#include <limits>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gusd/graph.hpp"
#include "gusd/metrics.hpp"
#include "gusd/nn.hpp"

namespace gusd {

// ---------------------------------------------------------------------------
// Metadata

/// Zero-pads each row to `pad_len`. A longer row is a ConfigError.
Matrix<float> pad_meta(const std::vector<std::vector<float>>& rows, Index pad_len);

/// Per node kind, per column z-scoring of the raw metadata (columns with
/// zero spread are only centred), then zero-padding to `pad_len`.
Matrix<float> standardize_meta(const HeteroGraph& graph, const std::vector<std::vector<float>>& meta, Index pad_len);

/// Two-layer MLP over padded metadata rows; produces N_m.
template <typename T>
class MetaEncoder {
 public:
  MetaEncoder() = default;
  MetaEncoder(ParameterSet<T>& ps, const std::string& name, Index pad_len, Index hidden, Index out, Rng& rng,
              double dropout = 0.0, bool bias = true)
      : pad_len_(pad_len), mlp_(ps, name, pad_len, hidden, out, rng, dropout, bias) {}

  Tensor<T> operator()(const Tensor<T>& padded, const Mode& mode = {}) const {
    if (padded.cols() != pad_len_) throw ConfigError("meta encoder: rows must be padded to " + std::to_string(pad_len_));
    return mlp_(padded, mode);
  }

  Tensor<T> encode(const std::vector<std::vector<float>>& rows, const Mode& mode = {}) const {
    return (*this)(Tensor<T>(pad_meta(rows, pad_len_).template cast<T>()), mode);
  }

  Index pad_len() const { return pad_len_; }
  const Mlp<T>& mlp() const { return mlp_; }

 private:
  Index pad_len_ = 0;
  Mlp<T> mlp_;
};

// ---------------------------------------------------------------------------
// Event stream

/// One interaction: `user` wrote `review` about `movie` at time `t`
/// (user/review/movie are per-kind indices).
struct Event {
  std::int64_t user = 0;
  std::int64_t review = 0;
  std::int64_t movie = 0;
  std::int64_t t = 0;

  bool operator==(const Event&) const = default;
};

/// Reviews as a time-ordered event stream. Edge features are fixed zero
/// vectors of width `edge_dim`.
struct EventStream {
  std::vector<Event> events;
  std::int64_t n_users = 0;
  std::int64_t n_reviews = 0;
  std::int64_t n_movies = 0;
  Index edge_dim = 1;

  std::size_t size() const { return events.size(); }
  Matrix<float> edge_features() const { return Matrix<float>::Zero(static_cast<Index>(events.size()), edge_dim); }
};

/// One event per review sorted by (t, review id). A negative timestamp is
/// treated as missing and raises IntegrityError.
EventStream build_event_stream(const HeteroGraph& graph);

/// Median gap between consecutive events of the same user (0 when no user
/// has two events).
double median_user_gap(const EventStream& stream);

// ---------------------------------------------------------------------------
// User bias encoder

struct UserBiasConfig {
  Index dim = 32;
  int epochs = 60;
  double lr = 5e-3;
  double weight_decay = 1e-5;
  int neg_ratio = 1;
  /// Decay constant in seconds; <= 0 selects median per-user gap x 10.
  double tau = 0.0;
  double holdout_fraction = 0.1;
  std::uint64_t seed = 1;

  bool operator==(const UserBiasConfig&) const = default;
};

/// Time-decayed history encoder scored by a bilinear link form.
///
/// Item representation h_e = W_item x_review(e) + E_movie[movie(e)]. A
/// user's state at time t is proj(sum_e' w_e' h_e' / sum_e' w_e') over the
/// user's events e' with t' < t and w = exp(-(t - t') / tau), or
/// proj(E_user[u]) when the user has no earlier events.
template <typename T>
class UserBiasModel {
 public:
  UserBiasModel(ParameterSet<T>& ps, std::int64_t n_users, std::int64_t n_movies, Index text_dim, Index dim, Rng& rng)
      : dim_(dim) {
    item_ = Linear<T>(ps, "ub.item", text_dim, dim, rng);
    movie_table_ = ps.add("ub.movie_table", random_table(n_movies, dim, rng));
    user_table_ = ps.add("ub.user_table", random_table(n_users, dim, rng));
    proj_ = Mlp<T>(ps, "ub.proj", dim, dim, dim, rng);
    bilinear_ = ps.add("ub.bilinear", xavier_uniform<T>(dim, dim, rng));
  }

  /// h_e for every event of the stream.
  Tensor<T> items(const EventStream& s, const Matrix<float>& review_text) const {
    Matrix<T> x(static_cast<Index>(s.size()), review_text.cols());
    std::vector<Index> movies(s.size());
    for (std::size_t e = 0; e < s.size(); ++e) {
      x.row(static_cast<Index>(e)) = review_text.row(s.events[e].review).template cast<T>();
      movies[e] = s.events[e].movie;
    }
    return add(item_(Tensor<T>(std::move(x))), gather_rows(movie_table_, std::move(movies)));
  }

  /// Normalized decay weights over each query's earlier events of the same
  /// user. Query q is (user[q], t[q]). Also returns which queries have no
  /// history.
  struct History {
    std::shared_ptr<const SparseMatrix<T>> weights;   // queries x events
    std::shared_ptr<const SparseMatrix<T>> fallback;  // queries x users, one 1 per empty history
  };
  static History history(const EventStream& s, const std::vector<std::int64_t>& users,
                         const std::vector<std::int64_t>& times, double tau) {
    std::vector<std::vector<std::size_t>> by_user(static_cast<std::size_t>(s.n_users));
    for (std::size_t e = 0; e < s.size(); ++e) by_user[static_cast<std::size_t>(s.events[e].user)].push_back(e);
    std::vector<Eigen::Triplet<T>> w, f;
    for (std::size_t q = 0; q < users.size(); ++q) {
      const auto& evs = by_user[static_cast<std::size_t>(users[q])];
      double total = 0.0;
      const std::size_t first = w.size();
      for (auto e : evs) {
        const auto te = s.events[e].t;
        if (te >= times[q]) break;  // per-user events are time ordered
        const double dt = static_cast<double>(times[q] - te);
        const double we = std::isinf(tau) ? 1.0 : std::exp(-dt / tau);
        w.emplace_back(static_cast<Index>(q), static_cast<Index>(e), static_cast<T>(we));
        total += we;
      }
      if (w.size() == first) {
        f.emplace_back(static_cast<Index>(q), static_cast<Index>(users[q]), T(1));
      } else if (total > 0.0) {
        for (std::size_t k = first; k < w.size(); ++k) w[k] = {w[k].row(), w[k].col(), static_cast<T>(w[k].value() / total)};
      } else {
        // Every weight underflowed: fall back to the most recent event.
        const auto last = w.back();
        w.resize(first);
        w.emplace_back(last.row(), last.col(), T(1));
      }
    }
    auto W = std::make_shared<SparseMatrix<T>>(static_cast<Index>(users.size()), static_cast<Index>(s.size()));
    W->setFromTriplets(w.begin(), w.end());
    auto F = std::make_shared<SparseMatrix<T>>(static_cast<Index>(users.size()), s.n_users);
    F->setFromTriplets(f.begin(), f.end());
    return {W, F};
  }

  Tensor<T> states(const History& h, const Tensor<T>& items) const {
    return proj_(add(spmm(h.weights, items), spmm(h.fallback, user_table_)));
  }

  /// Bilinear link logits between user states and item rows, n x 1.
  Tensor<T> score(const Tensor<T>& states, const Tensor<T>& items) const {
    return rowwise_dot(matmul(states, bilinear_), items);
  }

  Index dim() const { return dim_; }
  const Tensor<T>& user_table() const { return user_table_; }
  const Mlp<T>& proj() const { return proj_; }

 private:
  static Matrix<T> random_table(Index rows, Index cols, Rng& rng) {
    Matrix<T> m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(0.1 * rng.normal());
    return m;
  }

  Index dim_;
  Linear<T> item_;
  Tensor<T> movie_table_, user_table_;
  Mlp<T> proj_;
  Tensor<T> bilinear_;
};

struct UserBiasResult {
  Matrix<float> user_bias;  // n_users x dim
  double tau = 0.0;
  std::optional<double> holdout_auc;  // link AUC on the last time slice
  std::vector<double> losses;          // per epoch
};

/// Link-prediction pretraining over the event stream. Reads only the stream
/// and review text embeddings; spoiler labels are not an input. Events in
/// the last `holdout_fraction` of the stream are excluded from the loss and
/// scored for link AUC; U_b is taken from states after the final event.
UserBiasResult pretrain_user_bias(const EventStream& stream, const Matrix<float>& review_text,
                                  const UserBiasConfig& config);

// ---------------------------------------------------------------------------
// Probe

/// 1 for users with more than half of their reviews labelled spoilers.
std::vector<int> majority_spoiler_users(const HeteroGraph& graph, const std::vector<int>& labels);

struct ProbeConfig {
  Index hidden = 32;
  int epochs = 300;
  double lr = 1e-2;
  double weight_decay = 1e-4;
  double train_fraction = 0.7;
  std::uint64_t seed = 1;
};

struct ProbeResult {
  bool skipped = false;
  std::string notice;
  Metrics metrics;  // on held-out users
};

/// Fresh two-layer MLP probe on z-scored `features` predicting `labels`,
/// trained on a label-stratified subset of rows and evaluated on the rest.
ProbeResult probe_features(const Matrix<float>& features, const std::vector<int>& labels, const ProbeConfig& config);

}  // namespace gusd
