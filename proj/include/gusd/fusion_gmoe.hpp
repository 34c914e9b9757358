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

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gusd/errors.hpp"
#include "gusd/nn.hpp"

namespace gusd {

// ---------------------------------------------------------------------------
// Modality fusion

/// Per node type: modality tokens -> TRM -> concatenated tokens -> MLP to d.
template <typename T>
class FusionBlock {
 public:
  FusionBlock() = default;
  FusionBlock(ParameterSet<T>& ps, const std::string& name, Index dim, Index tokens, const TransformerConfig& trm,
              Rng& rng, double dropout = 0.0)
      : dim_(dim), tokens_(tokens) {
    TransformerConfig cfg = trm;
    cfg.dim = dim;
    trm_ = TransformerEncoder<T>(ps, name + ".trm", cfg, rng);
    mlp_ = Mlp<T>(ps, name + ".mlp", tokens * dim, dim, dim, rng, dropout);
  }

  Tensor<T> operator()(const std::vector<Tensor<T>>& tokens, const Mode& mode = {}) const {
    if (static_cast<Index>(tokens.size()) != tokens_) {
      throw ConfigError("fusion: expected " + std::to_string(tokens_) + " modality tokens, got " +
                        std::to_string(tokens.size()));
    }
    const Index n = tokens.front().rows();
    for (const auto& t : tokens) {
      if (t.cols() != dim_) throw ConfigError("fusion: modality width " + std::to_string(t.cols()) + " != " + std::to_string(dim_));
      if (t.rows() != n) throw ShapeError("fusion: modality row counts differ");
    }
    const Tensor<T> mixed = trm_(concat(tokens, 0), n, tokens_, mode);
    std::vector<Tensor<T>> parts;
    for (Index t = 0; t < tokens_; ++t) parts.push_back(token_rows(mixed, n, t));
    return mlp_(concat(parts, 1), mode);
  }

  Index tokens() const { return tokens_; }

 private:
  Index dim_ = 0, tokens_ = 0;
  TransformerEncoder<T> trm_;
  Mlp<T> mlp_;
};

struct FusionConfig {
  Index dim = 32;
  Index ub_dim = 32;
  bool user_bias = true;  // false: 2-token user fusion
  Index trm_heads = 4;
  Index trm_layers = 2;
  double dropout = 0.0;
};

template <typename T>
class Fusion {
 public:
  Fusion() = default;
  Fusion(ParameterSet<T>& ps, const std::string& name, const FusionConfig& cfg, Rng& rng) : cfg_(cfg) {
    const TransformerConfig trm{cfg.dim, cfg.trm_heads, cfg.trm_layers, 2, cfg.dropout};
    user_ = FusionBlock<T>(ps, name + ".user", cfg.dim, cfg.user_bias ? 3 : 2, trm, rng, cfg.dropout);
    review_ = FusionBlock<T>(ps, name + ".review", cfg.dim, 2, trm, rng, cfg.dropout);
    movie_ = FusionBlock<T>(ps, name + ".movie", cfg.dim, 2, trm, rng, cfg.dropout);
    if (cfg.user_bias) ub_proj_ = Linear<T>(ps, name + ".ub_proj", cfg.ub_dim, cfg.dim, rng);
  }

  /// U from (U_g, U_m, U_b); U_b is ignored when the bias token is disabled.
  Tensor<T> users(const Tensor<T>& g, const Tensor<T>& m, const Tensor<T>& ub, const Mode& mode = {}) const {
    if (!cfg_.user_bias) return user_(std::vector<Tensor<T>>{g, m}, mode);
    return user_(std::vector<Tensor<T>>{g, m, ub_proj_(ub)}, mode);
  }
  Tensor<T> reviews(const Tensor<T>& g, const Tensor<T>& m, const Mode& mode = {}) const {
    return review_(std::vector<Tensor<T>>{g, m}, mode);
  }
  Tensor<T> movies(const Tensor<T>& g, const Tensor<T>& m, const Mode& mode = {}) const {
    return movie_(std::vector<Tensor<T>>{g, m}, mode);
  }

  const FusionConfig& config() const { return cfg_; }
  const FusionBlock<T>& user_block() const { return user_; }
  const FusionBlock<T>& review_block() const { return review_; }

 private:
  FusionConfig cfg_;
  FusionBlock<T> user_, review_, movie_;
  Linear<T> ub_proj_;
};

/// r_i = [R_i || M_movie(i) || U_user(i)]. `movie_of` / `user_of` index rows
/// of M / U for each row of R.
template <typename T>
Tensor<T> assemble_review(const Tensor<T>& R, const Tensor<T>& M, const Tensor<T>& U, const std::vector<Index>& movie_of,
                          const std::vector<Index>& user_of) {
  if (static_cast<Index>(movie_of.size()) != R.rows() || static_cast<Index>(user_of.size()) != R.rows()) {
    throw IntegrityError("assemble_review: every review needs a movie and a user");
  }
  for (std::size_t i = 0; i < movie_of.size(); ++i) {
    if (movie_of[i] < 0 || movie_of[i] >= M.rows()) throw IntegrityError("assemble_review: unresolved movie for row " + std::to_string(i));
    if (user_of[i] < 0 || user_of[i] >= U.rows()) throw IntegrityError("assemble_review: unresolved user for row " + std::to_string(i));
  }
  return concat<T>({R, gather_rows(M, movie_of), gather_rows(U, user_of)}, 1);
}

// ---------------------------------------------------------------------------
// Genre routing and mixers

/// Genre memberships of a batch of reviews, grouped per genre.
struct GenreRouting {
  Index rows = 0;
  int n_genres = 0;
  Index max_slots = 0;
  std::vector<std::vector<Index>> members;  // per genre, ascending rows
  std::vector<Index> flat_row;              // genre-major (genre, row) pairs
  std::vector<Index> slot_position;         // rows * max_slots, index into flat order or -1
  std::vector<Index> count;                 // genres per row

  /// Throws IntegrityError for an empty genre set or an unknown genre and
  /// ConfigError when a row has more than `max_slots` genres.
  static GenreRouting build(const std::vector<std::vector<int>>& genres, int n_genres, Index max_slots);
};

enum class MixerKind { Gmoe, Mlp, Gated, Soft };
enum class MoeAggregator { Sum, Mean, Concat, Trm };

std::string to_string(MixerKind k);
std::string to_string(MoeAggregator a);
MixerKind parse_mixer_kind(const std::string& s);
MoeAggregator parse_moe_aggregator(const std::string& s);

struct MixerConfig {
  MixerKind kind = MixerKind::Gmoe;
  Index width = 96;  // 3 d
  Index hidden = 32;
  int n_experts = 21;
  int layers = 2;
  MoeAggregator aggregator = MoeAggregator::Sum;
  Index max_slots = 3;
  Index trm_heads = 4;
  Index trm_layers = 2;
  double dropout = 0.0;

  void validate() const;
  /// Width of the final output (concat widens the last layer).
  Index output_width() const;
};

/// One genre-routed layer: r_i <- AGG{ Expert_j(r_i) : j in G_i }.
template <typename T>
class GmoeLayer {
 public:
  GmoeLayer() = default;
  GmoeLayer(ParameterSet<T>& ps, const std::string& name, const MixerConfig& cfg, MoeAggregator agg, Rng& rng)
      : cfg_(cfg), agg_(agg) {
    for (int j = 0; j < cfg.n_experts; ++j) {
      experts_.emplace_back(ps, name + ".expert" + std::to_string(j), cfg.width, cfg.hidden, cfg.width, rng, cfg.dropout);
    }
    if (agg == MoeAggregator::Trm) {
      trm_ = TransformerEncoder<T>(ps, name + ".trm", {cfg.width, cfg.trm_heads, cfg.trm_layers, 2, cfg.dropout}, rng);
    }
  }

  Tensor<T> operator()(const Tensor<T>& x, const GenreRouting& route, const Mode& mode = {}) const {
    if (route.rows != x.rows()) throw ShapeError("gmoe: routing rows differ from input rows");
    if (route.n_genres != static_cast<int>(experts_.size())) throw ConfigError("gmoe: expert count must equal genre count");
    std::vector<Tensor<T>> outs;
    for (std::size_t j = 0; j < experts_.size(); ++j) {
      if (!route.members[j].empty()) outs.push_back(experts_[j](gather_rows(x, route.members[j]), mode));
    }
    const Tensor<T> stacked = concat(outs, 0);
    switch (agg_) {
      case MoeAggregator::Sum: return segment_reduce(stacked, route.flat_row, route.rows, Reduce::Sum);
      case MoeAggregator::Mean: return segment_reduce(stacked, route.flat_row, route.rows, Reduce::Mean);
      case MoeAggregator::Concat: return concat(slots(stacked, route), 1);
      case MoeAggregator::Trm: {
        const auto tokens = slots(stacked, route);
        const Tensor<T> mixed = trm_(concat(tokens, 0), route.rows, route.max_slots, mode, &route.count);
        auto avg = std::make_shared<SparseMatrix<T>>(route.rows, route.rows * route.max_slots);
        std::vector<Eigen::Triplet<T>> trip;
        for (Index b = 0; b < route.rows; ++b) {
          const Index len = route.count[static_cast<std::size_t>(b)];
          for (Index s = 0; s < len; ++s) trip.emplace_back(b, s * route.rows + b, T(1) / static_cast<T>(len));
        }
        avg->setFromTriplets(trip.begin(), trip.end());
        return spmm(std::shared_ptr<const SparseMatrix<T>>(avg), mixed);
      }
    }
    throw ConfigError("unknown gmoe aggregator");
  }

  const Mlp<T>& expert(int j) const { return experts_.at(static_cast<std::size_t>(j)); }
  int n_experts() const { return static_cast<int>(experts_.size()); }

 private:
  // Slot s of row b holds the expert output of the row's s-th genre (zero
  // row when the row has fewer genres).
  static std::vector<Tensor<T>> slots(const Tensor<T>& stacked, const GenreRouting& route) {
    std::vector<Tensor<T>> out;
    for (Index s = 0; s < route.max_slots; ++s) {
      std::vector<Index> idx(static_cast<std::size_t>(route.rows));
      for (Index b = 0; b < route.rows; ++b) idx[static_cast<std::size_t>(b)] = route.slot_position[static_cast<std::size_t>(b * route.max_slots + s)];
      out.push_back(gather_rows(stacked, std::move(idx)));
    }
    return out;
  }

  MixerConfig cfg_;
  MoeAggregator agg_ = MoeAggregator::Sum;
  std::vector<Mlp<T>> experts_;
  TransformerEncoder<T> trm_;
};

/// Learned softmax gate with top-1 dispatch; the chosen expert's output is
/// scaled by its gate probability.
template <typename T>
class GatedMoeLayer {
 public:
  GatedMoeLayer() = default;
  GatedMoeLayer(ParameterSet<T>& ps, const std::string& name, const MixerConfig& cfg, Rng& rng) {
    gate_ = Linear<T>(ps, name + ".gate", cfg.width, cfg.n_experts, rng);
    for (int e = 0; e < cfg.n_experts; ++e) {
      experts_.emplace_back(ps, name + ".expert" + std::to_string(e), cfg.width, cfg.hidden, cfg.width, rng, cfg.dropout);
    }
  }

  Tensor<T> gate_probs(const Tensor<T>& x) const { return softmax(gate_(x), 1); }

  Tensor<T> operator()(const Tensor<T>& x, const Mode& mode = {}) const {
    const Tensor<T> probs = gate_probs(x);
    const Index n = x.rows(), E = static_cast<Index>(experts_.size());
    std::vector<std::vector<Index>> rows(static_cast<std::size_t>(E));
    Matrix<T> onehot = Matrix<T>::Zero(n, E);
    for (Index i = 0; i < n; ++i) {
      Index best = 0;
      probs.value().row(i).maxCoeff(&best);
      rows[static_cast<std::size_t>(best)].push_back(i);
      onehot(i, best) = T(1);
    }
    std::vector<Tensor<T>> outs;
    std::vector<Index> position(static_cast<std::size_t>(n));
    Index offset = 0;
    for (Index e = 0; e < E; ++e) {
      const auto& r = rows[static_cast<std::size_t>(e)];
      if (r.empty()) continue;
      for (std::size_t k = 0; k < r.size(); ++k) position[static_cast<std::size_t>(r[k])] = offset + static_cast<Index>(k);
      offset += static_cast<Index>(r.size());
      outs.push_back(experts_[static_cast<std::size_t>(e)](gather_rows(x, r), mode));
    }
    const Tensor<T> p_top = sum(mul(probs, Tensor<T>(std::move(onehot))), 1);
    return scale_rows(gather_rows(concat(outs, 0), std::move(position)), p_top);
  }

  const Mlp<T>& expert(int e) const { return experts_.at(static_cast<std::size_t>(e)); }

 private:
  Linear<T> gate_;
  std::vector<Mlp<T>> experts_;
};

/// Soft MoE with one slot per expert over the rows of a batch: slots are
/// dispatch-weighted (softmax over rows) mixtures of rows, outputs are
/// combine-weighted (softmax over experts) mixtures of expert outputs.
template <typename T>
class SoftMoeLayer {
 public:
  SoftMoeLayer() = default;
  SoftMoeLayer(ParameterSet<T>& ps, const std::string& name, const MixerConfig& cfg, Rng& rng) {
    phi_ = ps.add(name + ".phi", xavier_uniform<T>(cfg.width, cfg.n_experts, rng));
    for (int e = 0; e < cfg.n_experts; ++e) {
      experts_.emplace_back(ps, name + ".expert" + std::to_string(e), cfg.width, cfg.hidden, cfg.width, rng, cfg.dropout);
    }
  }

  Tensor<T> dispatch_weights(const Tensor<T>& x) const { return softmax(matmul(x, phi_), 0); }
  Tensor<T> combine_weights(const Tensor<T>& x) const { return softmax(matmul(x, phi_), 1); }

  Tensor<T> operator()(const Tensor<T>& x, const Mode& mode = {}) const {
    const Tensor<T> logits = matmul(x, phi_);
    const Tensor<T> slots = matmul(transpose(softmax(logits, 0)), x);
    std::vector<Tensor<T>> outs;
    for (std::size_t e = 0; e < experts_.size(); ++e) outs.push_back(experts_[e](slice(slots, 0, static_cast<Index>(e), 1), mode));
    return matmul(softmax(logits, 1), concat(outs, 0));
  }

  const Mlp<T>& expert(int e) const { return experts_.at(static_cast<std::size_t>(e)); }

 private:
  Tensor<T> phi_;
  std::vector<Mlp<T>> experts_;
};

/// Stack of review mixing layers of one kind. Every layer except the last
/// uses a width-preserving aggregator (concat falls back to sum).
template <typename T>
class ReviewMixer {
 public:
  ReviewMixer() = default;
  ReviewMixer(ParameterSet<T>& ps, const std::string& name, const MixerConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg.validate();
    for (int l = 0; l < cfg.layers; ++l) {
      const std::string p = name + ".l" + std::to_string(l);
      const bool last = l + 1 == cfg.layers;
      switch (cfg.kind) {
        case MixerKind::Gmoe: {
          MoeAggregator agg = cfg.aggregator;
          if (agg == MoeAggregator::Concat && !last) agg = MoeAggregator::Sum;
          gmoe_.emplace_back(ps, p, cfg, agg, rng);
          break;
        }
        case MixerKind::Mlp: mlp_.emplace_back(ps, p + ".mlp", cfg.width, cfg.hidden, cfg.width, rng, cfg.dropout); break;
        case MixerKind::Gated: gated_.emplace_back(ps, p, cfg, rng); break;
        case MixerKind::Soft: soft_.emplace_back(ps, p, cfg, rng); break;
      }
    }
  }

  Tensor<T> operator()(const Tensor<T>& x, const GenreRouting& route, const Mode& mode = {}) const {
    Tensor<T> h = x;
    for (int l = 0; l < cfg_.layers; ++l) {
      const auto i = static_cast<std::size_t>(l);
      switch (cfg_.kind) {
        case MixerKind::Gmoe: h = gmoe_[i](h, route, mode); break;
        case MixerKind::Mlp: h = mlp_[i](h, mode); break;
        case MixerKind::Gated: h = gated_[i](h, mode); break;
        case MixerKind::Soft: h = soft_[i](h, mode); break;
      }
    }
    return h;
  }

  const MixerConfig& config() const { return cfg_; }
  const GmoeLayer<T>& gmoe_layer(int l) const { return gmoe_.at(static_cast<std::size_t>(l)); }

 private:
  MixerConfig cfg_;
  std::vector<GmoeLayer<T>> gmoe_;
  std::vector<Mlp<T>> mlp_;
  std::vector<GatedMoeLayer<T>> gated_;
  std::vector<SoftMoeLayer<T>> soft_;
};

}  // namespace gusd
