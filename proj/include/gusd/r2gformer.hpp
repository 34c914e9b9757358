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

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "gusd/graph.hpp"
#include "gusd/khop.hpp"
#include "gusd/nn.hpp"

namespace gusd {

enum class HopAggregator { Sum, Concat, Trm };
enum class GenrePooling { Mean, Sum, Max, Trm };

std::string to_string(HopAggregator a);
std::string to_string(GenrePooling p);
HopAggregator parse_hop_aggregator(const std::string& s);
GenrePooling parse_genre_pooling(const std::string& s);

/// Hop decay delta_h = exp(-alpha * h).
inline double decay(double alpha, int h) { return std::exp(-alpha * static_cast<double>(h)); }

struct R2GConfig {
  Index dim = 32;
  int K = 2;
  double alpha = 0.3;
  Index gat_heads = 4;
  HopAggregator hop_aggregator = HopAggregator::Sum;
  GenrePooling genre_pooling = GenrePooling::Mean;
  bool genreformer = true;
  int layers = 2;
  Index trm_heads = 4;
  Index trm_layers = 2;
  double dropout = 0.0;  // on each layer's RetGAT output

  void validate() const;
};

/// Genre membership lists of review and movie nodes.
struct GenreIndex {
  std::int64_t n_nodes = 0;
  std::int64_t first_item = 0;  // users occupy [0, first_item)
  int n_genres = 0;
  std::vector<Index> node;   // global node id per membership
  std::vector<Index> genre;  // genre per membership

  /// Throws IntegrityError if a review/movie node has no genre, a user has
  /// one, or a genre id is out of range.
  void validate() const;
};

GenreIndex genre_index(const HeteroGraph& graph);

/// One GAT over a single hop set: W is d x (heads * d), attention vectors
/// are heads x d for the source and destination halves of a^T [Wx_i || Wx_j].
template <typename T>
class GatHop {
 public:
  GatHop() = default;
  GatHop(ParameterSet<T>& ps, const std::string& name, Index dim, Index heads, Rng& rng) : heads_(heads), dim_(dim) {
    W_ = ps.add(name + ".W", xavier_uniform<T>(dim, heads * dim, rng));
    a_src_ = ps.add(name + ".a_src", xavier_uniform<T>(heads, dim, rng));
    a_dst_ = ps.add(name + ".a_dst", xavier_uniform<T>(heads, dim, rng));
  }

  Tensor<T> operator()(const std::shared_ptr<const Csr>& adj, const Tensor<T>& x, std::vector<T>* weights = nullptr) const {
    return graph_attention(matmul(x, W_), a_dst_, a_src_, adj, T(0.2), weights);
  }

  const Tensor<T>& W() const { return W_; }
  const Tensor<T>& a_src() const { return a_src_; }
  const Tensor<T>& a_dst() const { return a_dst_; }

 private:
  Index heads_ = 1, dim_ = 0;
  Tensor<T> W_, a_src_, a_dst_;
};

/// Decay-weighted multi-hop attention: N_h = delta_h * GAT_h(A_h, X),
/// aggregated over h and added to a learned linear residual of X.
template <typename T>
class RetGatLayer {
 public:
  RetGatLayer() = default;
  RetGatLayer(ParameterSet<T>& ps, const std::string& name, const R2GConfig& cfg, Rng& rng) : cfg_(cfg) {
    for (int h = 1; h <= cfg.K; ++h) {
      hops_.emplace_back(ps, name + ".hop" + std::to_string(h), cfg.dim, cfg.gat_heads, rng);
    }
    residual_ = Linear<T>(ps, name + ".residual", cfg.dim, cfg.dim, rng);
    if (cfg.hop_aggregator == HopAggregator::Concat) {
      concat_ = Linear<T>(ps, name + ".concat", cfg.K * cfg.dim, cfg.dim, rng);
    } else if (cfg.hop_aggregator == HopAggregator::Trm) {
      trm_ = TransformerEncoder<T>(ps, name + ".trm", {cfg.dim, cfg.trm_heads, cfg.trm_layers, 2, 0.0}, rng);
    }
  }

  /// Per-hop contributions N_1..N_K (decay applied).
  std::vector<Tensor<T>> contributions(const HopAdjacency& hops, const Tensor<T>& x) const {
    if (hops.K != cfg_.K) throw ConfigError("retgat: hop adjacency K does not match the layer");
    std::vector<Tensor<T>> out;
    for (int h = 1; h <= cfg_.K; ++h) {
      out.push_back(scale(hops_[static_cast<std::size_t>(h - 1)](hops.hops[static_cast<std::size_t>(h - 1)], x),
                          static_cast<T>(decay(cfg_.alpha, h))));
    }
    return out;
  }

  Tensor<T> operator()(const HopAdjacency& hops, const Tensor<T>& x, const Mode& mode = {}) const {
    const auto parts = contributions(hops, x);
    Tensor<T> agg;
    switch (cfg_.hop_aggregator) {
      case HopAggregator::Sum:
        agg = parts[0];
        for (std::size_t h = 1; h < parts.size(); ++h) agg = add(agg, parts[h]);
        break;
      case HopAggregator::Concat:
        agg = concat_(concat(parts, 1));
        break;
      case HopAggregator::Trm: {
        const Index n = x.rows();
        const Tensor<T> tokens = trm_(concat(parts, 0), n, cfg_.K, mode);
        agg = token_rows(tokens, n, 0);
        for (int h = 1; h < cfg_.K; ++h) agg = add(agg, token_rows(tokens, n, h));
        agg = scale(agg, static_cast<T>(1.0 / cfg_.K));
        break;
      }
    }
    return add(agg, residual_(x));
  }

  const GatHop<T>& hop(int h) const { return hops_.at(static_cast<std::size_t>(h - 1)); }
  const Linear<T>& residual() const { return residual_; }

 private:
  R2GConfig cfg_;
  std::vector<GatHop<T>> hops_;
  Linear<T> residual_, concat_;
  TransformerEncoder<T> trm_;
};

/// Genre pooling over review/movie nodes, cross-genre self-attention, and
/// fusion of each node with the mean of its genres' features.
template <typename T>
class GenreFormer {
 public:
  GenreFormer() = default;
  GenreFormer(ParameterSet<T>& ps, const std::string& name, const R2GConfig& cfg, Rng& rng) : cfg_(cfg) {
    trm_ = TransformerEncoder<T>(ps, name + ".trm", {cfg.dim, cfg.trm_heads, cfg.trm_layers, 2, 0.0}, rng);
    fuse_ = Mlp<T>(ps, name + ".fuse", 2 * cfg.dim, cfg.dim, cfg.dim, rng);
    user_ = Linear<T>(ps, name + ".user", cfg.dim, cfg.dim, rng);
    if (cfg.genre_pooling == GenrePooling::Trm) {
      pool_key_ = Linear<T>(ps, name + ".pool.key", cfg.dim, cfg.dim, rng);
      pool_query_ = ps.add(name + ".pool.query", xavier_uniform<T>(cfg.dim, 1, rng));
    }
  }

  /// g_j over the members of genre j; empty genres give zero rows.
  Tensor<T> pool(const Tensor<T>& x, const GenreIndex& gi) const {
    const Tensor<T> members = gather_rows(x, gi.node);
    switch (cfg_.genre_pooling) {
      case GenrePooling::Mean: return segment_reduce(members, gi.genre, gi.n_genres, Reduce::Mean);
      case GenrePooling::Sum: return segment_reduce(members, gi.genre, gi.n_genres, Reduce::Sum);
      case GenrePooling::Max: return segment_reduce(members, gi.genre, gi.n_genres, Reduce::Max);
      case GenrePooling::Trm: {
        // Attention pooling with a learned seed query.
        const T inv = T(1) / std::sqrt(static_cast<T>(cfg_.dim));
        const Tensor<T> scores = scale(matmul(pool_key_(members), pool_query_), inv);
        const Tensor<T> w = segment_softmax(scores, gi.genre, gi.n_genres);
        return segment_reduce(scale_rows(members, w), gi.genre, gi.n_genres, Reduce::Sum);
      }
    }
    throw ConfigError("unknown genre pooling");
  }

  Tensor<T> interact(const Tensor<T>& g, const Mode& mode = {}) const { return trm_(g, mode); }

  /// z_i = mean of g_j over the genres of review/movie node i, as rows
  /// ordered by node id from gi.first_item.
  static Tensor<T> genre_context(const Tensor<T>& g, const GenreIndex& gi) {
    std::vector<Index> seg(gi.node.size());
    for (std::size_t k = 0; k < seg.size(); ++k) seg[k] = gi.node[k] - gi.first_item;
    return segment_reduce(gather_rows(g, gi.genre), std::move(seg), gi.n_nodes - gi.first_item, Reduce::Mean);
  }

  Tensor<T> fuse(const Tensor<T>& x, const Tensor<T>& g, const GenreIndex& gi, const Mode& mode = {}) const {
    const Index users = gi.first_item;
    const Tensor<T> items = slice(x, 0, users, x.rows() - users);
    const Tensor<T> z = genre_context(g, gi);
    const Tensor<T> fused = fuse_(concat<T>({items, z}, 1), mode);
    if (users == 0) return fused;
    return concat<T>({user_(slice(x, 0, 0, users)), fused}, 0);
  }

  Tensor<T> operator()(const Tensor<T>& x, const GenreIndex& gi, const Mode& mode = {}) const {
    return fuse(x, interact(pool(x, gi), mode), gi, mode);
  }

 private:
  R2GConfig cfg_;
  TransformerEncoder<T> trm_;
  Mlp<T> fuse_;
  Linear<T> user_;
  Linear<T> pool_key_;
  Tensor<T> pool_query_;
};

/// L stacked (RetGAT -> GenreFormer) layers; L = 0 is the identity.
template <typename T>
class R2GFormer {
 public:
  R2GFormer() = default;
  R2GFormer(ParameterSet<T>& ps, const std::string& name, const R2GConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg.validate();
    for (int l = 0; l < cfg.layers; ++l) {
      const std::string p = name + ".l" + std::to_string(l);
      retgat_.emplace_back(ps, p, cfg, rng);
      if (cfg.genreformer) genre_.emplace_back(ps, p + ".genre", cfg, rng);
    }
  }

  Tensor<T> operator()(const Tensor<T>& x, const HopAdjacency& hops, const GenreIndex& gi, const Mode& mode = {}) const {
    if (x.rows() != gi.n_nodes || x.rows() != hops.num_nodes()) throw ShapeError("r2gformer: one input row per node");
    Tensor<T> h = x;
    for (std::size_t l = 0; l < retgat_.size(); ++l) {
      h = dropout(retgat_[l](hops, h, mode), cfg_.dropout, mode.rng, mode.training);
      if (cfg_.genreformer) h = genre_[l](h, gi, mode);
    }
    return h;
  }

  const R2GConfig& config() const { return cfg_; }
  const RetGatLayer<T>& retgat(int l) const { return retgat_.at(static_cast<std::size_t>(l)); }
  const GenreFormer<T>& genreformer(int l) const { return genre_.at(static_cast<std::size_t>(l)); }

 private:
  R2GConfig cfg_;
  std::vector<RetGatLayer<T>> retgat_;
  std::vector<GenreFormer<T>> genre_;
};

}  // namespace gusd
