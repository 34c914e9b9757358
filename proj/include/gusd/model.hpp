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

#include <algorithm>
#include <memory>
#include <string>
#include <vector>

#include "gusd/encoders.hpp"
#include "gusd/fusion_gmoe.hpp"
#include "gusd/r2gformer.hpp"
#include "gusd/run_config.hpp"
#include "gusd/synthetic.hpp"

namespace gusd {

/// Per-dataset constants consumed by the model (possibly perturbed).
struct GraphInputs {
  std::int64_t n_users = 0, n_reviews = 0, n_movies = 0;
  int n_genres = 0;
  Index max_slots = 1;
  Matrix<float> text;       // node embeddings, node-id order
  Matrix<float> meta;       // standardized, padded metadata, node-id order
  Matrix<float> user_bias;  // users x ub_dim (empty when unused)
  HopAdjacency hops;
  GenreIndex genres;
  std::vector<Index> review_user, review_movie;
  std::vector<std::vector<int>> review_genres;

  Index review_node(Index r) const { return n_users + r; }
  Index movie_node(Index m) const { return n_users + n_reviews + m; }
  Index num_nodes() const { return n_users + n_reviews + n_movies; }
};

inline constexpr Index kMetaPad = 3;

/// Builds model inputs from a bundle. `edges` overrides the graph's edge
/// list for hop computation (edge-drop perturbation).
GraphInputs make_inputs(const DatasetBundle& bundle, const RunConfig& cfg, const Matrix<float>& user_bias,
                        const EdgePairs* edges = nullptr);

template <typename T>
struct GraphTensors {
  Tensor<T> text, meta, user_bias;

  static GraphTensors from(const GraphInputs& in) {
    GraphTensors g;
    g.text = Tensor<T>(in.text.template cast<T>());
    g.meta = Tensor<T>(in.meta.template cast<T>());
    if (in.user_bias.size() > 0) g.user_bias = Tensor<T>(in.user_bias.template cast<T>());
    return g;
  }
};

/// Review classifier interface shared by GUSD and the text baseline. The
/// full-graph encoding is computed once per step by `encode` and reused by
/// `logits` for any number of review batches.
template <typename T>
class ReviewClassifier {
 public:
  virtual ~ReviewClassifier() = default;
  virtual void encode(const GraphTensors<T>& x, const GraphInputs& in, const Mode& mode) = 0;
  virtual Tensor<T> logits(const GraphTensors<T>& x, const GraphInputs& in, const std::vector<Index>& reviews,
                           const Mode& mode) const = 0;
  ParameterSet<T>& parameters() { return ps_; }
  const ParameterSet<T>& parameters() const { return ps_; }

 protected:
  ParameterSet<T> ps_;
};

template <typename T>
class GusdModel final : public ReviewClassifier<T> {
 public:
  GusdModel(const RunConfig& cfg, const GraphInputs& in, Rng& rng) : cfg_(cfg) {
    auto& ps = this->ps_;
    const Index d = cfg.hidden;
    text_proj_ = Linear<T>(ps, "text_proj", in.text.cols(), d, rng);
    meta_ = MetaEncoder<T>(ps, "meta", in.meta.cols(), cfg.meta_hidden, d, rng);
    R2GConfig r;
    r.dim = d;
    r.K = cfg.hops;
    r.alpha = cfg.alpha;
    r.gat_heads = cfg.gat_heads;
    r.hop_aggregator = parse_hop_aggregator(cfg.hop_aggregator);
    r.genre_pooling = parse_genre_pooling(cfg.genre_pooling);
    r.genreformer = cfg.genreformer;
    r.layers = cfg.gnn_layers;
    r.trm_heads = cfg.trm_heads;
    r.trm_layers = cfg.trm_layers;
    r.dropout = cfg.dropout;
    r2g_ = R2GFormer<T>(ps, "r2g", r, rng);
    FusionConfig f;
    f.dim = d;
    f.ub_dim = cfg.user_bias ? in.user_bias.cols() : d;
    f.user_bias = cfg.user_bias;
    f.trm_heads = cfg.trm_heads;
    f.trm_layers = cfg.trm_layers;
    if (cfg.user_bias && in.user_bias.rows() != in.n_users) throw ConfigError("gusd: user bias rows must equal user count");
    fusion_ = Fusion<T>(ps, "fusion", f, rng);
    MixerConfig m;
    m.kind = parse_mixer_kind(cfg.mixer);
    m.width = 3 * d;
    m.hidden = cfg.gmoe_hidden;
    m.n_experts = cfg.experts > 0 && m.kind != MixerKind::Gmoe ? cfg.experts : in.n_genres;
    m.layers = cfg.gmoe_layers;
    m.aggregator = parse_moe_aggregator(cfg.gmoe_aggregator);
    m.max_slots = in.max_slots;
    m.trm_heads = cfg.trm_heads;
    m.trm_layers = cfg.trm_layers;
    mixer_ = ReviewMixer<T>(ps, "gmoe", m, rng);
    head_ = Linear<T>(ps, "head", m.output_width(), 2, rng);
  }

  void encode(const GraphTensors<T>& x, const GraphInputs& in, const Mode& mode) override {
    graph_ = r2g_(text_proj_(x.text), in.hops, in.genres, mode);
    meta_out_ = meta_(x.meta, mode);
  }

  /// Post-mixer review features (input to the classifier head).
  Tensor<T> features(const GraphTensors<T>& x, const GraphInputs& in, const std::vector<Index>& reviews,
                     const Mode& mode) const {
    if (!graph_.defined()) throw ContractError("gusd: encode must run before logits");
    std::vector<Index> users, movies;
    for (Index r : reviews) {
      if (r < 0 || r >= in.n_reviews) throw IntegrityError("gusd: review index out of range");
      users.push_back(in.review_user[static_cast<std::size_t>(r)]);
      movies.push_back(in.review_movie[static_cast<std::size_t>(r)]);
    }
    auto unique = [](std::vector<Index> v) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
      return v;
    };
    const auto u_set = unique(users), m_set = unique(movies);
    auto position = [](const std::vector<Index>& set, const std::vector<Index>& keys) {
      std::vector<Index> out;
      for (Index k : keys) out.push_back(std::lower_bound(set.begin(), set.end(), k) - set.begin());
      return out;
    };
    std::vector<Index> u_nodes(u_set), r_nodes, m_nodes;
    for (Index r : reviews) r_nodes.push_back(in.review_node(r));
    for (Index m : m_set) m_nodes.push_back(in.movie_node(m));

    const Tensor<T> U = fusion_.users(gather_rows(graph_, u_nodes), gather_rows(meta_out_, u_nodes),
                                      cfg_.user_bias ? gather_rows(x.user_bias, u_set) : Tensor<T>(), mode);
    const Tensor<T> M = fusion_.movies(gather_rows(graph_, m_nodes), gather_rows(meta_out_, m_nodes), mode);
    const Tensor<T> R = fusion_.reviews(gather_rows(graph_, r_nodes), gather_rows(meta_out_, r_nodes), mode);
    const Tensor<T> assembled = assemble_review(R, M, U, position(m_set, movies), position(u_set, users));
    std::vector<std::vector<int>> genres;
    for (Index r : reviews) genres.push_back(in.review_genres[static_cast<std::size_t>(r)]);
    const auto route = GenreRouting::build(genres, in.n_genres, mixer_.config().max_slots);
    return mixer_(assembled, route, mode);
  }

  Tensor<T> logits(const GraphTensors<T>& x, const GraphInputs& in, const std::vector<Index>& reviews,
                   const Mode& mode) const override {
    return head_(dropout(features(x, in, reviews, mode), cfg_.dropout, mode.rng, mode.training));
  }

  const Linear<T>& head() const { return head_; }
  Linear<T>& head() { return head_; }

 private:
  RunConfig cfg_;
  Linear<T> text_proj_;
  MetaEncoder<T> meta_;
  R2GFormer<T> r2g_;
  Fusion<T> fusion_;
  ReviewMixer<T> mixer_;
  Linear<T> head_;
  Tensor<T> graph_, meta_out_;
};

/// Text-only baseline: two fully connected layers over review embeddings.
template <typename T>
class TextMlp final : public ReviewClassifier<T> {
 public:
  TextMlp(const RunConfig& cfg, const GraphInputs& in, Rng& rng)
      : mlp_(this->ps_, "text_mlp", in.text.cols(), cfg.hidden, 2, rng, cfg.dropout) {}

  void encode(const GraphTensors<T>&, const GraphInputs&, const Mode&) override {}

  Tensor<T> logits(const GraphTensors<T>& x, const GraphInputs& in, const std::vector<Index>& reviews,
                   const Mode& mode) const override {
    std::vector<Index> rows;
    for (Index r : reviews) rows.push_back(in.review_node(r));
    return mlp_(gather_rows(x.text, rows), mode);
  }

 private:
  Mlp<T> mlp_;
};

template <typename T>
std::unique_ptr<ReviewClassifier<T>> make_classifier(const RunConfig& cfg, const GraphInputs& in, Rng& rng) {
  if (cfg.model == "text-mlp") return std::make_unique<TextMlp<T>>(cfg, in, rng);
  return std::make_unique<GusdModel<T>>(cfg, in, rng);
}

}  // namespace gusd
