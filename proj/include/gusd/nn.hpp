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
#include <string>
#include <utility>
#include <vector>

#include "gusd/attention.hpp"
#include "gusd/ops.hpp"
#include "gusd/random.hpp"

namespace gusd {

/// Forward-pass mode: dropout is active only when training with an rng.
struct Mode {
  bool training = false;
  Rng* rng = nullptr;

  static Mode eval() { return {}; }
  static Mode train(Rng& rng) { return {true, &rng}; }
};

/// Ordered, named registry of trainable tensors. Handles alias the module
/// parameters, so updates through either side are visible to both.
template <typename T>
class ParameterSet {
 public:
  Tensor<T> add(std::string name, Matrix<T> init) {
    for (const auto& [n, _] : items_) {
      if (n == name) throw ContractError("duplicate parameter name: " + name);
    }
    Tensor<T> t(std::move(init), true);
    items_.emplace_back(std::move(name), t);
    return t;
  }

  const std::vector<std::pair<std::string, Tensor<T>>>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }

  std::vector<Tensor<T>> tensors() const {
    std::vector<Tensor<T>> out;
    out.reserve(items_.size());
    for (const auto& [_, t] : items_) out.push_back(t);
    return out;
  }

  const Tensor<T>* find(const std::string& name) const {
    for (const auto& [n, t] : items_) {
      if (n == name) return &t;
    }
    return nullptr;
  }

  Index count() const {
    Index total = 0;
    for (const auto& [_, t] : items_) total += t.size();
    return total;
  }

  void zero_grad() {
    for (auto& [_, t] : items_) t.zero_grad();
  }

  std::vector<Matrix<T>> snapshot() const {
    std::vector<Matrix<T>> out;
    for (const auto& [_, t] : items_) out.push_back(t.value());
    return out;
  }

  void restore(const std::vector<Matrix<T>>& values) {
    if (values.size() != items_.size()) throw ContractError("restore: parameter count mismatch");
    for (std::size_t i = 0; i < items_.size(); ++i) items_[i].second.value_mut() = values[i];
  }

 private:
  std::vector<std::pair<std::string, Tensor<T>>> items_;
};

template <typename T>
Matrix<T> xavier_uniform(Index fan_in, Index fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix<T> m(fan_in, fan_out);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(rng.uniform(-bound, bound));
  return m;
}

/// y = x W + b with W stored as in x out.
template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(ParameterSet<T>& ps, const std::string& name, Index in, Index out, Rng& rng, bool bias = true)
      : in_(in), out_(out) {
    weight_ = ps.add(name + ".W", xavier_uniform<T>(in, out, rng));
    if (bias) bias_ = ps.add(name + ".b", Matrix<T>::Zero(1, out));
  }

  Tensor<T> operator()(const Tensor<T>& x) const {
    if (x.cols() != in_) {
      throw ShapeError("linear: expected width " + std::to_string(in_) + ", got " + std::to_string(x.cols()));
    }
    Tensor<T> y = matmul(x, weight_);
    return bias_.defined() ? add(y, bias_) : y;
  }

  Index in() const { return in_; }
  Index out() const { return out_; }
  const Tensor<T>& weight() const { return weight_; }
  Tensor<T>& weight() { return weight_; }
  const Tensor<T>& bias() const { return bias_; }

 private:
  Index in_ = 0, out_ = 0;
  Tensor<T> weight_, bias_;
};

/// Two-layer perceptron: Linear -> gelu -> dropout -> Linear.
template <typename T>
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParameterSet<T>& ps, const std::string& name, Index in, Index hidden, Index out, Rng& rng,
      double dropout = 0.0, bool bias = true)
      : first_(ps, name + ".l1", in, hidden, rng, bias), second_(ps, name + ".l2", hidden, out, rng, bias),
        dropout_(dropout) {}

  Tensor<T> operator()(const Tensor<T>& x, const Mode& mode = {}) const {
    return second_(gusd::dropout(gelu(first_(x)), dropout_, mode.rng, mode.training));
  }

  Index in() const { return first_.in(); }
  Index out() const { return second_.out(); }
  const Linear<T>& first() const { return first_; }
  const Linear<T>& second() const { return second_; }

 private:
  Linear<T> first_, second_;
  double dropout_ = 0.0;
};

template <typename T>
class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParameterSet<T>& ps, const std::string& name, Index dim) {
    gamma_ = ps.add(name + ".gamma", Matrix<T>::Ones(1, dim));
    beta_ = ps.add(name + ".beta", Matrix<T>::Zero(1, dim));
  }
  Tensor<T> operator()(const Tensor<T>& x) const { return layer_norm(x, gamma_, beta_); }

 private:
  Tensor<T> gamma_, beta_;
};

struct TransformerConfig {
  Index dim = 32;
  Index heads = 4;
  Index layers = 2;
  Index ff_mult = 2;
  double dropout = 0.0;
};

/// Post-norm transformer encoder: self-attention + residual + LayerNorm,
/// then a two-layer feed-forward + residual + LayerNorm. No positional
/// encoding, so it is permutation-equivariant over tokens.
template <typename T>
class TransformerEncoder {
 public:
  TransformerEncoder() = default;
  TransformerEncoder(ParameterSet<T>& ps, const std::string& name, const TransformerConfig& cfg, Rng& rng)
      : cfg_(cfg) {
    if (cfg.heads <= 0 || cfg.dim % cfg.heads != 0) {
      throw ConfigError("transformer: dim " + std::to_string(cfg.dim) + " not divisible by heads " +
                        std::to_string(cfg.heads));
    }
    for (Index l = 0; l < cfg.layers; ++l) {
      const std::string p = name + ".layer" + std::to_string(l);
      Block b;
      b.q = Linear<T>(ps, p + ".q", cfg.dim, cfg.dim, rng);
      b.k = Linear<T>(ps, p + ".k", cfg.dim, cfg.dim, rng);
      b.v = Linear<T>(ps, p + ".v", cfg.dim, cfg.dim, rng);
      b.o = Linear<T>(ps, p + ".o", cfg.dim, cfg.dim, rng);
      b.norm1 = LayerNorm<T>(ps, p + ".norm1", cfg.dim);
      b.ff = Mlp<T>(ps, p + ".ff", cfg.dim, cfg.dim * cfg.ff_mult, cfg.dim, rng, cfg.dropout);
      b.norm2 = LayerNorm<T>(ps, p + ".norm2", cfg.dim);
      blocks_.push_back(std::move(b));
    }
  }

  /// `x` is (batch * tokens) x dim in token-major order.
  Tensor<T> operator()(const Tensor<T>& x, Index batch, Index tokens, const Mode& mode = {},
                       const std::vector<Index>* lengths = nullptr) const {
    Tensor<T> h = x;
    for (const auto& b : blocks_) {
      Tensor<T> att = multi_head_attention(b.q(h), b.k(h), b.v(h), batch, tokens, cfg_.heads, lengths);
      att = dropout(b.o(att), cfg_.dropout, mode.rng, mode.training);
      h = b.norm1(add(h, att));
      Tensor<T> ff = dropout(b.ff(h, mode), cfg_.dropout, mode.rng, mode.training);
      h = b.norm2(add(h, ff));
    }
    return h;
  }

  /// Single sequence convenience: x is tokens x dim.
  Tensor<T> operator()(const Tensor<T>& x, const Mode& mode = {}) const { return (*this)(x, 1, x.rows(), mode); }

  /// Attention weights of the first layer for a single sequence.
  Matrix<T> first_layer_weights(const Tensor<T>& x) const {
    NoGradGuard guard;
    Matrix<T> probs;
    const auto& b = blocks_.at(0);
    multi_head_attention(b.q(x), b.k(x), b.v(x), 1, x.rows(), cfg_.heads, nullptr, &probs);
    return probs;
  }

  const TransformerConfig& config() const { return cfg_; }

 private:
  struct Block {
    Linear<T> q, k, v, o;
    LayerNorm<T> norm1;
    Mlp<T> ff;
    LayerNorm<T> norm2;
  };
  TransformerConfig cfg_;
  std::vector<Block> blocks_;
};

/// Rows of token t from a token-major (batch * tokens) x d tensor.
template <typename T>
Tensor<T> token_rows(const Tensor<T>& x, Index batch, Index t) {
  return slice(x, 0, t * batch, batch);
}

}  // namespace gusd
