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

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "gusd/random.hpp"
#include "gusd/tensor.hpp"

namespace gusd {

template <typename T>
using SparseMatrix = Eigen::SparseMatrix<T, Eigen::RowMajor>;

namespace detail {

inline std::string shape_str(Index r, Index c) {
  return "[" + std::to_string(r) + "x" + std::to_string(c) + "]";
}

// Only exact-match and leading-batch (1 x n row) broadcast are supported.
template <typename T>
bool row_broadcast(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return false;
  if (b.rows() == 1 && b.cols() == a.cols()) return true;
  throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.rows(), a.cols()) + " vs " +
                   shape_str(b.rows(), b.cols()));
}

template <typename T>
std::vector<std::shared_ptr<Node<T>>> nodes(std::initializer_list<Tensor<T>> ts) {
  std::vector<std::shared_ptr<Node<T>>> out;
  out.reserve(ts.size());
  for (const auto& t : ts) out.push_back(t.node());
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  const bool bc = detail::row_broadcast(a, b, "add");
  Matrix<T> out = a.value();
  if (bc) {
    out.rowwise() += b.value().row(0);
  } else {
    out += b.value();
  }
  auto an = a.node(), bn = b.node();
  return detail::make_result<T>(std::move(out), "add", {an, bn}, [an, bn, bc](Node<T>& self) {
    detail::accumulate(*an, self.grad);
    if (bc) {
      detail::accumulate(*bn, self.grad.colwise().sum());
    } else {
      detail::accumulate(*bn, self.grad);
    }
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  const bool bc = detail::row_broadcast(a, b, "sub");
  Matrix<T> out = a.value();
  if (bc) {
    out.rowwise() -= b.value().row(0);
  } else {
    out -= b.value();
  }
  auto an = a.node(), bn = b.node();
  return detail::make_result<T>(std::move(out), "sub", {an, bn}, [an, bn, bc](Node<T>& self) {
    detail::accumulate(*an, self.grad);
    if (bc) {
      detail::accumulate(*bn, -self.grad.colwise().sum());
    } else {
      detail::accumulate(*bn, -self.grad);
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  const bool bc = detail::row_broadcast(a, b, "mul");
  Matrix<T> out = a.value();
  if (bc) {
    out.array().rowwise() *= b.value().row(0).array();
  } else {
    out.array() *= b.value().array();
  }
  auto an = a.node(), bn = b.node();
  return detail::make_result<T>(std::move(out), "mul", {an, bn}, [an, bn, bc](Node<T>& self) {
    if (bc) {
      if (an->requires_grad) {
        Matrix<T> ga = self.grad;
        ga.array().rowwise() *= bn->value.row(0).array();
        detail::accumulate(*an, ga);
      }
      if (bn->requires_grad) {
        detail::accumulate(*bn, (self.grad.array() * an->value.array()).matrix().colwise().sum());
      }
    } else {
      if (an->requires_grad) detail::accumulate(*an, (self.grad.array() * bn->value.array()).matrix());
      if (bn->requires_grad) detail::accumulate(*bn, (self.grad.array() * an->value.array()).matrix());
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  auto an = a.node();
  return detail::make_result<T>(a.value() * s, "scale", {an},
                                [an, s](Node<T>& self) { detail::accumulate(*an, self.grad * s); });
}

template <typename T>
Tensor<T> negate(const Tensor<T>& a) {
  auto an = a.node();
  return detail::make_result<T>(-a.value(), "negate", {an},
                                [an](Node<T>& self) { detail::accumulate(*an, -self.grad); });
}

template <typename T>
Tensor<T> exp(const Tensor<T>& a) {
  Matrix<T> out = a.value().array().exp().matrix();
  if (!out.allFinite()) throw NumericError("exp: non-finite result (overflow)");
  auto an = a.node();
  return detail::make_result<T>(std::move(out), "exp", {an}, [an](Node<T>& self) {
    detail::accumulate(*an, (self.grad.array() * self.value.array()).matrix());
  });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  Matrix<T> out = a.value().cwiseMax(T(0));
  auto an = a.node();
  return detail::make_result<T>(std::move(out), "relu", {an}, [an](Node<T>& self) {
    detail::accumulate(*an, (self.grad.array() * (an->value.array() > T(0)).template cast<T>()).matrix());
  });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& a, T slope) {
  Matrix<T> out = a.value().unaryExpr([slope](T x) { return x > T(0) ? x : slope * x; });
  auto an = a.node();
  return detail::make_result<T>(std::move(out), "leaky_relu", {an}, [an, slope](Node<T>& self) {
    Matrix<T> d = an->value.unaryExpr([slope](T x) { return x > T(0) ? T(1) : slope; });
    detail::accumulate(*an, (self.grad.array() * d.array()).matrix());
  });
}

/// Exact (erf-based) GELU.
template <typename T>
Tensor<T> gelu(const Tensor<T>& a) {
  const T inv_sqrt2 = T(1) / std::sqrt(T(2));
  Matrix<T> out = a.value().unaryExpr([inv_sqrt2](T x) { return T(0.5) * x * (T(1) + std::erf(x * inv_sqrt2)); });
  auto an = a.node();
  return detail::make_result<T>(std::move(out), "gelu", {an}, [an, inv_sqrt2](Node<T>& self) {
    const T inv_sqrt_2pi = T(1) / std::sqrt(T(2) * std::numbers::pi_v<T>);
    Matrix<T> d = an->value.unaryExpr([&](T x) {
      return T(0.5) * (T(1) + std::erf(x * inv_sqrt2)) + x * inv_sqrt_2pi * std::exp(T(-0.5) * x * x);
    });
    detail::accumulate(*an, (self.grad.array() * d.array()).matrix());
  });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  Matrix<T> out = a.value().unaryExpr([](T x) { return T(1) / (T(1) + std::exp(-x)); });
  auto an = a.node();
  return detail::make_result<T>(std::move(out), "sigmoid", {an}, [an](Node<T>& self) {
    detail::accumulate(*an, (self.grad.array() * self.value.array() * (T(1) - self.value.array())).matrix());
  });
}

/// Inverted dropout; identity outside training or when p == 0.
template <typename T>
Tensor<T> dropout(const Tensor<T>& a, double p, Rng* rng, bool training) {
  if (!training || p <= 0.0 || rng == nullptr) return a;
  if (p >= 1.0) throw ConfigError("dropout probability must be < 1");
  const T keep_scale = T(1.0 / (1.0 - p));
  Matrix<T> mask(a.rows(), a.cols());
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng->uniform() < p ? T(0) : keep_scale;
  Matrix<T> out = (a.value().array() * mask.array()).matrix();
  auto an = a.node();
  return detail::make_result<T>(std::move(out), "dropout", {an}, [an, mask = std::move(mask)](Node<T>& self) {
    detail::accumulate(*an, (self.grad.array() * mask.array()).matrix());
  });
}

// ---------------------------------------------------------------------------
// Linear algebra

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimension mismatch " + detail::shape_str(a.rows(), a.cols()) + " x " +
                     detail::shape_str(b.rows(), b.cols()));
  }
  Matrix<T> out = a.value() * b.value();
  auto an = a.node(), bn = b.node();
  return detail::make_result<T>(std::move(out), "matmul", {an, bn}, [an, bn](Node<T>& self) {
    if (an->requires_grad) detail::accumulate(*an, self.grad * bn->value.transpose());
    if (bn->requires_grad) detail::accumulate(*bn, an->value.transpose() * self.grad);
  });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  Matrix<T> out = a.value().transpose();
  auto an = a.node();
  return detail::make_result<T>(std::move(out), "transpose", {an}, [an](Node<T>& self) {
    detail::accumulate(*an, self.grad.transpose());
  });
}

/// Constant sparse operator applied to a dense tensor.
template <typename T>
Tensor<T> spmm(std::shared_ptr<const SparseMatrix<T>> s, const Tensor<T>& x) {
  if (s->cols() != x.rows()) throw ShapeError("spmm: inner dimension mismatch");
  Matrix<T> out = (*s) * x.value();
  auto xn = x.node();
  return detail::make_result<T>(std::move(out), "spmm", {xn}, [xn, s](Node<T>& self) {
    detail::accumulate(*xn, s->transpose() * self.grad);
  });
}

/// Per-row inner product, n x 1.
template <typename T>
Tensor<T> rowwise_dot(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("rowwise_dot: shape mismatch");
  Matrix<T> out = (a.value().array() * b.value().array()).rowwise().sum().matrix();
  auto an = a.node(), bn = b.node();
  return detail::make_result<T>(std::move(out), "rowwise_dot", {an, bn}, [an, bn](Node<T>& self) {
    if (an->requires_grad) {
      Matrix<T> g = bn->value;
      g.array().colwise() *= self.grad.col(0).array();
      detail::accumulate(*an, g);
    }
    if (bn->requires_grad) {
      Matrix<T> g = an->value;
      g.array().colwise() *= self.grad.col(0).array();
      detail::accumulate(*bn, g);
    }
  });
}

// ---------------------------------------------------------------------------
// Reductions and normalization

/// Softmax along `axis` (1: within each row, 0: within each column), with
/// max subtraction.
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int axis = 1) {
  if (axis != 0 && axis != 1) throw ShapeError("softmax: axis must be 0 or 1");
  Matrix<T> out(x.rows(), x.cols());
  if (axis == 1) {
    for (Index i = 0; i < x.rows(); ++i) {
      const T m = x.value().row(i).maxCoeff();
      out.row(i) = (x.value().row(i).array() - m).exp().matrix();
      out.row(i) /= out.row(i).sum();
    }
  } else {
    for (Index j = 0; j < x.cols(); ++j) {
      const T m = x.value().col(j).maxCoeff();
      out.col(j) = (x.value().col(j).array() - m).exp().matrix();
      out.col(j) /= out.col(j).sum();
    }
  }
  auto xn = x.node();
  return detail::make_result<T>(std::move(out), "softmax", {xn}, [xn, axis](Node<T>& self) {
    Matrix<T> gy = (self.grad.array() * self.value.array()).matrix();
    Matrix<T> g(gy.rows(), gy.cols());
    if (axis == 1) {
      Matrix<T> s = gy.rowwise().sum();
      g = gy - (self.value.array().colwise() * s.col(0).array()).matrix();
    } else {
      Matrix<T> s = gy.colwise().sum();
      g = gy - (self.value.array().rowwise() * s.row(0).array()).matrix();
    }
    detail::accumulate(*xn, g);
  });
}

template <typename T>
Tensor<T> sum_all(const Tensor<T>& x) {
  Matrix<T> out(1, 1);
  out(0, 0) = x.value().sum();
  auto xn = x.node();
  return detail::make_result<T>(std::move(out), "sum_all", {xn}, [xn](Node<T>& self) {
    detail::accumulate(*xn, Matrix<T>::Constant(xn->value.rows(), xn->value.cols(), self.grad(0, 0)));
  });
}

/// Sum along `axis` (0: over rows giving 1 x n, 1: over columns giving n x 1).
template <typename T>
Tensor<T> sum(const Tensor<T>& x, int axis) {
  if (axis != 0 && axis != 1) throw ShapeError("sum: axis must be 0 or 1");
  Matrix<T> out = axis == 0 ? Matrix<T>(x.value().colwise().sum()) : Matrix<T>(x.value().rowwise().sum());
  auto xn = x.node();
  return detail::make_result<T>(std::move(out), "sum", {xn}, [xn, axis](Node<T>& self) {
    Matrix<T> g(xn->value.rows(), xn->value.cols());
    if (axis == 0) {
      g.rowwise() = self.grad.row(0);
    } else {
      g.colwise() = self.grad.col(0);
    }
    detail::accumulate(*xn, g);
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x, int axis) {
  const Index n = axis == 0 ? x.rows() : x.cols();
  if (n == 0) throw ShapeError("mean over an empty axis");
  return scale(sum(x, axis), T(1) / static_cast<T>(n));
}

/// Row-wise layer normalization with affine parameters gamma, beta (1 x d).
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps = T(1e-5)) {
  const Index d = x.cols();
  if (gamma.rows() != 1 || gamma.cols() != d || beta.rows() != 1 || beta.cols() != d) {
    throw ShapeError("layer_norm: gamma/beta must be 1 x " + std::to_string(d));
  }
  Matrix<T> xhat(x.rows(), d);
  Eigen::Matrix<T, Eigen::Dynamic, 1> inv_std(x.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    const T mu = x.value().row(i).mean();
    auto centered = x.value().row(i).array() - mu;
    const T var = centered.square().mean();
    inv_std(i) = T(1) / std::sqrt(var + eps);
    xhat.row(i) = (centered * inv_std(i)).matrix();
  }
  Matrix<T> out = xhat;
  out.array().rowwise() *= gamma.value().row(0).array();
  out.rowwise() += beta.value().row(0);
  auto xn = x.node(), gn = gamma.node(), bn = beta.node();
  return detail::make_result<T>(
      std::move(out), "layer_norm", {xn, gn, bn},
      [xn, gn, bn, xhat = std::move(xhat), inv_std = std::move(inv_std), d](Node<T>& self) {
        if (gn->requires_grad) detail::accumulate(*gn, (self.grad.array() * xhat.array()).matrix().colwise().sum());
        if (bn->requires_grad) detail::accumulate(*bn, self.grad.colwise().sum());
        if (xn->requires_grad) {
          Matrix<T> gxhat = self.grad;
          gxhat.array().rowwise() *= gn->value.row(0).array();
          Matrix<T> gx(gxhat.rows(), d);
          for (Index i = 0; i < gxhat.rows(); ++i) {
            const T m1 = gxhat.row(i).mean();
            const T m2 = (gxhat.row(i).array() * xhat.row(i).array()).mean();
            gx.row(i) = ((gxhat.row(i).array() - m1 - xhat.row(i).array() * m2) * inv_std(i)).matrix();
          }
          detail::accumulate(*xn, gx);
        }
      });
}

// ---------------------------------------------------------------------------
// Shape manipulation

/// Concatenation along `axis` (1: features, row count preserved; 0: rows).
template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, int axis = 1) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  if (axis != 0 && axis != 1) throw ShapeError("concat: axis must be 0 or 1");
  Index rows = 0, cols = 0;
  for (const auto& p : parts) {
    if (axis == 1) {
      if (p.rows() != parts[0].rows()) throw ShapeError("concat: row count mismatch");
      cols += p.cols();
    } else {
      if (p.cols() != parts[0].cols()) throw ShapeError("concat: column count mismatch");
      rows += p.rows();
    }
  }
  if (axis == 1) {
    rows = parts[0].rows();
  } else {
    cols = parts[0].cols();
  }
  Matrix<T> out(rows, cols);
  std::vector<std::shared_ptr<Node<T>>> ns;
  std::vector<Index> offsets;
  Index off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    if (axis == 1) {
      out.middleCols(off, p.cols()) = p.value();
      off += p.cols();
    } else {
      out.middleRows(off, p.rows()) = p.value();
      off += p.rows();
    }
    ns.push_back(p.node());
  }
  auto captured = ns;
  return detail::make_result<T>(std::move(out), "concat", std::move(ns),
                                [captured, offsets, axis](Node<T>& self) {
                                  for (std::size_t k = 0; k < captured.size(); ++k) {
                                    auto& n = *captured[k];
                                    if (!n.requires_grad) continue;
                                    if (axis == 1) {
                                      detail::accumulate(n, self.grad.middleCols(offsets[k], n.value.cols()));
                                    } else {
                                      detail::accumulate(n, self.grad.middleRows(offsets[k], n.value.rows()));
                                    }
                                  }
                                });
}

template <typename T>
Tensor<T> slice(const Tensor<T>& x, int axis, Index start, Index length) {
  const Index extent = axis == 0 ? x.rows() : x.cols();
  if ((axis != 0 && axis != 1) || start < 0 || length < 0 || start + length > extent) {
    throw ShapeError("slice: range out of bounds");
  }
  Matrix<T> out = axis == 0 ? Matrix<T>(x.value().middleRows(start, length))
                            : Matrix<T>(x.value().middleCols(start, length));
  auto xn = x.node();
  return detail::make_result<T>(std::move(out), "slice", {xn}, [xn, axis, start, length](Node<T>& self) {
    Matrix<T> g = Matrix<T>::Zero(xn->value.rows(), xn->value.cols());
    if (axis == 0) {
      g.middleRows(start, length) = self.grad;
    } else {
      g.middleCols(start, length) = self.grad;
    }
    detail::accumulate(*xn, g);
  });
}

/// Row gather; index -1 yields a zero row.
template <typename T>
Tensor<T> gather_rows(const Tensor<T>& x, std::vector<Index> index) {
  Matrix<T> out(static_cast<Index>(index.size()), x.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    const Index r = index[i];
    if (r < -1 || r >= x.rows()) throw IntegrityError("gather_rows: index out of range");
    if (r < 0) {
      out.row(static_cast<Index>(i)).setZero();
    } else {
      out.row(static_cast<Index>(i)) = x.value().row(r);
    }
  }
  auto xn = x.node();
  return detail::make_result<T>(std::move(out), "gather_rows", {xn}, [xn, index = std::move(index)](Node<T>& self) {
    Matrix<T> g = Matrix<T>::Zero(xn->value.rows(), xn->value.cols());
    for (std::size_t i = 0; i < index.size(); ++i) {
      if (index[i] >= 0) g.row(index[i]) += self.grad.row(static_cast<Index>(i));
    }
    detail::accumulate(*xn, g);
  });
}

enum class Reduce { Sum, Mean, Max };

/// Reduces rows of `x` into `n_segments` rows; row i lands in segment[i].
/// Empty segments produce zero rows.
template <typename T>
Tensor<T> segment_reduce(const Tensor<T>& x, std::vector<Index> segment, Index n_segments, Reduce kind) {
  if (static_cast<Index>(segment.size()) != x.rows()) throw ShapeError("segment_reduce: one segment id per row");
  const Index d = x.cols();
  Matrix<T> out = Matrix<T>::Zero(n_segments, d);
  std::vector<Index> count(static_cast<std::size_t>(n_segments), 0);
  std::vector<Index> argmax;  // n_segments * d, winning row
  if (kind == Reduce::Max) argmax.assign(static_cast<std::size_t>(n_segments * d), -1);
  for (Index i = 0; i < x.rows(); ++i) {
    const Index s = segment[static_cast<std::size_t>(i)];
    if (s < 0 || s >= n_segments) throw IntegrityError("segment_reduce: segment id out of range");
    ++count[static_cast<std::size_t>(s)];
    if (kind == Reduce::Max) {
      for (Index k = 0; k < d; ++k) {
        Index& w = argmax[static_cast<std::size_t>(s * d + k)];
        if (w < 0 || x.value()(i, k) > out(s, k)) {
          out(s, k) = x.value()(i, k);
          w = i;
        }
      }
    } else {
      out.row(s) += x.value().row(i);
    }
  }
  if (kind == Reduce::Mean) {
    for (Index s = 0; s < n_segments; ++s) {
      if (count[static_cast<std::size_t>(s)] > 0) out.row(s) /= static_cast<T>(count[static_cast<std::size_t>(s)]);
    }
  }
  auto xn = x.node();
  return detail::make_result<T>(
      std::move(out), "segment_reduce", {xn},
      [xn, segment = std::move(segment), count = std::move(count), argmax = std::move(argmax), kind, d](Node<T>& self) {
        Matrix<T> g = Matrix<T>::Zero(xn->value.rows(), d);
        if (kind == Reduce::Max) {
          for (std::size_t s = 0; s < count.size(); ++s) {
            for (Index k = 0; k < d; ++k) {
              const Index w = argmax[s * static_cast<std::size_t>(d) + static_cast<std::size_t>(k)];
              if (w >= 0) g(w, k) += self.grad(static_cast<Index>(s), k);
            }
          }
        } else {
          for (Index i = 0; i < g.rows(); ++i) {
            const Index s = segment[static_cast<std::size_t>(i)];
            if (kind == Reduce::Mean) {
              g.row(i) = self.grad.row(s) / static_cast<T>(count[static_cast<std::size_t>(s)]);
            } else {
              g.row(i) = self.grad.row(s);
            }
          }
        }
        detail::accumulate(*xn, g);
      });
}

/// Scales row i of `x` by the scalar w(i, 0).
template <typename T>
Tensor<T> scale_rows(const Tensor<T>& x, const Tensor<T>& w) {
  if (w.cols() != 1 || w.rows() != x.rows()) throw ShapeError("scale_rows: weights must be n x 1");
  Matrix<T> out = x.value();
  out.array().colwise() *= w.value().col(0).array();
  auto xn = x.node(), wn = w.node();
  return detail::make_result<T>(std::move(out), "scale_rows", {xn, wn}, [xn, wn](Node<T>& self) {
    if (xn->requires_grad) {
      Matrix<T> g = self.grad;
      g.array().colwise() *= wn->value.col(0).array();
      detail::accumulate(*xn, g);
    }
    if (wn->requires_grad) {
      detail::accumulate(*wn, (self.grad.array() * xn->value.array()).rowwise().sum().matrix());
    }
  });
}

/// Softmax of an n x 1 score column within each segment.
template <typename T>
Tensor<T> segment_softmax(const Tensor<T>& scores, std::vector<Index> segment, Index n_segments) {
  if (scores.cols() != 1 || static_cast<Index>(segment.size()) != scores.rows()) {
    throw ShapeError("segment_softmax: expects n x 1 scores and one segment id per row");
  }
  const Index n = scores.rows();
  std::vector<T> mx(static_cast<std::size_t>(n_segments), -std::numeric_limits<T>::infinity());
  std::vector<T> z(static_cast<std::size_t>(n_segments), T(0));
  for (Index i = 0; i < n; ++i) {
    const Index s = segment[static_cast<std::size_t>(i)];
    if (s < 0 || s >= n_segments) throw IntegrityError("segment_softmax: segment id out of range");
    mx[static_cast<std::size_t>(s)] = std::max(mx[static_cast<std::size_t>(s)], scores.value()(i, 0));
  }
  Matrix<T> out(n, 1);
  for (Index i = 0; i < n; ++i) {
    const auto s = static_cast<std::size_t>(segment[static_cast<std::size_t>(i)]);
    out(i, 0) = std::exp(scores.value()(i, 0) - mx[s]);
    z[s] += out(i, 0);
  }
  for (Index i = 0; i < n; ++i) out(i, 0) /= z[static_cast<std::size_t>(segment[static_cast<std::size_t>(i)])];
  auto sn = scores.node();
  return detail::make_result<T>(std::move(out), "segment_softmax", {sn},
                                [sn, segment = std::move(segment), n_segments](Node<T>& self) {
                                  std::vector<T> dot(static_cast<std::size_t>(n_segments), T(0));
                                  const Index n = self.value.rows();
                                  for (Index i = 0; i < n; ++i) {
                                    dot[static_cast<std::size_t>(segment[static_cast<std::size_t>(i)])] += self.grad(i, 0) * self.value(i, 0);
                                  }
                                  Matrix<T> g(n, 1);
                                  for (Index i = 0; i < n; ++i) {
                                    g(i, 0) = self.value(i, 0) * (self.grad(i, 0) - dot[static_cast<std::size_t>(segment[static_cast<std::size_t>(i)])]);
                                  }
                                  detail::accumulate(*sn, g);
                                });
}

// ---------------------------------------------------------------------------
// Losses

/// Class-weighted softmax cross-entropy, summed over rows (or averaged).
template <typename T>
Tensor<T> weighted_cross_entropy(const Tensor<T>& logits, std::span<const int> labels,
                                 std::span<const double> class_weight, bool average = false) {
  const Index n = logits.rows(), c = logits.cols();
  if (static_cast<Index>(labels.size()) != n) throw ShapeError("cross_entropy: one label per row");
  if (static_cast<Index>(class_weight.size()) != c) throw ShapeError("cross_entropy: one weight per class");
  Matrix<T> probs(n, c);
  T total = 0;
  T weight_sum = 0;
  std::vector<int> y(labels.begin(), labels.end());
  for (Index i = 0; i < n; ++i) {
    const int yi = y[static_cast<std::size_t>(i)];
    if (yi < 0 || yi >= c) throw IntegrityError("cross_entropy: label " + std::to_string(yi) + " outside class range");
    const T m = logits.value().row(i).maxCoeff();
    auto e = (logits.value().row(i).array() - m).exp();
    const T z = e.sum();
    probs.row(i) = (e / z).matrix();
    const T w = static_cast<T>(class_weight[static_cast<std::size_t>(yi)]);
    total += w * (std::log(z) + m - logits.value()(i, yi));
    weight_sum += w;
  }
  const T denom = average ? std::max(weight_sum, std::numeric_limits<T>::min()) : T(1);
  Matrix<T> out(1, 1);
  out(0, 0) = total / denom;
  std::vector<double> cw(class_weight.begin(), class_weight.end());
  auto ln = logits.node();
  return detail::make_result<T>(std::move(out), "weighted_cross_entropy", {ln},
                                [ln, probs = std::move(probs), y = std::move(y), cw = std::move(cw), denom](Node<T>& self) {
                                  Matrix<T> g = probs;
                                  for (Index i = 0; i < g.rows(); ++i) {
                                    const int yi = y[static_cast<std::size_t>(i)];
                                    g(i, yi) -= T(1);
                                    g.row(i) *= static_cast<T>(cw[static_cast<std::size_t>(yi)]) * self.grad(0, 0) / denom;
                                  }
                                  detail::accumulate(*ln, g);
                                });
}

/// Mean binary cross-entropy on logits (n x 1).
template <typename T>
Tensor<T> bce_with_logits(const Tensor<T>& logits, std::span<const T> targets) {
  const Index n = logits.rows();
  if (logits.cols() != 1 || static_cast<Index>(targets.size()) != n) throw ShapeError("bce: expects n x 1 logits");
  T total = 0;
  Matrix<T> sig(n, 1);
  for (Index i = 0; i < n; ++i) {
    const T x = logits.value()(i, 0);
    const T y = targets[static_cast<std::size_t>(i)];
    total += std::max(x, T(0)) - x * y + std::log1p(std::exp(-std::abs(x)));
    sig(i, 0) = T(1) / (T(1) + std::exp(-x));
  }
  Matrix<T> out(1, 1);
  out(0, 0) = total / static_cast<T>(n);
  std::vector<T> y(targets.begin(), targets.end());
  auto ln = logits.node();
  return detail::make_result<T>(std::move(out), "bce_with_logits", {ln},
                                [ln, sig = std::move(sig), y = std::move(y), n](Node<T>& self) {
                                  Matrix<T> g(n, 1);
                                  for (Index i = 0; i < n; ++i) {
                                    g(i, 0) = (sig(i, 0) - y[static_cast<std::size_t>(i)]) * self.grad(0, 0) / static_cast<T>(n);
                                  }
                                  detail::accumulate(*ln, g);
                                });
}

}  // namespace gusd
