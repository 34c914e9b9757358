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
#include <vector>

#include "gusd/csr.hpp"
#include "gusd/ops.hpp"

namespace gusd {

/// Scaled dot-product multi-head attention over `batch` independent
/// sequences of `tokens` rows each. Rows are token-major: token t of
/// sequence b lives at row t * batch + b. Optional `lengths` masks keys at
/// positions >= lengths[b]. When `probs_out` is non-null it receives the
/// attention weights as (batch * heads * tokens) x tokens.
template <typename T>
Tensor<T> multi_head_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, Index batch,
                               Index tokens, Index heads, const std::vector<Index>* lengths = nullptr,
                               Matrix<T>* probs_out = nullptr) {
  const Index d = q.cols();
  if (heads <= 0 || d % heads != 0) throw ConfigError("attention: width must be divisible by head count");
  if (q.rows() != batch * tokens || k.rows() != q.rows() || v.rows() != q.rows() || k.cols() != d ||
      v.cols() != d) {
    throw ShapeError("attention: q/k/v must all be (batch*tokens) x d");
  }
  if (lengths != nullptr && static_cast<Index>(lengths->size()) != batch) {
    throw ShapeError("attention: one length per sequence");
  }
  const Index dh = d / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  auto probs = std::make_shared<std::vector<T>>(static_cast<std::size_t>(batch * heads * tokens * tokens), T(0));
  std::vector<Index> len(static_cast<std::size_t>(batch), tokens);
  if (lengths != nullptr) {
    for (Index b = 0; b < batch; ++b) {
      const Index l = (*lengths)[static_cast<std::size_t>(b)];
      if (l < 1 || l > tokens) throw ShapeError("attention: sequence length out of range");
      len[static_cast<std::size_t>(b)] = l;
    }
  }
  const Matrix<T>& Q = q.value();
  const Matrix<T>& K = k.value();
  const Matrix<T>& V = v.value();
  Matrix<T> out = Matrix<T>::Zero(q.rows(), d);
  std::vector<T> row(static_cast<std::size_t>(tokens));
  for (Index b = 0; b < batch; ++b) {
    const Index lb = len[static_cast<std::size_t>(b)];
    for (Index h = 0; h < heads; ++h) {
      for (Index t1 = 0; t1 < tokens; ++t1) {
        const Index r1 = t1 * batch + b;
        T mx = -std::numeric_limits<T>::infinity();
        for (Index t2 = 0; t2 < lb; ++t2) {
          const Index r2 = t2 * batch + b;
          row[t2] = Q.row(r1).segment(h * dh, dh).dot(K.row(r2).segment(h * dh, dh)) * scale;
          mx = std::max(mx, row[t2]);
        }
        T z = 0;
        for (Index t2 = 0; t2 < lb; ++t2) {
          row[t2] = std::exp(row[t2] - mx);
          z += row[t2];
        }
        T* p = probs->data() + ((b * heads + h) * tokens + t1) * tokens;
        for (Index t2 = 0; t2 < lb; ++t2) {
          p[t2] = row[t2] / z;
          out.row(r1).segment(h * dh, dh) += p[t2] * V.row(t2 * batch + b).segment(h * dh, dh);
        }
      }
    }
  }
  if (probs_out != nullptr) {
    *probs_out = Eigen::Map<Matrix<T>>(probs->data(), batch * heads * tokens, tokens);
  }
  auto qn = q.node(), kn = k.node(), vn = v.node();
  return detail::make_result<T>(
      std::move(out), "multi_head_attention", {qn, kn, vn},
      [qn, kn, vn, probs, len = std::move(len), batch, tokens, heads, dh, scale](Node<T>& self) {
        const Matrix<T>& Q = qn->value;
        const Matrix<T>& K = kn->value;
        const Matrix<T>& V = vn->value;
        const Matrix<T>& G = self.grad;
        Matrix<T> gq = Matrix<T>::Zero(Q.rows(), Q.cols());
        Matrix<T> gk = Matrix<T>::Zero(K.rows(), K.cols());
        Matrix<T> gv = Matrix<T>::Zero(V.rows(), V.cols());
        std::vector<T> dp(static_cast<std::size_t>(tokens));
        for (Index b = 0; b < batch; ++b) {
          const Index lb = len[static_cast<std::size_t>(b)];
          for (Index h = 0; h < heads; ++h) {
            for (Index t1 = 0; t1 < tokens; ++t1) {
              const Index r1 = t1 * batch + b;
              const T* p = probs->data() + ((b * heads + h) * tokens + t1) * tokens;
              auto g1 = G.row(r1).segment(h * dh, dh);
              T dot = 0;
              for (Index t2 = 0; t2 < lb; ++t2) {
                const Index r2 = t2 * batch + b;
                gv.row(r2).segment(h * dh, dh) += p[t2] * g1;
                dp[t2] = g1.dot(V.row(r2).segment(h * dh, dh));
                dot += p[t2] * dp[t2];
              }
              for (Index t2 = 0; t2 < lb; ++t2) {
                const Index r2 = t2 * batch + b;
                const T ds = p[t2] * (dp[t2] - dot) * scale;
                gq.row(r1).segment(h * dh, dh) += ds * K.row(r2).segment(h * dh, dh);
                gk.row(r2).segment(h * dh, dh) += ds * Q.row(r1).segment(h * dh, dh);
              }
            }
          }
        }
        detail::accumulate(*qn, gq);
        detail::accumulate(*kn, gk);
        detail::accumulate(*vn, gv);
      });
}

/// Multi-head graph attention restricted to the in-neighbours listed in
/// `adj`. `projected` holds W x for every node as heads contiguous blocks of
/// width d; `att_dst` / `att_src` are heads x d. For destination i and source
/// j the logit is leaky_relu(att_dst[h] . Wx_i + att_src[h] . Wx_j); output
/// row i is the head mean of the attention-weighted source rows, or zero
/// when i has no in-neighbours.
template <typename T>
Tensor<T> graph_attention(const Tensor<T>& projected, const Tensor<T>& att_dst, const Tensor<T>& att_src,
                          std::shared_ptr<const Csr> adj, T slope = T(0.2),
                          std::vector<T>* weights_out = nullptr) {
  const Index heads = att_dst.rows();
  const Index d = att_dst.cols();
  const Index n = projected.rows();
  if (att_src.rows() != heads || att_src.cols() != d || projected.cols() != heads * d) {
    throw ShapeError("graph_attention: projection width must equal heads * d");
  }
  if (adj->num_nodes() != n) throw IntegrityError("graph_attention: adjacency/node count mismatch");
  for (auto s : adj->sources) {
    if (s < 0 || s >= n) throw IntegrityError("graph_attention: source index out of range");
  }
  using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Matrix<T>& H = projected.value();
  // Row-major working copies: the edge loops read whole rows of H at a time.
  const RowMatrix Hr = H;
  auto s_dst = std::make_shared<RowMatrix>(n, heads);
  auto s_src = std::make_shared<RowMatrix>(n, heads);
  for (Index h = 0; h < heads; ++h) {
    s_dst->col(h) = H.middleCols(h * d, d) * att_dst.value().row(h).transpose();
    s_src->col(h) = H.middleCols(h * d, d) * att_src.value().row(h).transpose();
  }
  const Index m = adj->num_edges();
  const Index w = heads * d;
  auto alpha = std::make_shared<std::vector<T>>(static_cast<std::size_t>(m * heads));
  RowMatrix out_r = RowMatrix::Zero(n, d);
  const T inv_heads = T(1) / static_cast<T>(heads);
  std::vector<T> mx(static_cast<std::size_t>(heads)), z(static_cast<std::size_t>(heads));
  for (Index i = 0; i < n; ++i) {
    const Index begin = adj->offsets[i], end = adj->offsets[i + 1];
    if (begin == end) continue;
    const T* sd = s_dst->data() + i * heads;
    std::fill(mx.begin(), mx.end(), -std::numeric_limits<T>::infinity());
    std::fill(z.begin(), z.end(), T(0));
    for (Index e = begin; e < end; ++e) {
      const T* ss = s_src->data() + adj->sources[e] * heads;
      T* a = alpha->data() + e * heads;
      for (Index h = 0; h < heads; ++h) {
        const T pre = sd[h] + ss[h];
        a[h] = pre > T(0) ? pre : slope * pre;
        mx[h] = std::max(mx[h], a[h]);
      }
    }
    for (Index e = begin; e < end; ++e) {
      T* a = alpha->data() + e * heads;
      for (Index h = 0; h < heads; ++h) {
        a[h] = std::exp(a[h] - mx[h]);
        z[h] += a[h];
      }
    }
    auto o = out_r.row(i);
    for (Index e = begin; e < end; ++e) {
      T* a = alpha->data() + e * heads;
      for (Index h = 0; h < heads; ++h) a[h] /= z[h];
      // Heads of source row j viewed as heads x d; the output row is a^T Hj / heads.
      const Eigen::Map<const RowMatrix> hj(Hr.data() + adj->sources[e] * w, heads, d);
      o.noalias() += inv_heads * (Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(a, heads) * hj);
    }
  }
  Matrix<T> out = out_r;
  if (weights_out != nullptr) *weights_out = *alpha;
  auto hn = projected.node(), dn = att_dst.node(), sn = att_src.node();
  return detail::make_result<T>(
      std::move(out), "graph_attention", {hn, dn, sn},
      [hn, dn, sn, adj, alpha, s_dst, s_src, heads, d, slope, inv_heads](Node<T>& self) {
        using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        const Matrix<T>& H = hn->value;
        const RowMatrix Hr = H;
        const RowMatrix G = self.grad;
        const Index n = H.rows();
        const Index w = heads * d;
        RowMatrix gH = RowMatrix::Zero(n, w);
        RowMatrix g_sdst = RowMatrix::Zero(n, heads), g_ssrc = RowMatrix::Zero(n, heads);
        std::vector<T> da, dot(static_cast<std::size_t>(heads));
        for (Index i = 0; i < n; ++i) {
          const Index begin = adj->offsets[i], end = adj->offsets[i + 1];
          if (begin == end) continue;
          da.resize(static_cast<std::size_t>((end - begin) * heads));
          std::fill(dot.begin(), dot.end(), T(0));
          using ColVector = Eigen::Matrix<T, Eigen::Dynamic, 1>;
          const Eigen::Map<const ColVector> gi(G.data() + i * d, d);
          for (Index e = begin; e < end; ++e) {
            const Index j = adj->sources[e];
            const Eigen::Map<const ColVector> a(alpha->data() + e * heads, heads);
            const Eigen::Map<const RowMatrix> hj(Hr.data() + j * w, heads, d);
            Eigen::Map<RowMatrix> gj(gH.data() + j * w, heads, d);
            Eigen::Map<ColVector> dae(da.data() + (e - begin) * heads, heads);
            gj.noalias() += (inv_heads * a) * gi.transpose();
            dae.noalias() = inv_heads * (hj * gi);
            for (Index h = 0; h < heads; ++h) dot[h] += a[h] * dae[h];
          }
          const T* sd = s_dst->data() + i * heads;
          T* gd = g_sdst.data() + i * heads;
          for (Index e = begin; e < end; ++e) {
            const Index j = adj->sources[e];
            const T* a = alpha->data() + e * heads;
            const T* ss = s_src->data() + j * heads;
            const T* dae = da.data() + (e - begin) * heads;
            T* gs = g_ssrc.data() + j * heads;
            for (Index h = 0; h < heads; ++h) {
              T de = a[h] * (dae[h] - dot[h]);
              if (!(sd[h] + ss[h] > T(0))) de *= slope;
              gd[h] += de;
              gs[h] += de;
            }
          }
        }
        Matrix<T> gHc = gH;
        Matrix<T> g_att_dst(heads, d), g_att_src(heads, d);
        for (Index h = 0; h < heads; ++h) {
          gHc.middleCols(h * d, d) += g_sdst.col(h) * dn->value.row(h) + g_ssrc.col(h) * sn->value.row(h);
          g_att_dst.row(h) = g_sdst.col(h).transpose() * H.middleCols(h * d, d);
          g_att_src.row(h) = g_ssrc.col(h).transpose() * H.middleCols(h * d, d);
        }
        detail::accumulate(*hn, gHc);
        detail::accumulate(*dn, g_att_dst);
        detail::accumulate(*sn, g_att_src);
      });
}

}  // namespace gusd
