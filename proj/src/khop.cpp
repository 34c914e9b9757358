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
#include "gusd/khop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gusd/errors.hpp"
#include "gusd/random.hpp"

namespace gusd {
namespace {

// Out-neighbour lists, sorted.
std::vector<std::vector<std::int64_t>> out_lists(std::int64_t n, const EdgePairs& edges) {
  std::vector<std::vector<std::int64_t>> out(static_cast<std::size_t>(n));
  for (const auto& [s, d] : edges) {
    if (s < 0 || s >= n || d < 0 || d >= n) throw IntegrityError("edge endpoint out of range");
    out[static_cast<std::size_t>(s)].push_back(d);
  }
  for (auto& l : out) {
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
  }
  return out;
}

HopAdjacency stratify(std::int64_t n, const EdgePairs& edges, int K, bool exact) {
  if (K < 1) throw ConfigError("k-hop: K must be >= 1");
  const auto out = out_lists(n, edges);
  constexpr int kInf = std::numeric_limits<int>::max();
  std::vector<EdgePairs> per_hop(static_cast<std::size_t>(K));
  std::vector<int> dist(static_cast<std::size_t>(n), kInf);
  std::vector<std::int64_t> walk_stamp(static_cast<std::size_t>(n), -1);
  std::vector<std::int64_t> frontier, next, touched;
  for (std::int64_t i = 0; i < n; ++i) {
    touched.clear();
    dist[static_cast<std::size_t>(i)] = 0;
    touched.push_back(i);
    // Hop 1 is the raw edge set.
    frontier = out[static_cast<std::size_t>(i)];
    for (auto j : frontier) {
      per_hop[0].emplace_back(i, j);
      if (dist[static_cast<std::size_t>(j)] > 1) {
        dist[static_cast<std::size_t>(j)] = 1;
        touched.push_back(j);
      }
    }
    for (int k = 2; k <= K; ++k) {
      // Row i of A^k: everything reachable by a walk of exactly k steps.
      next.clear();
      const std::int64_t stamp = i * (K + 1) + k;
      for (auto u : frontier) {
        for (auto j : out[static_cast<std::size_t>(u)]) {
          if (walk_stamp[static_cast<std::size_t>(j)] != stamp) {
            walk_stamp[static_cast<std::size_t>(j)] = stamp;
            next.push_back(j);
          }
        }
      }
      std::sort(next.begin(), next.end());
      for (auto j : next) {
        int& dij = dist[static_cast<std::size_t>(j)];
        if (!exact) {
          per_hop[static_cast<std::size_t>(k - 1)].emplace_back(i, j);
        } else if (dij > k) {
          per_hop[static_cast<std::size_t>(k - 1)].emplace_back(i, j);
        }
        if (dij > k) {
          dij = k;
          touched.push_back(j);
        }
      }
      frontier.swap(next);
      if (frontier.empty()) break;
    }
    for (auto t : touched) dist[static_cast<std::size_t>(t)] = kInf;
  }
  HopAdjacency result;
  result.K = K;
  for (auto& pairs : per_hop) result.hops.push_back(std::make_shared<const Csr>(csr_from_pairs(n, std::move(pairs))));
  return result;
}

}  // namespace

bool HopAdjacency::contains(int h, std::int64_t src, std::int64_t dst) const {
  const Csr& c = hop(h);
  auto b = c.sources.begin() + c.offsets[static_cast<std::size_t>(dst)];
  auto e = c.sources.begin() + c.offsets[static_cast<std::size_t>(dst + 1)];
  return std::binary_search(b, e, src);
}

int HopAdjacency::distance(std::int64_t src, std::int64_t dst) const {
  if (src == dst) return 0;
  for (int h = 1; h <= K; ++h) {
    if (contains(h, src, dst)) return h;
  }
  return -1;
}

EdgePairs HopAdjacency::pairs(int h) const {
  const Csr& c = hop(h);
  EdgePairs out;
  out.reserve(c.sources.size());
  for (std::int64_t d = 0; d < c.num_nodes(); ++d) {
    for (auto k = c.offsets[static_cast<std::size_t>(d)]; k < c.offsets[static_cast<std::size_t>(d + 1)]; ++k) {
      out.emplace_back(c.sources[static_cast<std::size_t>(k)], d);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool HopAdjacency::operator==(const HopAdjacency& other) const {
  if (K != other.K || hops.size() != other.hops.size()) return false;
  for (std::size_t h = 0; h < hops.size(); ++h) {
    if (!(*hops[h] == *other.hops[h])) return false;
  }
  return true;
}

HopAdjacency khop_exact(std::int64_t n, const EdgePairs& edges, int K) { return stratify(n, edges, K, true); }
HopAdjacency khop_exact(const HeteroGraph& graph, int K) {
  return khop_exact(graph.num_nodes(), graph.edge_pairs(), K);
}

HopAdjacency khop_approx(std::int64_t n, const EdgePairs& edges, int K) { return stratify(n, edges, K, false); }
HopAdjacency khop_approx(const HeteroGraph& graph, int K) {
  return khop_approx(graph.num_nodes(), graph.edge_pairs(), K);
}

HopAdjacency sample_khop(const HopAdjacency& hops, double r, std::uint64_t seed) {
  if (!(r > 0.0 && r <= 1.0)) throw ConfigError("sample_khop: ratio must lie in (0, 1]");
  if (r == 1.0) return hops;
  HopAdjacency out;
  out.K = hops.K;
  Rng rng(seed);
  for (int h = 1; h <= hops.K; ++h) {
    const Csr& src = hops.hop(h);
    if (h == 1) {
      out.hops.push_back(hops.hops[0]);
      continue;
    }
    Csr kept;
    kept.offsets.assign(src.offsets.size(), 0);
    std::vector<std::int64_t> pool;
    for (std::int64_t d = 0; d < src.num_nodes(); ++d) {
      const auto b = src.offsets[static_cast<std::size_t>(d)], e = src.offsets[static_cast<std::size_t>(d + 1)];
      const std::int64_t deg = e - b;
      const auto keep = static_cast<std::int64_t>(std::ceil(r * static_cast<double>(deg) - 1e-9));
      pool.assign(src.sources.begin() + b, src.sources.begin() + e);
      // Partial Fisher-Yates: the first `keep` slots are a uniform sample.
      for (std::int64_t i = 0; i < keep; ++i) {
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(i + rng.below(deg - i))]);
      }
      std::sort(pool.begin(), pool.begin() + keep);
      kept.sources.insert(kept.sources.end(), pool.begin(), pool.begin() + keep);
      kept.offsets[static_cast<std::size_t>(d + 1)] = static_cast<std::int64_t>(kept.sources.size());
    }
    out.hops.push_back(std::make_shared<const Csr>(std::move(kept)));
  }
  return out;
}

}  // namespace gusd
