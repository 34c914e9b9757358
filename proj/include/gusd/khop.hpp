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
#include <memory>
#include <utility>
#include <vector>

#include "gusd/csr.hpp"
#include "gusd/graph.hpp"

namespace gusd {

using EdgePairs = std::vector<std::pair<std::int64_t, std::int64_t>>;

/// Per-hop adjacency sets A_1..A_K, each stored as destination-keyed
/// in-neighbour lists.
struct HopAdjacency {
  int K = 0;
  std::vector<std::shared_ptr<const Csr>> hops;

  const Csr& hop(int h) const { return *hops.at(static_cast<std::size_t>(h - 1)); }
  std::int64_t num_nodes() const { return hops.empty() ? 0 : hops.front()->num_nodes(); }

  bool contains(int h, std::int64_t src, std::int64_t dst) const;

  /// Smallest h <= K with (src, dst) in A_h, or -1. Meaningful as a
  /// minimum-distance map only for exact stratifications.
  int distance(std::int64_t src, std::int64_t dst) const;

  /// Sorted (src, dst) pairs of hop h.
  EdgePairs pairs(int h) const;

  bool operator==(const HopAdjacency& other) const;
};

/// Exact stratification by shortest directed distance: (i, j) is in A_h iff
/// the shortest path from i to j has length exactly h. Computed as walk
/// reachability A^k = A^{k-1} x A with pairs admitted only while their
/// recorded distance exceeds k (diagonal distance is 0).
HopAdjacency khop_exact(std::int64_t n, const EdgePairs& edges, int K);
HopAdjacency khop_exact(const HeteroGraph& graph, int K);

/// Walk reachability in exactly h steps regardless of shorter paths
/// (support of the boolean h-th adjacency power). Superset of the exact
/// sets; may contain the diagonal.
HopAdjacency khop_approx(std::int64_t n, const EdgePairs& edges, int K);
HopAdjacency khop_approx(const HeteroGraph& graph, int K);

/// Keeps ceil(r * deg) uniformly chosen in-neighbours per destination for
/// every hop h > 1; hop 1 is untouched. Deterministic given `seed`.
HopAdjacency sample_khop(const HopAdjacency& hops, double r, std::uint64_t seed);

}  // namespace gusd
