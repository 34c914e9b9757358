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
#include <vector>

namespace gusd {

/// Compressed adjacency keyed by destination: the in-neighbours of node v
/// are sources[offsets[v] .. offsets[v+1]), sorted ascending.
struct Csr {
  std::vector<std::int64_t> offsets{0};
  std::vector<std::int64_t> sources;

  std::int64_t num_nodes() const { return static_cast<std::int64_t>(offsets.size()) - 1; }
  std::int64_t num_edges() const { return static_cast<std::int64_t>(sources.size()); }
  std::int64_t degree(std::int64_t v) const { return offsets[v + 1] - offsets[v]; }

  bool operator==(const Csr&) const = default;
};

}  // namespace gusd
