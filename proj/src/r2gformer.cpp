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
#include "gusd/r2gformer.hpp"

#include "gusd/errors.hpp"

namespace gusd {

std::string to_string(HopAggregator a) {
  switch (a) {
    case HopAggregator::Sum: return "sum";
    case HopAggregator::Concat: return "concat";
    case HopAggregator::Trm: return "trm";
  }
  return "?";
}

std::string to_string(GenrePooling p) {
  switch (p) {
    case GenrePooling::Mean: return "mean";
    case GenrePooling::Sum: return "sum";
    case GenrePooling::Max: return "max";
    case GenrePooling::Trm: return "trm";
  }
  return "?";
}

HopAggregator parse_hop_aggregator(const std::string& s) {
  if (s == "sum") return HopAggregator::Sum;
  if (s == "concat") return HopAggregator::Concat;
  if (s == "trm") return HopAggregator::Trm;
  throw ConfigError("unknown hop aggregator '" + s + "'");
}

GenrePooling parse_genre_pooling(const std::string& s) {
  if (s == "mean") return GenrePooling::Mean;
  if (s == "sum") return GenrePooling::Sum;
  if (s == "max") return GenrePooling::Max;
  if (s == "trm") return GenrePooling::Trm;
  throw ConfigError("unknown genre pooling '" + s + "'");
}

void R2GConfig::validate() const {
  if (K < 1) throw ConfigError("r2gformer: K must be >= 1");
  if (alpha < 0) throw ConfigError("r2gformer: alpha must be >= 0");
  if (layers < 0) throw ConfigError("r2gformer: layers must be >= 0");
  if (dim < 1 || gat_heads < 1) throw ConfigError("r2gformer: dim and heads must be >= 1");
  if (dim % trm_heads != 0) throw ConfigError("r2gformer: dim must be divisible by TRM heads");
}

void GenreIndex::validate() const {
  std::vector<int> count(static_cast<std::size_t>(n_nodes), 0);
  for (std::size_t k = 0; k < node.size(); ++k) {
    if (node[k] < 0 || node[k] >= n_nodes) throw IntegrityError("genre index: node out of range");
    if (genre[k] < 0 || genre[k] >= n_genres) throw IntegrityError("genre index: genre out of range");
    if (node[k] < first_item) throw IntegrityError("genre index: user node " + std::to_string(node[k]) + " has a genre");
    ++count[static_cast<std::size_t>(node[k])];
  }
  for (std::int64_t v = first_item; v < n_nodes; ++v) {
    if (count[static_cast<std::size_t>(v)] == 0) throw IntegrityError("node " + std::to_string(v) + " has an empty genre set");
  }
}

GenreIndex genre_index(const HeteroGraph& graph) {
  GenreIndex gi;
  gi.n_nodes = graph.num_nodes();
  gi.first_item = graph.num_users();
  gi.n_genres = graph.num_genres();
  for (const auto& [v, g] : graph.genre_memberships()) {
    gi.node.push_back(v);
    gi.genre.push_back(g);
  }
  gi.validate();
  return gi;
}

}  // namespace gusd
