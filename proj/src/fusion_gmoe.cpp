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
#include "gusd/fusion_gmoe.hpp"

#include <algorithm>

namespace gusd {

GenreRouting GenreRouting::build(const std::vector<std::vector<int>>& genres, int n_genres, Index max_slots) {
  GenreRouting r;
  r.rows = static_cast<Index>(genres.size());
  r.n_genres = n_genres;
  r.max_slots = max_slots;
  r.members.assign(static_cast<std::size_t>(n_genres), {});
  r.count.resize(genres.size());
  std::vector<std::vector<int>> sorted(genres.size());
  for (std::size_t b = 0; b < genres.size(); ++b) {
    auto g = genres[b];
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    if (g.empty()) throw IntegrityError("routing: review row " + std::to_string(b) + " has an empty genre set");
    if (g.front() < 0 || g.back() >= n_genres) throw IntegrityError("routing: genre out of range in row " + std::to_string(b));
    if (static_cast<Index>(g.size()) > max_slots) {
      throw ConfigError("routing: row " + std::to_string(b) + " has " + std::to_string(g.size()) + " genres, more than " +
                        std::to_string(max_slots) + " slots");
    }
    r.count[b] = static_cast<Index>(g.size());
    for (int j : g) r.members[static_cast<std::size_t>(j)].push_back(static_cast<Index>(b));
    sorted[b] = std::move(g);
  }
  r.slot_position.assign(genres.size() * static_cast<std::size_t>(max_slots), -1);
  for (int j = 0; j < n_genres; ++j) {
    for (Index b : r.members[static_cast<std::size_t>(j)]) {
      const auto& g = sorted[static_cast<std::size_t>(b)];
      const auto slot = std::find(g.begin(), g.end(), j) - g.begin();
      r.slot_position[static_cast<std::size_t>(b * max_slots + slot)] = static_cast<Index>(r.flat_row.size());
      r.flat_row.push_back(b);
    }
  }
  return r;
}

std::string to_string(MixerKind k) {
  switch (k) {
    case MixerKind::Gmoe: return "gmoe";
    case MixerKind::Mlp: return "mlp";
    case MixerKind::Gated: return "moe";
    case MixerKind::Soft: return "soft-moe";
  }
  return "?";
}

std::string to_string(MoeAggregator a) {
  switch (a) {
    case MoeAggregator::Sum: return "sum";
    case MoeAggregator::Mean: return "mean";
    case MoeAggregator::Concat: return "concat";
    case MoeAggregator::Trm: return "trm";
  }
  return "?";
}

MixerKind parse_mixer_kind(const std::string& s) {
  if (s == "gmoe") return MixerKind::Gmoe;
  if (s == "mlp") return MixerKind::Mlp;
  if (s == "moe") return MixerKind::Gated;
  if (s == "soft-moe") return MixerKind::Soft;
  throw ConfigError("unknown mixer '" + s + "'");
}

MoeAggregator parse_moe_aggregator(const std::string& s) {
  if (s == "sum") return MoeAggregator::Sum;
  if (s == "mean") return MoeAggregator::Mean;
  if (s == "concat") return MoeAggregator::Concat;
  if (s == "trm") return MoeAggregator::Trm;
  throw ConfigError("unknown gmoe aggregator '" + s + "'");
}

void MixerConfig::validate() const {
  if (n_experts < 1) throw ConfigError("mixer: n_experts must be >= 1");
  if (layers < 1) throw ConfigError("mixer: layers must be >= 1");
  if (width < 1 || hidden < 1) throw ConfigError("mixer: widths must be >= 1");
  if (max_slots < 1) throw ConfigError("mixer: max_slots must be >= 1");
  if (aggregator == MoeAggregator::Trm && width % trm_heads != 0) throw ConfigError("mixer: width not divisible by TRM heads");
}

Index MixerConfig::output_width() const {
  return kind == MixerKind::Gmoe && aggregator == MoeAggregator::Concat ? width * max_slots : width;
}

}  // namespace gusd
