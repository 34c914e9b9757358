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
#include "gusd/graph.hpp"

#include <algorithm>

#include "gusd/errors.hpp"

namespace gusd {

std::string to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::User: return "user";
    case NodeKind::Review: return "review";
    case NodeKind::Movie: return "movie";
  }
  return "?";
}

std::string to_string(EdgeType type) {
  switch (type) {
    case EdgeType::MovieToReview: return "m2r";
    case EdgeType::ReviewToUser: return "r2u";
    case EdgeType::UserToReview: return "u2r";
  }
  return "?";
}

NodeKind parse_node_kind(const std::string& s) {
  if (s == "user") return NodeKind::User;
  if (s == "review") return NodeKind::Review;
  if (s == "movie") return NodeKind::Movie;
  throw FormatError("unknown node kind '" + s + "'");
}

EdgeType parse_edge_type(const std::string& s) {
  if (s == "m2r") return EdgeType::MovieToReview;
  if (s == "r2u") return EdgeType::ReviewToUser;
  if (s == "u2r") return EdgeType::UserToReview;
  throw FormatError("unknown edge type '" + s + "'");
}

NodeKind HeteroGraph::kind(std::int64_t node) const {
  if (node < 0 || node >= num_nodes()) throw IntegrityError("node id " + std::to_string(node) + " out of range");
  if (node < num_users_) return NodeKind::User;
  if (node < movie_begin()) return NodeKind::Review;
  return NodeKind::Movie;
}

std::int64_t HeteroGraph::local_index(std::int64_t node) const {
  switch (kind(node)) {
    case NodeKind::User: return node;
    case NodeKind::Review: return node - review_begin();
    case NodeKind::Movie: return node - movie_begin();
  }
  return -1;
}

const std::vector<int>& HeteroGraph::genres(std::int64_t node) const {
  switch (kind(node)) {
    case NodeKind::User: return no_genres_;
    case NodeKind::Review: return movies_[static_cast<std::size_t>(reviews_[static_cast<std::size_t>(node - review_begin())].movie)].genres;
    case NodeKind::Movie: return movies_[static_cast<std::size_t>(node - movie_begin())].genres;
  }
  return no_genres_;
}

std::vector<std::pair<std::int64_t, int>> HeteroGraph::genre_memberships() const {
  std::vector<std::pair<std::int64_t, int>> out;
  for (std::int64_t v = review_begin(); v < num_nodes(); ++v) {
    for (int g : genres(v)) out.emplace_back(v, g);
  }
  return out;
}

std::vector<std::pair<std::int64_t, std::int64_t>> HeteroGraph::edge_pairs() const {
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  out.reserve(edges_.size());
  for (const auto& e : edges_) out.emplace_back(e.src, e.dst);
  return out;
}

Csr HeteroGraph::in_adjacency() const { return csr_from_pairs(num_nodes(), edge_pairs()); }

Csr csr_from_pairs(std::int64_t n, std::vector<std::pair<std::int64_t, std::int64_t>> pairs) {
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second < b.second : a.first < b.first;
  });
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  Csr csr;
  csr.offsets.assign(static_cast<std::size_t>(n + 1), 0);
  csr.sources.reserve(pairs.size());
  for (const auto& [s, d] : pairs) {
    if (s < 0 || s >= n || d < 0 || d >= n) throw IntegrityError("edge endpoint out of range");
    ++csr.offsets[static_cast<std::size_t>(d + 1)];
    csr.sources.push_back(s);
  }
  for (std::size_t i = 1; i < csr.offsets.size(); ++i) csr.offsets[i] += csr.offsets[i - 1];
  return csr;
}

HeteroGraph build_graph(std::int64_t n_users, const std::vector<MovieRecord>& movies,
                        const std::vector<ReviewRecord>& reviews, int n_genres) {
  if (n_users < 0) throw IntegrityError("negative user count");
  if (n_genres < 1) throw IntegrityError("genre count must be >= 1");
  HeteroGraph g;
  g.num_users_ = n_users;
  g.num_genres_ = n_genres;
  g.movies_ = movies;
  for (std::size_t m = 0; m < g.movies_.size(); ++m) {
    auto& gs = g.movies_[m].genres;
    std::sort(gs.begin(), gs.end());
    gs.erase(std::unique(gs.begin(), gs.end()), gs.end());
    if (gs.empty()) throw IntegrityError("movie " + std::to_string(m) + " has no genres");
    if (gs.front() < 0 || gs.back() >= n_genres) {
      throw IntegrityError("movie " + std::to_string(m) + " has a genre outside [0, " + std::to_string(n_genres) + ")");
    }
  }
  g.reviews_ = reviews;
  g.edges_.reserve(reviews.size() * 3);
  for (std::size_t r = 0; r < reviews.size(); ++r) {
    const auto& rec = reviews[r];
    if (rec.user < 0 || rec.user >= n_users) {
      throw IntegrityError("review " + std::to_string(r) + " references missing user " + std::to_string(rec.user));
    }
    if (rec.movie < 0 || rec.movie >= static_cast<std::int64_t>(movies.size())) {
      throw IntegrityError("review " + std::to_string(r) + " references missing movie " + std::to_string(rec.movie));
    }
  }
  for (std::size_t r = 0; r < reviews.size(); ++r) {
    const auto& rec = reviews[r];
    const std::int64_t rv = g.review_node(static_cast<std::int64_t>(r));
    const std::int64_t uv = g.user_node(rec.user);
    const std::int64_t mv = g.movie_node(rec.movie);
    g.edges_.push_back({mv, rv, EdgeType::MovieToReview, rec.timestamp});
    g.edges_.push_back({rv, uv, EdgeType::ReviewToUser, rec.timestamp});
    g.edges_.push_back({uv, rv, EdgeType::UserToReview, rec.timestamp});
  }
  return g;
}

void HeteroGraph::validate() const {
  std::vector<int> movie_in(static_cast<std::size_t>(num_reviews()), 0);
  std::vector<int> author(static_cast<std::size_t>(num_reviews()), 0);
  for (const auto& e : edges_) {
    const NodeKind ks = kind(e.src), kd = kind(e.dst);
    switch (e.type) {
      case EdgeType::MovieToReview:
        if (ks != NodeKind::Movie || kd != NodeKind::Review) throw IntegrityError("m2r edge with wrong endpoint kinds");
        ++movie_in[static_cast<std::size_t>(local_index(e.dst))];
        break;
      case EdgeType::ReviewToUser:
        if (ks != NodeKind::Review || kd != NodeKind::User) throw IntegrityError("r2u edge with wrong endpoint kinds");
        break;
      case EdgeType::UserToReview:
        if (ks != NodeKind::User || kd != NodeKind::Review) throw IntegrityError("u2r edge with wrong endpoint kinds");
        ++author[static_cast<std::size_t>(local_index(e.dst))];
        break;
    }
  }
  for (std::size_t r = 0; r < movie_in.size(); ++r) {
    if (movie_in[r] != 1 || author[r] != 1) {
      throw IntegrityError("review " + std::to_string(r) + " must have exactly one movie and one author");
    }
  }
}

}  // namespace gusd
