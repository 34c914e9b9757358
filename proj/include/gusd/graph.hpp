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
#include <string>
#include <utility>
#include <vector>

#include "gusd/csr.hpp"

namespace gusd {

enum class NodeKind : std::uint8_t { User, Review, Movie };
enum class EdgeType : std::uint8_t { MovieToReview, ReviewToUser, UserToReview };

std::string to_string(NodeKind kind);
std::string to_string(EdgeType type);  // "m2r" | "r2u" | "u2r"
NodeKind parse_node_kind(const std::string& s);
EdgeType parse_edge_type(const std::string& s);

struct Edge {
  std::int64_t src = 0;
  std::int64_t dst = 0;
  EdgeType type = EdgeType::MovieToReview;
  std::int64_t t = 0;

  bool operator==(const Edge&) const = default;
};

struct MovieRecord {
  std::vector<int> genres;
};

/// A review by `user` (user index) about `movie` (movie index) at `timestamp`.
struct ReviewRecord {
  std::int64_t user = 0;
  std::int64_t movie = 0;
  std::int64_t timestamp = 0;
};

/// Typed directed graph over users, reviews and movies.
///
/// Node ids are contiguous per kind: users occupy [0, U), reviews
/// [U, U + R) and movies [U + R, U + R + M). Each review contributes
/// exactly three edges: movie -> review, review -> user, user -> review.
/// Reviews carry their movie's genre set; users carry none.
class HeteroGraph {
 public:
  std::int64_t num_users() const { return num_users_; }
  std::int64_t num_reviews() const { return static_cast<std::int64_t>(reviews_.size()); }
  std::int64_t num_movies() const { return static_cast<std::int64_t>(movies_.size()); }
  std::int64_t num_nodes() const { return num_users() + num_reviews() + num_movies(); }
  int num_genres() const { return num_genres_; }

  std::int64_t user_node(std::int64_t u) const { return u; }
  std::int64_t review_node(std::int64_t r) const { return num_users_ + r; }
  std::int64_t movie_node(std::int64_t m) const { return num_users_ + num_reviews() + m; }
  std::int64_t review_begin() const { return num_users_; }
  std::int64_t movie_begin() const { return num_users_ + num_reviews(); }

  NodeKind kind(std::int64_t node) const;
  std::int64_t local_index(std::int64_t node) const;

  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<ReviewRecord>& reviews() const { return reviews_; }
  const std::vector<MovieRecord>& movies() const { return movies_; }
  const ReviewRecord& review(std::int64_t r) const { return reviews_.at(static_cast<std::size_t>(r)); }

  /// Sorted genre set of a node (empty for users).
  const std::vector<int>& genres(std::int64_t node) const;

  /// (node id, genre) pairs for every review and movie, ordered by node id
  /// then genre.
  std::vector<std::pair<std::int64_t, int>> genre_memberships() const;

  /// Raw edge set as destination-keyed in-neighbour lists.
  Csr in_adjacency() const;

  /// (src, dst) pairs of all edges.
  std::vector<std::pair<std::int64_t, std::int64_t>> edge_pairs() const;

  /// Re-checks every structural invariant; throws IntegrityError.
  void validate() const;

  friend HeteroGraph build_graph(std::int64_t n_users, const std::vector<MovieRecord>& movies,
                                 const std::vector<ReviewRecord>& reviews, int n_genres);

 private:
  std::int64_t num_users_ = 0;
  int num_genres_ = 0;
  std::vector<MovieRecord> movies_;
  std::vector<ReviewRecord> reviews_;
  std::vector<Edge> edges_;
  std::vector<int> no_genres_;
};

/// Builds the typed graph. Throws IntegrityError on dangling user/movie
/// references, genre ids outside [0, n_genres), or movies without genres.
HeteroGraph build_graph(std::int64_t n_users, const std::vector<MovieRecord>& movies,
                        const std::vector<ReviewRecord>& reviews, int n_genres);

/// Destination-keyed adjacency from a raw (src, dst) pair list.
Csr csr_from_pairs(std::int64_t n, std::vector<std::pair<std::int64_t, std::int64_t>> pairs);

}  // namespace gusd
