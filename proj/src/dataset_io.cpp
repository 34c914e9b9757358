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
#include "gusd/dataset_io.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <map>
#include <sstream>

#include "gusd/checkpoint.hpp"
#include "gusd/errors.hpp"

namespace gusd {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<const char*, 4> kDataFiles = {"edges.jsonl", "embeddings.bin", "labels.jsonl", "nodes.jsonl"};

[[noreturn]] void bad_line(const std::string& file, std::size_t line, const std::string& msg) {
  throw FormatError(file + ":" + std::to_string(line) + ": " + msg);
}

// Calls fn(json, line_number) for every non-empty line.
template <typename Fn>
void for_each_jsonl(const fs::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw FormatError(path.filename().string() + ": cannot open");
  std::string line;
  std::size_t no = 0;
  const std::string name = path.filename().string();
  while (std::getline(in, line)) {
    ++no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      bad_line(name, no, std::string("invalid JSON: ") + e.what());
    }
    try {
      fn(j, no);
    } catch (const json::exception& e) {
      bad_line(name, no, e.what());
    }
  }
}

}  // namespace

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.filename().string() + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path.string() + ": cannot write");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string sha1_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha1(), nullptr) != 1) {
    throw FormatError("sha1: digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::string git_blob_id(std::string_view bytes) {
  std::string buf = "blob " + std::to_string(bytes.size());
  buf.push_back('\0');
  buf.append(bytes);
  return sha1_hex(buf);
}

std::string dataset_digest(const fs::path& dir) {
  std::string listing;
  for (const char* name : kDataFiles) listing += std::string(name) + " " + git_blob_id(read_file(dir / name)) + "\n";
  return sha1_hex(listing);
}

void save_bundle(const DatasetBundle& bundle, const fs::path& dir) {
  fs::create_directories(dir);
  const auto& g = bundle.graph;
  {
    std::string out;
    for (std::int64_t v = 0; v < g.num_nodes(); ++v) {
      json j{{"id", v}, {"kind", to_string(g.kind(v))}, {"meta", bundle.meta.at(static_cast<std::size_t>(v))}};
      if (g.kind(v) != NodeKind::User) j["genres"] = g.genres(v);
      out += j.dump() + "\n";
    }
    write_file(dir / "nodes.jsonl", out);
  }
  {
    std::string out;
    for (const auto& e : g.edges()) {
      out += json{{"src", e.src}, {"dst", e.dst}, {"type", to_string(e.type)}, {"t", e.t}}.dump() + "\n";
    }
    write_file(dir / "edges.jsonl", out);
  }
  {
    std::string out;
    for (std::int64_t r = 0; r < g.num_reviews(); ++r) {
      out += json{{"review", g.review_node(r)},
                  {"y", bundle.labels.at(static_cast<std::size_t>(r))},
                  {"split", to_string(bundle.splits.at(static_cast<std::size_t>(r)))}}
                 .dump() +
             "\n";
    }
    write_file(dir / "labels.jsonl", out);
  }
  write_tensors(dir / "embeddings.bin", {to_named("user", bundle.user_embeddings),
                                         to_named("review", bundle.review_embeddings),
                                         to_named("movie", bundle.movie_embeddings)});
  json manifest{{"counts",
                 {{"users", g.num_users()},
                  {"reviews", g.num_reviews()},
                  {"movies", g.num_movies()},
                  {"edges", g.edges().size()},
                  {"genres", g.num_genres()}}},
                {"seed", bundle.config.seed},
                {"split_seed", bundle.split_seed},
                {"config", bundle.config},
                {"digest", dataset_digest(dir)}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

DatasetBundle load_bundle(const fs::path& dir, bool verify_digest) {
  DatasetBundle b;
  json manifest;
  try {
    manifest = json::parse(read_file(dir / "manifest.json"));
    b.config = manifest.at("config").get<GeneratorConfig>();
    b.split_seed = manifest.at("split_seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest.json: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("manifest.json: ") + e.what());
  }
  if (verify_digest) {
    const std::string expected = manifest.value("digest", "");
    const std::string actual = dataset_digest(dir);
    if (expected != actual) throw FormatError("manifest.json: digest " + expected + " does not match contents " + actual);
  }
  std::int64_t n_users = 0, n_reviews = 0, n_movies = 0;
  try {
    const auto& c = manifest.at("counts");
    n_users = c.at("users").get<std::int64_t>();
    n_reviews = c.at("reviews").get<std::int64_t>();
    n_movies = c.at("movies").get<std::int64_t>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest.json: ") + e.what());
  }
  const std::int64_t n_nodes = n_users + n_reviews + n_movies;
  const int n_genres = manifest["counts"].value("genres", b.config.n_genres);

  auto kind_of = [&](std::int64_t v) {
    return v < n_users ? NodeKind::User : (v < n_users + n_reviews ? NodeKind::Review : NodeKind::Movie);
  };
  std::vector<MovieRecord> movies(static_cast<std::size_t>(n_movies));
  b.meta.assign(static_cast<std::size_t>(n_nodes), {});
  std::vector<std::vector<int>> review_genres(static_cast<std::size_t>(n_reviews));
  std::int64_t seen_nodes = 0;
  for_each_jsonl(dir / "nodes.jsonl", [&](const json& j, std::size_t line) {
    const auto id = j.at("id").get<std::int64_t>();
    if (id < 0 || id >= n_nodes) bad_line("nodes.jsonl", line, "node id out of range");
    if (parse_node_kind(j.at("kind").get<std::string>()) != kind_of(id)) bad_line("nodes.jsonl", line, "kind does not match id range");
    b.meta[static_cast<std::size_t>(id)] = j.at("meta").get<std::vector<float>>();
    if (kind_of(id) == NodeKind::Movie) movies[static_cast<std::size_t>(id - n_users - n_reviews)].genres = j.at("genres").get<std::vector<int>>();
    if (kind_of(id) == NodeKind::Review) review_genres[static_cast<std::size_t>(id - n_users)] = j.at("genres").get<std::vector<int>>();
    ++seen_nodes;
  });
  if (seen_nodes != n_nodes) throw FormatError("nodes.jsonl: expected " + std::to_string(n_nodes) + " nodes");

  std::vector<ReviewRecord> reviews(static_cast<std::size_t>(n_reviews), ReviewRecord{-1, -1, 0});
  for_each_jsonl(dir / "edges.jsonl", [&](const json& j, std::size_t line) {
    const auto src = j.at("src").get<std::int64_t>();
    const auto dst = j.at("dst").get<std::int64_t>();
    const auto type = parse_edge_type(j.at("type").get<std::string>());
    const auto t = j.at("t").get<std::int64_t>();
    if (src < 0 || src >= n_nodes || dst < 0 || dst >= n_nodes) bad_line("edges.jsonl", line, "endpoint out of range");
    if (type == EdgeType::MovieToReview) {
      if (kind_of(src) != NodeKind::Movie || kind_of(dst) != NodeKind::Review) bad_line("edges.jsonl", line, "m2r endpoint kinds");
      reviews[static_cast<std::size_t>(dst - n_users)].movie = src - n_users - n_reviews;
    } else if (type == EdgeType::UserToReview) {
      if (kind_of(src) != NodeKind::User || kind_of(dst) != NodeKind::Review) bad_line("edges.jsonl", line, "u2r endpoint kinds");
      auto& rec = reviews[static_cast<std::size_t>(dst - n_users)];
      rec.user = src;
      rec.timestamp = t;
    } else if (kind_of(src) != NodeKind::Review || kind_of(dst) != NodeKind::User) {
      bad_line("edges.jsonl", line, "r2u endpoint kinds");
    }
  });
  b.graph = build_graph(n_users, movies, reviews, n_genres);
  for (std::int64_t r = 0; r < n_reviews; ++r) {
    if (review_genres[static_cast<std::size_t>(r)] != b.graph.genres(b.graph.review_node(r))) {
      throw IntegrityError("review " + std::to_string(r) + " genres differ from its movie's genres");
    }
  }
  if (b.graph.edge_pairs().size() != 3 * static_cast<std::size_t>(n_reviews)) throw IntegrityError("edge count mismatch");

  b.labels.assign(static_cast<std::size_t>(n_reviews), -1);
  b.splits.assign(static_cast<std::size_t>(n_reviews), Split::Train);
  for_each_jsonl(dir / "labels.jsonl", [&](const json& j, std::size_t line) {
    const auto id = j.at("review").get<std::int64_t>();
    if (id < n_users || id >= n_users + n_reviews) bad_line("labels.jsonl", line, "not a review node");
    const int y = j.at("y").get<int>();
    if (y != 0 && y != 1) bad_line("labels.jsonl", line, "label must be 0 or 1");
    b.labels[static_cast<std::size_t>(id - n_users)] = y;
    try {
      b.splits[static_cast<std::size_t>(id - n_users)] = parse_split(j.at("split").get<std::string>());
    } catch (const FormatError& e) {
      bad_line("labels.jsonl", line, e.what());
    }
  });
  for (int y : b.labels) {
    if (y < 0) throw FormatError("labels.jsonl: missing review labels");
  }

  const auto tensors = read_tensors(dir / "embeddings.bin");
  auto take = [&](const char* name, std::int64_t rows) {
    Matrix<float> m = to_matrix<float>(find_tensor(tensors, name));
    if (m.rows() != rows) throw FormatError(std::string("embeddings.bin: tensor '") + name + "' has wrong row count");
    return m;
  };
  b.user_embeddings = take("user", n_users);
  b.review_embeddings = take("review", n_reviews);
  b.movie_embeddings = take("movie", n_movies);
  return b;
}

}  // namespace gusd
