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
#include "gusd/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "gusd/errors.hpp"
#include "gusd/random.hpp"

namespace gusd {
namespace {

using nlohmann::json;

enum StreamKey : std::uint64_t {
  kPropensity = 1,
  kUsers = 2,
  kMovies = 3,
  kReviews = 4,
  kLabels = 5,
  kDirections = 6,
  kNoise = 7,
};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

std::vector<double> unit_vector(std::int64_t dim, Rng& rng) {
  std::vector<double> v(static_cast<std::size_t>(dim));
  double norm = 0;
  for (auto& x : v) {
    x = rng.normal();
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

// Cumulative-weight sampler.
class Sampler {
 public:
  Sampler() = default;
  explicit Sampler(const std::vector<double>& w) : cum_(w.size()) {
    std::partial_sum(w.begin(), w.end(), cum_.begin());
  }
  bool empty() const { return cum_.empty(); }
  std::size_t draw(Rng& rng) const {
    const double r = rng.uniform() * cum_.back();
    auto it = std::upper_bound(cum_.begin(), cum_.end(), r);
    return std::min(static_cast<std::size_t>(it - cum_.begin()), cum_.size() - 1);
  }

 private:
  std::vector<double> cum_;
};

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

GeneratorConfig GeneratorConfig::bias_driven() {
  GeneratorConfig c;
  c.n_users = 1000;
  c.n_movies = 150;
  c.n_reviews = 10000;
  c.user_weight = 1.6;
  c.text_weight = 0.5;
  c.text_signal = 0.6;
  c.spoiler_signal = 0.35;
  return c;
}

std::vector<double> GeneratorConfig::genre_rates() const {
  if (!genre_rate.empty()) return genre_rate;
  std::vector<double> r(static_cast<std::size_t>(n_genres));
  for (int g = 0; g < n_genres; ++g) {
    r[static_cast<std::size_t>(g)] = n_genres == 1 ? 0.25 : 0.08 + 0.42 * g / static_cast<double>(n_genres - 1);
  }
  return r;
}

void GeneratorConfig::validate() const {
  if (n_users < 1 || n_movies < 1 || n_reviews < 1 || n_genres < 1 || embed_dim < 1) {
    throw ConfigError("generator: counts must be >= 1");
  }
  if (n_reviews < n_users) throw ConfigError("generator: every user needs at least one review");
  if (!genre_rate.empty() && static_cast<int>(genre_rate.size()) != n_genres) {
    throw ConfigError("generator: genre_rate must have one entry per genre");
  }
  for (double r : genre_rates()) {
    if (!(r > 0.0 && r < 1.0)) throw ConfigError("generator: genre rates must lie in (0, 1)");
  }
  const auto& mix = user_propensity_mix;
  if (mix.weights[0] < 0 || mix.weights[1] < 0 || std::abs(mix.weights[0] + mix.weights[1] - 1.0) > 1e-9) {
    throw ConfigError("generator: mixture weights must be non-negative and sum to 1");
  }
  for (double m : mix.means) {
    if (!(m > 0.0 && m < 1.0)) throw ConfigError("generator: mixture means must lie in (0, 1)");
  }
  if (mix.spread < 0) throw ConfigError("generator: mixture spread must be >= 0");
  if (!(target_rate > 0.0 && target_rate < 1.0)) throw ConfigError("generator: target_rate must lie in (0, 1)");
  if (signal_strength < 0) throw ConfigError("generator: signal_strength must be >= 0");
  if (taste_strength < 0 || taste_strength > 1) throw ConfigError("generator: taste_strength must lie in [0, 1]");
  if (max_genres_per_movie < 1) throw ConfigError("generator: max_genres_per_movie must be >= 1");
}

void to_json(json& j, const GeneratorConfig& c) {
  j = json{{"n_users", c.n_users},
           {"n_movies", c.n_movies},
           {"n_reviews", c.n_reviews},
           {"n_genres", c.n_genres},
           {"genre_rate", c.genre_rates()},
           {"user_propensity_mix",
            {{"weights", c.user_propensity_mix.weights},
             {"means", c.user_propensity_mix.means},
             {"spread", c.user_propensity_mix.spread}}},
           {"embed_dim", c.embed_dim},
           {"seed", c.seed},
           {"signal_strength", c.signal_strength},
           {"target_rate", c.target_rate},
           {"genre_weight", c.genre_weight},
           {"user_weight", c.user_weight},
           {"text_weight", c.text_weight},
           {"text_noise", c.text_noise},
           {"text_signal", c.text_signal},
           {"spoiler_signal", c.spoiler_signal},
           {"spoiler_shared", c.spoiler_shared},
           {"genre_signal", c.genre_signal},
           {"user_style", c.user_style},
           {"taste_strength", c.taste_strength},
           {"max_genres_per_movie", c.max_genres_per_movie}};
}

void from_json(const json& j, GeneratorConfig& c) {
  static const std::set<std::string> known = {
      "preset", "n_users", "n_movies", "n_reviews", "n_genres", "genre_rate", "user_propensity_mix",
      "embed_dim", "seed", "signal_strength", "target_rate", "genre_weight", "user_weight", "text_weight",
      "text_noise", "text_signal", "spoiler_signal", "spoiler_shared", "genre_signal", "user_style", "taste_strength", "max_genres_per_movie"};
  if (!j.is_object()) throw ConfigError("generator config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError("generator config: unknown key '" + key + "'");
  }
  try {
    c = GeneratorConfig{};
    if (j.contains("preset")) {
      const auto preset = j.at("preset").get<std::string>();
      if (preset == "bias-driven") {
        c = GeneratorConfig::bias_driven();
      } else if (preset != "default") {
        throw ConfigError("generator config: unknown preset '" + preset + "'");
      }
    }
    read_field(j, "n_users", c.n_users);
    read_field(j, "n_movies", c.n_movies);
    read_field(j, "n_reviews", c.n_reviews);
    read_field(j, "n_genres", c.n_genres);
    read_field(j, "genre_rate", c.genre_rate);
    if (j.contains("user_propensity_mix")) {
      const auto& m = j.at("user_propensity_mix");
      for (const auto& [key, _] : m.items()) {
        if (key != "weights" && key != "means" && key != "spread") {
          throw ConfigError("user_propensity_mix: unknown key '" + key + "'");
        }
      }
      read_field(m, "weights", c.user_propensity_mix.weights);
      read_field(m, "means", c.user_propensity_mix.means);
      read_field(m, "spread", c.user_propensity_mix.spread);
    }
    read_field(j, "embed_dim", c.embed_dim);
    read_field(j, "seed", c.seed);
    read_field(j, "signal_strength", c.signal_strength);
    read_field(j, "target_rate", c.target_rate);
    read_field(j, "genre_weight", c.genre_weight);
    read_field(j, "user_weight", c.user_weight);
    read_field(j, "text_weight", c.text_weight);
    read_field(j, "text_noise", c.text_noise);
    read_field(j, "text_signal", c.text_signal);
    read_field(j, "spoiler_signal", c.spoiler_signal);
    read_field(j, "spoiler_shared", c.spoiler_shared);
    read_field(j, "genre_signal", c.genre_signal);
    read_field(j, "user_style", c.user_style);
    read_field(j, "taste_strength", c.taste_strength);
    read_field(j, "max_genres_per_movie", c.max_genres_per_movie);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("generator config: ") + e.what());
  }
  c.validate();
}

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw FormatError("unknown split '" + s + "'");
}

Matrix<float> DatasetBundle::node_embeddings() const {
  const Index d = review_embeddings.cols();
  Matrix<float> out(graph.num_nodes(), d);
  out.topRows(user_embeddings.rows()) = user_embeddings;
  out.middleRows(graph.review_begin(), review_embeddings.rows()) = review_embeddings;
  out.bottomRows(movie_embeddings.rows()) = movie_embeddings;
  return out;
}

std::vector<std::int64_t> DatasetBundle::reviews_in(Split s) const {
  std::vector<std::int64_t> out;
  for (std::size_t r = 0; r < splits.size(); ++r) {
    if (splits[r] == s) out.push_back(static_cast<std::int64_t>(r));
  }
  return out;
}

double DatasetBundle::spoiler_rate() const {
  if (labels.empty()) return 0.0;
  return static_cast<double>(std::accumulate(labels.begin(), labels.end(), 0)) / static_cast<double>(labels.size());
}

bool DatasetBundle::operator==(const DatasetBundle& o) const {
  return graph.num_users() == o.graph.num_users() && graph.num_genres() == o.graph.num_genres() &&
         graph.edges() == o.graph.edges() && graph.num_movies() == o.graph.num_movies() && meta == o.meta &&
         user_embeddings == o.user_embeddings && review_embeddings == o.review_embeddings &&
         movie_embeddings == o.movie_embeddings && labels == o.labels && splits == o.splits &&
         [&] {
           for (std::int64_t m = 0; m < graph.num_movies(); ++m) {
             if (graph.movies()[static_cast<std::size_t>(m)].genres != o.graph.movies()[static_cast<std::size_t>(m)].genres) return false;
           }
           return true;
         }();
}

std::vector<double> sample_user_propensities(const GeneratorConfig& config) {
  Rng rng = keyed_rng(config.seed, kPropensity);
  const auto& mix = config.user_propensity_mix;
  std::vector<double> p(static_cast<std::size_t>(config.n_users));
  for (auto& pu : p) {
    const int comp = rng.bernoulli(mix.weights[1]) ? 1 : 0;
    pu = sigmoid(logit(mix.means[static_cast<std::size_t>(comp)]) + mix.spread * rng.normal());
  }
  return p;
}

DatasetBundle generate(const GeneratorConfig& config) {
  config.validate();
  const double s = config.signal_strength;
  const int n_genres = config.n_genres;
  const auto n_users = config.n_users;
  const auto n_movies = config.n_movies;
  const auto n_reviews = config.n_reviews;
  const auto rates = config.genre_rates();

  // Genre popularity: Zipf-like over a random ordering independent of rates.
  Rng movie_rng = keyed_rng(config.seed, kMovies);
  std::vector<int> genre_order(static_cast<std::size_t>(n_genres));
  std::iota(genre_order.begin(), genre_order.end(), 0);
  movie_rng.shuffle(genre_order);
  std::vector<double> genre_pop(static_cast<std::size_t>(n_genres));
  for (int rank = 0; rank < n_genres; ++rank) {
    genre_pop[static_cast<std::size_t>(genre_order[static_cast<std::size_t>(rank)])] = std::pow(rank + 1.0, -0.6);
  }

  std::vector<MovieRecord> movies(static_cast<std::size_t>(n_movies));
  std::vector<double> movie_pop(static_cast<std::size_t>(n_movies));
  std::vector<double> movie_rating(static_cast<std::size_t>(n_movies));
  std::vector<double> movie_runtime(static_cast<std::size_t>(n_movies));
  {
    std::vector<std::int64_t> ranks(static_cast<std::size_t>(n_movies));
    std::iota(ranks.begin(), ranks.end(), 0);
    movie_rng.shuffle(ranks);
    const int max_k = std::min(n_genres, static_cast<int>(config.max_genres_per_movie));
    for (std::int64_t m = 0; m < n_movies; ++m) {
      const double u = movie_rng.uniform();
      int k = u < 0.4 ? 1 : (u < 0.8 ? 2 : 3);
      k = std::min(k, max_k);
      std::vector<double> w = genre_pop;
      auto& gs = movies[static_cast<std::size_t>(m)].genres;
      for (int i = 0; i < k; ++i) {
        const auto g = static_cast<int>(movie_rng.categorical(w));
        gs.push_back(g);
        w[static_cast<std::size_t>(g)] = 0.0;
      }
      std::sort(gs.begin(), gs.end());
      movie_pop[static_cast<std::size_t>(m)] = std::pow(static_cast<double>(ranks[static_cast<std::size_t>(m)]) + 1.0, -0.8);
      movie_rating[static_cast<std::size_t>(m)] = std::clamp(movie_rng.normal(6.5, 1.0), 1.0, 10.0);
      movie_runtime[static_cast<std::size_t>(m)] = std::round(std::clamp(movie_rng.normal(110.0, 20.0), 60.0, 240.0));
    }
  }
  const Sampler any_movie(movie_pop);
  std::vector<std::vector<std::int64_t>> movies_of_genre(static_cast<std::size_t>(n_genres));
  for (std::int64_t m = 0; m < n_movies; ++m) {
    for (int g : movies[static_cast<std::size_t>(m)].genres) movies_of_genre[static_cast<std::size_t>(g)].push_back(m);
  }
  std::vector<Sampler> genre_movie(static_cast<std::size_t>(n_genres));
  for (int g = 0; g < n_genres; ++g) {
    std::vector<double> w;
    for (auto m : movies_of_genre[static_cast<std::size_t>(g)]) w.push_back(movie_pop[static_cast<std::size_t>(m)]);
    if (!w.empty()) genre_movie[static_cast<std::size_t>(g)] = Sampler(w);
  }

  // Users: propensity, favourite genre, activity.
  const std::vector<double> propensity = sample_user_propensities(config);
  Rng user_rng = keyed_rng(config.seed, kUsers);
  std::vector<int> favourite(static_cast<std::size_t>(n_users));
  std::vector<double> activity(static_cast<std::size_t>(n_users));
  for (std::int64_t u = 0; u < n_users; ++u) {
    favourite[static_cast<std::size_t>(u)] = static_cast<int>(user_rng.categorical(genre_pop));
    activity[static_cast<std::size_t>(u)] = std::exp(user_rng.normal(0.0, 0.8));
  }
  std::vector<std::int64_t> count(static_cast<std::size_t>(n_users), 1);
  {
    const Sampler by_activity(activity);
    for (std::int64_t i = n_users; i < n_reviews; ++i) ++count[by_activity.draw(user_rng)];
  }

  // Reviews, generated per user in time order then shuffled into ids.
  Rng review_rng = keyed_rng(config.seed, kReviews);
  std::vector<ReviewRecord> records;
  records.reserve(static_cast<std::size_t>(n_reviews));
  for (std::int64_t u = 0; u < n_users; ++u) {
    std::int64_t t = static_cast<std::int64_t>(review_rng.uniform(0.0, 5e6));
    for (std::int64_t k = 0; k < count[static_cast<std::size_t>(u)]; ++k) {
      t += 1 + static_cast<std::int64_t>(-2e5 * std::log(1.0 - review_rng.uniform()));
      std::int64_t m;
      const auto& fav = genre_movie[static_cast<std::size_t>(favourite[static_cast<std::size_t>(u)])];
      if (review_rng.bernoulli(config.taste_strength) && !fav.empty()) {
        m = movies_of_genre[static_cast<std::size_t>(favourite[static_cast<std::size_t>(u)])][fav.draw(review_rng)];
      } else {
        m = static_cast<std::int64_t>(any_movie.draw(review_rng));
      }
      records.push_back({u, m, t});
    }
  }
  review_rng.shuffle(records);

  // Labels: calibrated intercept on top of genre, user and text effects.
  std::vector<double> genre_logit(static_cast<std::size_t>(n_genres));
  {
    double mean_logit = 0;
    for (int g = 0; g < n_genres; ++g) mean_logit += logit(rates[static_cast<std::size_t>(g)]) / n_genres;
    for (int g = 0; g < n_genres; ++g) genre_logit[static_cast<std::size_t>(g)] = logit(rates[static_cast<std::size_t>(g)]) - mean_logit;
  }
  double mean_user_logit = 0;
  for (double p : propensity) mean_user_logit += logit(p) / static_cast<double>(n_users);
  Rng label_rng = keyed_rng(config.seed, kLabels);
  std::vector<double> latent(static_cast<std::size_t>(n_reviews)), effect(static_cast<std::size_t>(n_reviews));
  for (std::int64_t r = 0; r < n_reviews; ++r) {
    const auto& rec = records[static_cast<std::size_t>(r)];
    double ge = 0;
    const auto& gs = movies[static_cast<std::size_t>(rec.movie)].genres;
    for (int g : gs) ge += genre_logit[static_cast<std::size_t>(g)];
    ge /= static_cast<double>(gs.size());
    latent[static_cast<std::size_t>(r)] = label_rng.normal();
    effect[static_cast<std::size_t>(r)] =
        s * (config.genre_weight * ge + config.user_weight * (logit(propensity[static_cast<std::size_t>(rec.user)]) - mean_user_logit) +
             config.text_weight * latent[static_cast<std::size_t>(r)]);
  }
  auto expected_rate = [&](double b) {
    double acc = 0;
    for (double e : effect) acc += sigmoid(b + e);
    return acc / static_cast<double>(n_reviews);
  };
  double lo = -20.0, hi = 20.0;
  if (expected_rate(lo) > config.target_rate || expected_rate(hi) < config.target_rate) {
    throw ConfigError("generator: target spoiler rate unreachable under the configured effects");
  }
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (expected_rate(mid) < config.target_rate ? lo : hi) = mid;
  }
  const double intercept = 0.5 * (lo + hi);
  std::vector<int> labels(static_cast<std::size_t>(n_reviews));
  for (std::int64_t r = 0; r < n_reviews; ++r) {
    labels[static_cast<std::size_t>(r)] = label_rng.bernoulli(sigmoid(intercept + effect[static_cast<std::size_t>(r)])) ? 1 : 0;
  }

  DatasetBundle bundle;
  bundle.config = config;
  bundle.graph = build_graph(n_users, movies, records, n_genres);
  const auto& graph = bundle.graph;

  // Metadata: movie [runtime, rating], user [review_count, avg_rating,
  // avg_length], review [rating, review_text_length].
  bundle.meta.assign(static_cast<std::size_t>(graph.num_nodes()), {});
  std::vector<double> review_rating(static_cast<std::size_t>(n_reviews)), review_length(static_cast<std::size_t>(n_reviews));
  std::vector<double> user_rating_sum(static_cast<std::size_t>(n_users), 0.0), user_length_sum(static_cast<std::size_t>(n_users), 0.0);
  for (std::int64_t r = 0; r < n_reviews; ++r) {
    const auto& rec = records[static_cast<std::size_t>(r)];
    const double rating = std::clamp(std::round(movie_rating[static_cast<std::size_t>(rec.movie)] + label_rng.normal(0.0, 1.5)), 1.0, 10.0);
    const double length = std::round(std::exp(label_rng.normal(5.5, 0.5)) * (1.0 + 0.3 * s * labels[static_cast<std::size_t>(r)]));
    review_rating[static_cast<std::size_t>(r)] = rating;
    review_length[static_cast<std::size_t>(r)] = length;
    user_rating_sum[static_cast<std::size_t>(rec.user)] += rating;
    user_length_sum[static_cast<std::size_t>(rec.user)] += length;
    bundle.meta[static_cast<std::size_t>(graph.review_node(r))] = {static_cast<float>(rating), static_cast<float>(length)};
  }
  std::vector<double> user_avg_rating(static_cast<std::size_t>(n_users));
  for (std::int64_t u = 0; u < n_users; ++u) {
    const double c = static_cast<double>(count[static_cast<std::size_t>(u)]);
    user_avg_rating[static_cast<std::size_t>(u)] = user_rating_sum[static_cast<std::size_t>(u)] / c;
    bundle.meta[static_cast<std::size_t>(u)] = {static_cast<float>(c), static_cast<float>(user_avg_rating[static_cast<std::size_t>(u)]),
                                                static_cast<float>(user_length_sum[static_cast<std::size_t>(u)] / c)};
  }
  for (std::int64_t m = 0; m < n_movies; ++m) {
    bundle.meta[static_cast<std::size_t>(graph.movie_node(m))] = {static_cast<float>(movie_runtime[static_cast<std::size_t>(m)]),
                                                                  static_cast<float>(movie_rating[static_cast<std::size_t>(m)])};
  }

  // Text embeddings: isotropic noise plus signal directions.
  const auto dim = config.embed_dim;
  Rng dir_rng = keyed_rng(config.seed, kDirections);
  const auto latent_dir = unit_vector(dim, dir_rng);
  const auto review_meta_dir = unit_vector(dim, dir_rng);
  const auto user_meta_dir = unit_vector(dim, dir_rng);
  const auto movie_meta_dir = unit_vector(dim, dir_rng);
  const auto shared_spoiler_dir = unit_vector(dim, dir_rng);
  std::vector<std::vector<double>> genre_dir, spoiler_dir;
  for (int g = 0; g < n_genres; ++g) {
    genre_dir.push_back(unit_vector(dim, dir_rng));
    spoiler_dir.push_back(unit_vector(dim, dir_rng));
  }
  std::vector<std::vector<double>> style_dir;
  for (std::int64_t u = 0; u < n_users; ++u) style_dir.push_back(unit_vector(dim, dir_rng));
  Rng noise_rng = keyed_rng(config.seed, kNoise);
  auto noise_row = [&](auto row) {
    for (Index k = 0; k < dim; ++k) row(k) = static_cast<float>(config.text_noise * noise_rng.normal());
  };
  auto add_dir = [&](auto row, const std::vector<double>& dir, double amp) {
    for (Index k = 0; k < dim; ++k) row(k) += static_cast<float>(amp * dir[static_cast<std::size_t>(k)]);
  };
  bundle.review_embeddings.resize(n_reviews, dim);
  for (std::int64_t r = 0; r < n_reviews; ++r) {
    auto row = bundle.review_embeddings.row(r);
    noise_row(row);
    const auto& gs = movies[static_cast<std::size_t>(records[static_cast<std::size_t>(r)].movie)].genres;
    const double inv = 1.0 / static_cast<double>(gs.size());
    const double sign = labels[static_cast<std::size_t>(r)] == 1 ? 1.0 : -1.0;
    add_dir(row, latent_dir, s * config.text_signal * latent[static_cast<std::size_t>(r)]);
    add_dir(row, shared_spoiler_dir, s * config.spoiler_signal * config.spoiler_shared * sign);
    add_dir(row, style_dir[static_cast<std::size_t>(records[static_cast<std::size_t>(r)].user)], config.user_style);
    for (int g : gs) {
      add_dir(row, genre_dir[static_cast<std::size_t>(g)], config.genre_signal * inv);
      add_dir(row, spoiler_dir[static_cast<std::size_t>(g)], s * config.spoiler_signal * sign * inv);
    }
    add_dir(row, review_meta_dir, 0.3 * (review_rating[static_cast<std::size_t>(r)] - 6.5) / 1.8);
  }
  bundle.user_embeddings.resize(n_users, dim);
  for (std::int64_t u = 0; u < n_users; ++u) {
    auto row = bundle.user_embeddings.row(u);
    noise_row(row);
    add_dir(row, user_meta_dir, 0.5 * (user_avg_rating[static_cast<std::size_t>(u)] - 6.5));
  }
  bundle.movie_embeddings.resize(n_movies, dim);
  for (std::int64_t m = 0; m < n_movies; ++m) {
    auto row = bundle.movie_embeddings.row(m);
    noise_row(row);
    const auto& gs = movies[static_cast<std::size_t>(m)].genres;
    for (int g : gs) add_dir(row, genre_dir[static_cast<std::size_t>(g)], config.genre_signal / static_cast<double>(gs.size()));
    add_dir(row, movie_meta_dir, 0.5 * (movie_rating[static_cast<std::size_t>(m)] - 6.5));
  }

  bundle.labels = std::move(labels);
  split(bundle, config.seed);
  return bundle;
}

void split(DatasetBundle& bundle, std::uint64_t seed) {
  const auto n = static_cast<std::int64_t>(bundle.labels.size());
  bundle.splits.assign(static_cast<std::size_t>(n), Split::Test);
  bundle.split_seed = seed;
  Rng rng = keyed_rng(seed, 0x5011);
  for (int cls = 0; cls <= 1; ++cls) {
    std::vector<std::int64_t> members;
    for (std::int64_t r = 0; r < n; ++r) {
      if (bundle.labels[static_cast<std::size_t>(r)] == cls) members.push_back(r);
    }
    rng.shuffle(members);
    const auto m = static_cast<double>(members.size());
    const auto n_train = static_cast<std::size_t>(std::llround(0.7 * m));
    const auto n_val = static_cast<std::size_t>(std::llround(0.2 * m));
    for (std::size_t i = 0; i < members.size(); ++i) {
      bundle.splits[static_cast<std::size_t>(members[i])] = i < n_train ? Split::Train : (i < n_train + n_val ? Split::Val : Split::Test);
    }
  }
}

}  // namespace gusd
