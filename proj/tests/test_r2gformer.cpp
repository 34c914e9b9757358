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
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "gusd/errors.hpp"
#include "gusd/gradcheck.hpp"
#include "gusd/r2gformer.hpp"

using namespace gusd;
using TD = Tensor<double>;
using MD = Matrix<double>;

namespace {

MD random_matrix(Index r, Index c, Rng& rng) {
  MD m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

// Layer norm gains, biases etc. start at constants; perturb everything so
// the reference comparisons exercise every parameter.
void randomize(ParameterSet<double>& ps, Rng& rng, double s = 0.5) {
  for (const auto& [_, t] : ps.items()) {
    auto& v = const_cast<TD&>(t).value_mut();
    for (Index i = 0; i < v.size(); ++i) v.data()[i] += s * rng.normal();
  }
}

// 3 users, 3 movies with genres {0}, {1, 2}, {2}; 6 reviews.
HeteroGraph toy_graph() {
  std::vector<MovieRecord> movies{{{0}}, {{1, 2}}, {{2}}};
  std::vector<ReviewRecord> reviews{{0, 0, 1}, {0, 1, 2}, {1, 1, 3}, {1, 2, 4}, {2, 0, 5}, {2, 2, 6}};
  return build_graph(3, movies, reviews, 3);
}

// 3 users, 2 movies, 7 reviews: 12 nodes.
HeteroGraph twelve_node_graph() {
  std::vector<MovieRecord> movies{{{0, 1}}, {{1}}};
  std::vector<ReviewRecord> reviews{{0, 0, 1}, {0, 1, 2}, {1, 0, 3}, {1, 1, 4}, {2, 0, 5}, {2, 1, 6}, {0, 0, 7}};
  return build_graph(3, movies, reviews, 2);
}

HeteroGraph random_graph(Rng& rng, std::int64_t users, std::int64_t n_movies, std::int64_t n_reviews, int genres) {
  std::vector<MovieRecord> movies(static_cast<std::size_t>(n_movies));
  for (auto& m : movies) {
    m.genres.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(genres))));
    if (rng.bernoulli(0.5)) {
      const int g = static_cast<int>(rng.below(static_cast<std::uint64_t>(genres)));
      if (g != m.genres[0]) m.genres.push_back(g);
    }
    std::sort(m.genres.begin(), m.genres.end());
  }
  std::vector<ReviewRecord> reviews;
  for (std::int64_t r = 0; r < n_reviews; ++r) {
    reviews.push_back({static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(users))),
                       static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n_movies))), r});
  }
  return build_graph(users, movies, reviews, genres);
}

R2GConfig small_config() {
  R2GConfig cfg;
  cfg.dim = 8;
  cfg.gat_heads = 2;
  cfg.trm_heads = 2;
  cfg.trm_layers = 1;
  return cfg;
}

// ---- Straight-line reference -------------------------------------------

using Dense = std::vector<std::vector<bool>>;  // adj[dst][src]

double leaky(double x, double slope = 0.2) { return x > 0 ? x : slope * x; }
double gelu_ref(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

// Hop sets by repeated relaxation of shortest distances on the edge list.
std::vector<Dense> dense_hops(const HeteroGraph& g, int K) {
  const auto n = static_cast<std::size_t>(g.num_nodes());
  std::vector<std::vector<int>> dist(n, std::vector<int>(n, -1));
  for (std::size_t i = 0; i < n; ++i) dist[i][i] = 0;
  const auto edges = g.edge_pairs();
  for (int step = 1; step <= K; ++step) {
    auto next = dist;
    for (std::size_t s = 0; s < n; ++s) {
      for (const auto& [a, b] : edges) {
        const auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
        if (dist[s][ua] == step - 1 && next[s][ub] < 0) next[s][ub] = step;
      }
    }
    dist = next;
  }
  std::vector<Dense> hops(static_cast<std::size_t>(K), Dense(n, std::vector<bool>(n, false)));
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t d = 0; d < n; ++d) {
      if (dist[s][d] >= 1) hops[static_cast<std::size_t>(dist[s][d] - 1)][d][s] = true;
    }
  }
  return hops;
}

MD dense_gat(const Dense& adj, const MD& x, const MD& W, const MD& a_src, const MD& a_dst) {
  const Index n = x.rows(), heads = a_src.rows(), d = a_src.cols();
  const MD H = x * W;
  MD out = MD::Zero(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index h = 0; h < heads; ++h) {
      std::vector<double> e;
      std::vector<Index> js;
      for (Index j = 0; j < n; ++j) {
        if (!adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) continue;
        double s = 0;
        for (Index c = 0; c < d; ++c) s += a_dst(h, c) * H(i, h * d + c) + a_src(h, c) * H(j, h * d + c);
        e.push_back(leaky(s));
        js.push_back(j);
      }
      if (js.empty()) continue;
      const double mx = *std::max_element(e.begin(), e.end());
      double z = 0;
      for (auto& v : e) z += (v = std::exp(v - mx));
      for (std::size_t k = 0; k < js.size(); ++k) {
        for (Index c = 0; c < d; ++c) out(i, c) += e[k] / z * H(js[k], h * d + c) / static_cast<double>(heads);
      }
    }
  }
  return out;
}

struct Ref {
  const ParameterSet<double>& ps;
  MD P(const std::string& name) const {
    const auto* t = ps.find(name);
    REQUIRE_MESSAGE(t != nullptr, name);
    return t->value();
  }
  MD linear(const std::string& name, const MD& x) const {
    MD y = x * P(name + ".W");
    if (ps.find(name + ".b") != nullptr) y.rowwise() += P(name + ".b").row(0);
    return y;
  }
  MD mlp(const std::string& name, const MD& x) const {
    return linear(name + ".l2", linear(name + ".l1", x).unaryExpr(&gelu_ref));
  }
  MD norm(const std::string& name, const MD& x) const {
    MD y(x.rows(), x.cols());
    const MD g = P(name + ".gamma"), b = P(name + ".beta");
    for (Index i = 0; i < x.rows(); ++i) {
      const double mu = x.row(i).mean();
      const double var = (x.row(i).array() - mu).square().mean();
      for (Index c = 0; c < x.cols(); ++c) y(i, c) = (x(i, c) - mu) / std::sqrt(var + 1e-5) * g(0, c) + b(0, c);
    }
    return y;
  }
  // One sequence of tokens (rows).
  MD transformer(const std::string& name, const MD& x0, Index heads, Index layers) const {
    MD x = x0;
    const Index d = x.cols(), dh = d / heads, t = x.rows();
    for (Index l = 0; l < layers; ++l) {
      const std::string p = name + ".layer" + std::to_string(l);
      const MD q = linear(p + ".q", x), k = linear(p + ".k", x), v = linear(p + ".v", x);
      MD att = MD::Zero(t, d);
      for (Index h = 0; h < heads; ++h) {
        for (Index a = 0; a < t; ++a) {
          std::vector<double> s(static_cast<std::size_t>(t));
          for (Index b = 0; b < t; ++b) s[b] = q.row(a).segment(h * dh, dh).dot(k.row(b).segment(h * dh, dh)) / std::sqrt(double(dh));
          const double mx = *std::max_element(s.begin(), s.end());
          double z = 0;
          for (auto& e : s) z += (e = std::exp(e - mx));
          for (Index b = 0; b < t; ++b) att.row(a).segment(h * dh, dh) += s[b] / z * v.row(b).segment(h * dh, dh);
        }
      }
      x = norm(p + ".norm1", x + linear(p + ".o", att));
      x = norm(p + ".norm2", x + mlp(p + ".ff", x));
    }
    return x;
  }
};

// Node by node, genre by genre: RetGAT (sum) -> mean pooling -> TRM -> fusion.
MD reference_forward(const ParameterSet<double>& ps, const R2GConfig& cfg, const HeteroGraph& g, const MD& x0) {
  Ref ref{ps};
  const auto hops = dense_hops(g, cfg.K);
  const Index n = g.num_nodes(), U = g.num_users(), d = cfg.dim;
  const int c = g.num_genres();
  std::vector<std::vector<int>> genres_of(static_cast<std::size_t>(n));
  for (const auto& [v, gg] : g.genre_memberships()) genres_of[static_cast<std::size_t>(v)].push_back(gg);
  MD x = x0;
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = "r2g.l" + std::to_string(l);
    MD y = ref.linear(p + ".residual", x);
    for (int h = 1; h <= cfg.K; ++h) {
      const std::string hp = p + ".hop" + std::to_string(h);
      y += std::exp(-cfg.alpha * h) *
           dense_gat(hops[static_cast<std::size_t>(h - 1)], x, ref.P(hp + ".W"), ref.P(hp + ".a_src"), ref.P(hp + ".a_dst"));
    }
    MD G = MD::Zero(c, d);
    std::vector<int> count(static_cast<std::size_t>(c), 0);
    for (Index v = U; v < n; ++v) {
      for (int gg : genres_of[static_cast<std::size_t>(v)]) {
        G.row(gg) += y.row(v);
        ++count[static_cast<std::size_t>(gg)];
      }
    }
    for (int gg = 0; gg < c; ++gg) {
      if (count[static_cast<std::size_t>(gg)] > 0) G.row(gg) /= count[static_cast<std::size_t>(gg)];
    }
    G = ref.transformer(p + ".genre.trm", G, cfg.trm_heads, cfg.trm_layers);
    MD out(n, d);
    for (Index v = 0; v < n; ++v) {
      if (v < U) {
        out.row(v) = ref.linear(p + ".genre.user", y.row(v));
        continue;
      }
      MD z = MD::Zero(1, d);
      for (int gg : genres_of[static_cast<std::size_t>(v)]) z.row(0) += G.row(gg);
      z /= static_cast<double>(genres_of[static_cast<std::size_t>(v)].size());
      MD cat(1, 2 * d);
      cat << y.row(v), z;
      out.row(v) = ref.mlp(p + ".genre.fuse", cat);
    }
    x = out;
  }
  return x;
}

}  // namespace

TEST_CASE("decay law") {
  CHECK(decay(0.3, 1) == doctest::Approx(0.740818).epsilon(1e-6));
  for (int h = 1; h <= 6; ++h) {
    CHECK(decay(0.0, h) == 1.0);
    CHECK(decay(0.7, h + 1) / decay(0.7, h) == doctest::Approx(std::exp(-0.7)).epsilon(1e-12));
  }
}

TEST_CASE("config validation and parsing") {
  R2GConfig cfg;
  cfg.K = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = R2GConfig{};
  cfg.alpha = -0.1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = R2GConfig{};
  cfg.trm_heads = 5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  for (auto a : {HopAggregator::Sum, HopAggregator::Concat, HopAggregator::Trm}) CHECK(parse_hop_aggregator(to_string(a)) == a);
  for (auto p : {GenrePooling::Mean, GenrePooling::Sum, GenrePooling::Max, GenrePooling::Trm}) {
    CHECK(parse_genre_pooling(to_string(p)) == p);
  }
  CHECK_THROWS_AS(parse_genre_pooling("median"), ConfigError);
  CHECK_THROWS_AS(parse_hop_aggregator("max"), ConfigError);
}

TEST_CASE("gat hop examples") {
  Rng rng(3);
  ParameterSet<double> ps;
  GatHop<double> gat(ps, "gat", 4, 1, rng);
  const MD x = random_matrix(3, 4, rng);

  SUBCASE("single in-neighbour gets weight 1") {
    auto adj = std::make_shared<const Csr>(csr_from_pairs(3, {{2, 0}}));
    const MD out = gat(adj, TD(x)).value();
    CHECK((out.row(0) - x.row(2) * gat.W().value()).norm() < 1e-12);
    CHECK(out.row(1).norm() == 0.0);
    CHECK(out.row(2).norm() == 0.0);
  }
  SUBCASE("identical neighbours share attention uniformly") {
    MD xs = x;
    xs.row(1) = xs.row(2);
    xs.row(0) = xs.row(2);
    auto adj = std::make_shared<const Csr>(csr_from_pairs(3, {{0, 1}, {2, 1}}));
    std::vector<double> w;
    gat(adj, TD(xs), &w);
    REQUIRE(w.size() == 2);
    CHECK(w[0] == doctest::Approx(0.5));
    CHECK(w[1] == doctest::Approx(0.5));
  }
  SUBCASE("source out of range") {
    Csr bad = csr_from_pairs(3, {{0, 1}});
    bad.sources[0] = 7;
    CHECK_THROWS_AS(gat(std::make_shared<const Csr>(bad), TD(x)), IntegrityError);
  }
}

TEST_CASE("gat hop matches a dense reference on random graphs") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 6, d = 4, heads = 1 + static_cast<Index>(trial % 3);
    ParameterSet<double> ps;
    GatHop<double> gat(ps, "gat", d, heads, rng);
    std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
    Dense dense(n, std::vector<bool>(n, false));
    for (Index s = 0; s < n; ++s) {
      for (Index t = 0; t < n; ++t) {
        if (s != t && rng.bernoulli(0.35)) {
          pairs.emplace_back(s, t);
          dense[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)] = true;
        }
      }
    }
    const MD x = random_matrix(n, d, rng);
    auto adj = std::make_shared<const Csr>(csr_from_pairs(n, pairs));
    const MD got = gat(adj, TD(x)).value();
    const MD want = dense_gat(dense, x, gat.W().value(), gat.a_src().value(), gat.a_dst().value());
    CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("retgat layer") {
  Rng rng(5);
  const HeteroGraph g = toy_graph();
  const MD x = random_matrix(g.num_nodes(), 8, rng);

  SUBCASE("K = 1 is decayed GAT plus residual") {
    auto cfg = small_config();
    cfg.K = 1;
    ParameterSet<double> ps;
    RetGatLayer<double> layer(ps, "r", cfg, rng);
    const auto hops = khop_exact(g, 1);
    const MD got = layer(hops, TD(x)).value();
    const MD want = std::exp(-0.3) * layer.hop(1)(hops.hops[0], TD(x)).value() + layer.residual()(TD(x)).value();
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("large alpha leaves only the residual") {
    auto cfg = small_config();
    cfg.alpha = 20.0;
    ParameterSet<double> ps;
    RetGatLayer<double> layer(ps, "r", cfg, rng);
    const auto hops = khop_exact(g, 2);
    const MD got = layer(hops, TD(x)).value();
    const MD res = layer.residual()(TD(x)).value();
    double bound = 0;
    for (int h = 1; h <= 2; ++h) {
      bound += (layer.hop(h)(hops.hops[static_cast<std::size_t>(h - 1)], TD(x)).value()).cwiseAbs().maxCoeff();
    }
    CHECK((got - res).cwiseAbs().maxCoeff() <= std::exp(-20.0) * bound + 1e-15);
  }
  SUBCASE("hop contributions scale with alpha") {
    const auto hops = khop_exact(g, 2);
    auto c1 = small_config();
    auto c2 = small_config();
    c1.alpha = 0.1;
    c2.alpha = 0.9;
    ParameterSet<double> p1, p2;
    Rng r1(9), r2(9);
    RetGatLayer<double> l1(p1, "r", c1, r1), l2(p2, "r", c2, r2);
    const auto a = l1.contributions(hops, TD(x));
    const auto b = l2.contributions(hops, TD(x));
    for (int h = 1; h <= 2; ++h) {
      const double ratio = b[static_cast<std::size_t>(h - 1)].value().norm() / a[static_cast<std::size_t>(h - 1)].value().norm();
      CHECK(ratio == doctest::Approx(std::exp(-0.8 * h)).epsilon(1e-10));
    }
  }
  SUBCASE("mismatched K") {
    ParameterSet<double> ps;
    RetGatLayer<double> layer(ps, "r", small_config(), rng);
    CHECK_THROWS_AS(layer(khop_exact(g, 3), TD(x)), ConfigError);
  }
  SUBCASE("no two-hop paths: K = 2 equals K = 1") {
    // user -> review edges only, so nothing is two hops away.
    const std::int64_t n = 6;
    EdgePairs edges{{0, 3}, {1, 4}, {2, 5}};
    auto c2 = small_config();
    auto c1 = small_config();
    c1.K = 1;
    ParameterSet<double> p1, p2;
    RetGatLayer<double> l2(p2, "r", c2, rng), l1(p1, "r", c1, rng);
    for (const auto& [name, t] : p1.items()) const_cast<TD&>(t).value_mut() = p2.find(name)->value();
    const MD xs = random_matrix(n, 8, rng);
    const MD a = l2(khop_exact(n, edges, 2), TD(xs)).value();
    const MD b = l1(khop_exact(n, edges, 1), TD(xs)).value();
    CHECK(a == b);
  }
}

TEST_CASE("movie rows ignore review and user features") {
  Rng rng(21);
  const HeteroGraph g = random_graph(rng, 30, 8, 80, 5);
  const auto hops = khop_exact(g, 2);
  const Index n = g.num_nodes();
  const MD x = random_matrix(n, 8, rng);
  MD xp = x;
  for (Index v = 0; v < g.movie_begin(); ++v) xp.row(v) += random_matrix(1, 8, rng);
  for (auto agg : {HopAggregator::Sum, HopAggregator::Concat, HopAggregator::Trm}) {
    auto cfg = small_config();
    cfg.hop_aggregator = agg;
    cfg.genreformer = false;
    ParameterSet<double> ps;
    R2GFormer<double> stack(ps, "r2g", cfg, rng);
    const auto gi = genre_index(g);
    const MD a = stack(TD(x), hops, gi).value();
    const MD b = stack(TD(xp), hops, gi).value();
    INFO(to_string(agg));
    CHECK(a.bottomRows(n - g.movie_begin()) == b.bottomRows(n - g.movie_begin()));
    CHECK((a.topRows(g.movie_begin()) - b.topRows(g.movie_begin())).norm() > 1e-6);
  }
}

TEST_CASE("genre index") {
  const HeteroGraph g = toy_graph();
  const auto gi = genre_index(g);
  CHECK(gi.first_item == 3);
  CHECK(gi.n_nodes == 12);
  // Reviews inherit their movie's genres: 1+2+2+1+1+1 for reviews, 1+2+1 for movies.
  CHECK(gi.node.size() == 12);
  GenreIndex bad = gi;
  bad.node.erase(bad.node.begin());
  bad.genre.erase(bad.genre.begin());
  CHECK_THROWS_AS(bad.validate(), IntegrityError);
  bad = gi;
  bad.node[0] = 0;
  CHECK_THROWS_AS(bad.validate(), IntegrityError);
}

TEST_CASE("genre pooling") {
  Rng rng(8);
  GenreIndex gi;
  gi.n_nodes = 5;
  gi.first_item = 2;
  gi.n_genres = 3;
  gi.node = {2, 3, 4};
  gi.genre = {0, 1, 1};
  MD x = random_matrix(5, 8, rng);
  for (auto kind : {GenrePooling::Mean, GenrePooling::Sum, GenrePooling::Max, GenrePooling::Trm}) {
    auto cfg = small_config();
    cfg.genre_pooling = kind;
    ParameterSet<double> ps;
    GenreFormer<double> gf(ps, "gf", cfg, rng);
    INFO(to_string(kind));
    const MD g = gf.pool(TD(x), gi).value();
    CHECK((g.row(0) - x.row(2)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(g.row(2).norm() == 0.0);
    if (kind == GenrePooling::Mean) CHECK((g.row(1) - 0.5 * (x.row(3) + x.row(4))).cwiseAbs().maxCoeff() < 1e-12);
    if (kind == GenrePooling::Sum) CHECK((g.row(1) - (x.row(3) + x.row(4))).cwiseAbs().maxCoeff() < 1e-12);
    if (kind == GenrePooling::Max) CHECK((g.row(1) - x.row(3).cwiseMax(x.row(4))).cwiseAbs().maxCoeff() < 1e-12);
    MD xu = x;
    xu.topRows(2) = random_matrix(2, 8, rng);
    CHECK(gf.pool(TD(xu), gi).value() == g);
  }
}

TEST_CASE("genre interaction") {
  Rng rng(13);
  auto cfg = small_config();
  ParameterSet<double> ps;
  GenreFormer<double> gf(ps, "gf", cfg, rng);
  randomize(ps, rng);
  for (int c = 1; c <= 21; c += 4) {
    const MD G = random_matrix(c, 8, rng);
    const MD out = gf.interact(TD(G)).value();
    CHECK(out.rows() == c);
    CHECK(out.cols() == 8);
    std::vector<Index> perm(static_cast<std::size_t>(c));
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    MD Gp(c, 8), want(c, 8);
    for (int i = 0; i < c; ++i) {
      Gp.row(i) = G.row(perm[static_cast<std::size_t>(i)]);
      want.row(i) = out.row(perm[static_cast<std::size_t>(i)]);
    }
    CHECK((gf.interact(TD(Gp)).value() - want).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("genre fusion context") {
  Rng rng(17);
  GenreIndex gi;
  gi.n_nodes = 4;
  gi.first_item = 1;
  gi.n_genres = 3;
  gi.node = {1, 2, 2, 3};
  gi.genre = {2, 0, 1, 1};
  const MD G = random_matrix(3, 8, rng);
  const MD z = GenreFormer<double>::genre_context(TD(G), gi).value();
  REQUIRE(z.rows() == 3);
  CHECK(z.row(0) == G.row(2));
  CHECK((z.row(1) - 0.5 * (G.row(0) + G.row(1))).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(z.row(2) == G.row(1));

  ParameterSet<double> ps;
  GenreFormer<double> gf(ps, "gf", small_config(), rng);
  const MD x = random_matrix(4, 8, rng);
  const MD out = gf.fuse(TD(x), TD(G), gi).value();
  const Ref ref{ps};
  CHECK((out.row(0) - ref.linear("gf.user", x.row(0))).cwiseAbs().maxCoeff() < 1e-12);
  MD cat(1, 16);
  cat << x.row(3), G.row(1);
  CHECK((out.row(3) - ref.mlp("gf.fuse", cat)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("stack forward") {
  Rng rng(23);
  const HeteroGraph g = toy_graph();
  const auto hops = khop_exact(g, 2);
  const auto gi = genre_index(g);
  const MD x = random_matrix(g.num_nodes(), 8, rng);

  SUBCASE("L = 0 is the identity") {
    auto cfg = small_config();
    cfg.layers = 0;
    ParameterSet<double> ps;
    R2GFormer<double> stack(ps, "r2g", cfg, rng);
    CHECK(ps.size() == 0);
    CHECK(stack(TD(x), hops, gi).value() == x);
  }
  SUBCASE("deterministic") {
    ParameterSet<double> ps;
    R2GFormer<double> stack(ps, "r2g", small_config(), rng);
    CHECK(stack(TD(x), hops, gi).value() == stack(TD(x), hops, gi).value());
  }
  SUBCASE("matches a straight-line reference") {
    for (int layers : {1, 2}) {
      auto cfg = small_config();
      cfg.layers = layers;
      ParameterSet<double> ps;
      R2GFormer<double> stack(ps, "r2g", cfg, rng);
      randomize(ps, rng);
      const MD got = stack(TD(x), hops, gi).value();
      const MD want = reference_forward(ps, cfg, g, x);
      CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-6);
    }
  }
  SUBCASE("checkpoint names") {
    ParameterSet<double> ps;
    R2GFormer<double> stack(ps, "r2g", small_config(), rng);
    CHECK(ps.find("r2g.l0.hop1.W") != nullptr);
    CHECK(ps.find("r2g.l1.hop2.a_src") != nullptr);
    CHECK(ps.find("r2g.l1.genre.trm.layer0.q.W") != nullptr);
  }
  SUBCASE("row count mismatch") {
    ParameterSet<double> ps;
    R2GFormer<double> stack(ps, "r2g", small_config(), rng);
    CHECK_THROWS_AS(stack(TD(MD(x.topRows(5))), hops, gi), ShapeError);
  }
}

TEST_CASE("gradients match finite differences on a 12-node graph") {
  const HeteroGraph g = twelve_node_graph();
  REQUIRE(g.num_nodes() == 12);
  const auto hops = khop_exact(g, 2);
  const auto gi = genre_index(g);
  struct Arm {
    HopAggregator agg;
    GenrePooling pool;
  };
  for (const Arm arm : {Arm{HopAggregator::Sum, GenrePooling::Mean}, Arm{HopAggregator::Concat, GenrePooling::Sum},
                        Arm{HopAggregator::Trm, GenrePooling::Max}, Arm{HopAggregator::Sum, GenrePooling::Trm}}) {
    Rng rng(31);
    auto cfg = small_config();
    cfg.layers = 1;
    cfg.hop_aggregator = arm.agg;
    cfg.genre_pooling = arm.pool;
    ParameterSet<double> ps;
    R2GFormer<double> stack(ps, "r2g", cfg, rng);
    randomize(ps, rng, 0.2);
    TD x(random_matrix(12, 8, rng), true);
    const TD w(random_matrix(12, 8, rng));
    std::vector<std::pair<std::string, TD>> inputs{{"x", x}};
    for (const auto& [name, t] : ps.items()) inputs.emplace_back(name, t);
    const auto report = check_gradients([&] { return sum_all(mul(stack(x, hops, gi), w)); }, inputs);
    for (const auto& e : report.entries) {
      INFO(to_string(arm.agg) << "/" << to_string(arm.pool) << " " << e.name);
      CHECK(e.rel_error <= 1e-4);
    }
  }
}
