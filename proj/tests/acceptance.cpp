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
// Acceptance gate: one PASS/FAIL line per criterion. Usage:
//   acceptance <path-to-gusd-cli> [criterion ...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include <unistd.h>

#include "gusd/dataset_io.hpp"
#include "gusd/gradcheck.hpp"
#include "gusd/train.hpp"

using namespace gusd;
namespace fs = std::filesystem;
using TD = Tensor<double>;
using MD = Matrix<double>;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fixed(double v, int digits = 4) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(digits);
  out << v;
  return out.str();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

MD random_md(Index r, Index c, Rng& rng) {
  MD m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

EdgePairs random_digraph(std::int64_t n, double p, Rng& rng) {
  EdgePairs e;
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      if (i != j && rng.bernoulli(p)) e.emplace_back(i, j);
    }
  }
  return e;
}

// All-pairs shortest directed distances by BFS; -1 when unreachable.
std::vector<std::vector<int>> bfs_distances(std::int64_t n, const EdgePairs& edges) {
  std::vector<std::vector<std::int64_t>> out(static_cast<std::size_t>(n));
  for (const auto& [s, d] : edges) out[static_cast<std::size_t>(s)].push_back(d);
  std::vector<std::vector<int>> dist(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(n), -1));
  for (std::int64_t s = 0; s < n; ++s) {
    auto& ds = dist[static_cast<std::size_t>(s)];
    ds[static_cast<std::size_t>(s)] = 0;
    std::deque<std::int64_t> queue{s};
    while (!queue.empty()) {
      const auto u = queue.front();
      queue.pop_front();
      for (auto v : out[static_cast<std::size_t>(u)]) {
        if (ds[static_cast<std::size_t>(v)] < 0) {
          ds[static_cast<std::size_t>(v)] = ds[static_cast<std::size_t>(u)] + 1;
          queue.push_back(v);
        }
      }
    }
  }
  return dist;
}

EdgePairs pairs_at(const std::vector<std::vector<int>>& dist, int h) {
  EdgePairs out;
  for (std::size_t s = 0; s < dist.size(); ++s) {
    for (std::size_t d = 0; d < dist.size(); ++d) {
      if (dist[s][d] == h) out.emplace_back(static_cast<std::int64_t>(s), static_cast<std::int64_t>(d));
    }
  }
  return out;
}

Outcome khop_exactness() {
  const auto t0 = Clock::now();
  Rng rng(101);
  int graphs = 0, mismatches = 0;
  for (int g = 0; g < 200; ++g) {
    const auto n = static_cast<std::int64_t>(1 + rng.below(128));
    const double p = g % 2 == 0 ? 0.02 : 0.1;
    const auto edges = random_digraph(n, p, rng);
    const auto dist = bfs_distances(n, edges);
    for (int k = 1; k <= 3; ++k) {
      const auto hops = khop_exact(n, edges, k);
      for (int h = 1; h <= k; ++h) mismatches += hops.pairs(h) != pairs_at(dist, h);
    }
    ++graphs;
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 30.0, std::to_string(graphs) + " graphs, " + std::to_string(mismatches) +
                                             " mismatching hop sets, " + fixed(secs, 2) + " s (limit 30 s)"};
}

Outcome approx_separation() {
  Rng rng(202);
  const int graphs = 200;
  int strict = 0, violations = 0;
  for (int g = 0; g < graphs; ++g) {
    const auto n = static_cast<std::int64_t>(16 + rng.below(113));
    const auto edges = random_digraph(n, 0.1, rng);
    const auto exact = khop_exact(n, edges, 2).pairs(2);
    const auto approx = khop_approx(n, edges, 2).pairs(2);
    const bool subset = std::includes(approx.begin(), approx.end(), exact.begin(), exact.end());
    violations += !subset;
    strict += subset && approx.size() > exact.size();
  }
  const double share = static_cast<double>(strict) / graphs;
  return {share >= 0.95 && violations == 0, fixed(100 * share, 1) + "% strict supersets over " + std::to_string(graphs) +
                                                " graphs (need >= 95%), " + std::to_string(violations) +
                                                " containment violations"};
}

// FD check of out = f(inputs) through a fixed random projection to a scalar.
double op_error(const std::function<TD(const std::vector<TD>&)>& f, std::vector<TD> inputs, Rng& rng) {
  const MD probe = random_md(f(inputs).rows(), f(inputs).cols(), rng);
  std::vector<std::pair<std::string, TD>> named;
  for (std::size_t i = 0; i < inputs.size(); ++i) named.emplace_back("in" + std::to_string(i), inputs[i]);
  const auto report = check_gradients([&] { return sum_all(mul(f(inputs), TD(probe))); }, named, 1e-6, 32);
  return report.max_rel_error();
}

// 3 users, 2 movies, 7 reviews: 12 nodes.
HeteroGraph twelve_node_graph() {
  std::vector<MovieRecord> movies{{{0, 1}}, {{1}}};
  std::vector<ReviewRecord> reviews{{0, 0, 1}, {0, 1, 2}, {1, 0, 3}, {1, 1, 4}, {2, 0, 5}, {2, 1, 6}, {0, 0, 7}};
  return build_graph(3, movies, reviews, 2);
}

double full_model_error() {
  const HeteroGraph g = twelve_node_graph();
  RunConfig cfg;
  cfg.hidden = 8;
  cfg.meta_hidden = 4;
  cfg.gat_heads = 2;
  cfg.trm_heads = 2;
  cfg.trm_layers = 1;
  cfg.gmoe_hidden = 4;
  cfg.dropout = 0.0;
  Rng rng(5);
  GraphInputs in;
  in.n_users = g.num_users();
  in.n_reviews = g.num_reviews();
  in.n_movies = g.num_movies();
  in.n_genres = g.num_genres();
  in.text = random_md(g.num_nodes(), 6, rng).cast<float>();
  in.meta = random_md(g.num_nodes(), kMetaPad, rng).cast<float>();
  in.user_bias = random_md(g.num_users(), 4, rng).cast<float>();
  in.hops = khop_exact(g, cfg.hops);
  in.genres = genre_index(g);
  for (std::int64_t r = 0; r < in.n_reviews; ++r) {
    in.review_user.push_back(g.review(r).user);
    in.review_movie.push_back(g.review(r).movie);
    in.review_genres.push_back(g.genres(g.review_node(r)));
    in.max_slots = std::max<Index>(in.max_slots, static_cast<Index>(in.review_genres.back().size()));
  }
  const auto x = GraphTensors<double>::from(in);
  GusdModel<double> model(cfg, in, rng);
  for (const auto& [_, t] : model.parameters().items()) {
    auto& v = const_cast<TD&>(t).value_mut();
    for (Index i = 0; i < v.size(); ++i) v.data()[i] += 0.3 * rng.normal();
  }
  const std::vector<Index> reviews{0, 1, 2, 3, 4, 5, 6};
  const std::vector<int> labels{1, 0, 0, 1, 1, 0, 1};
  auto loss = [&] {
    model.encode(x, in, Mode{});
    return training_loss<double>(model.logits(x, in, reviews, Mode{}), labels, 1.3, 0.0, nullptr);
  };
  return check_gradients(loss, model.parameters().items(), 1e-5, 8).max_rel_error();
}

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  Rng rng(303);
  using Fn = std::function<TD(const std::vector<TD>&)>;
  auto in = [&](Index r, Index c) { return TD(random_md(r, c, rng), true); };

  const std::vector<Index> seg{0, 0, 1, 2, 2, 2};
  auto sparse = std::make_shared<SparseMatrix<double>>(3, 6);
  sparse->insert(0, 1) = 0.5;
  sparse->insert(1, 3) = -1.2;
  sparse->insert(2, 0) = 2.0;
  sparse->insert(2, 5) = 0.7;
  sparse->makeCompressed();
  const std::shared_ptr<const SparseMatrix<double>> sp = sparse;
  auto adj = khop_exact(5, EdgePairs{{0, 1}, {2, 1}, {3, 1}, {1, 2}, {4, 2}, {0, 4}, {2, 0}}, 1).hops[0];
  const std::vector<int> labels{1, 0, 1, 1};
  const std::vector<double> cw{1.0, 1.3};
  const std::vector<double> targets{1.0, 0.0, 0.3, 1.0};
  const std::vector<Index> lengths{3, 2};

  const std::vector<std::tuple<std::string, Fn, std::vector<TD>>> cases{
      {"add", [](auto& v) { return add(v[0], v[1]); }, {in(4, 3), in(4, 3)}},
      {"add (row broadcast)", [](auto& v) { return add(v[0], v[1]); }, {in(4, 3), in(1, 3)}},
      {"sub", [](auto& v) { return sub(v[0], v[1]); }, {in(4, 3), in(4, 3)}},
      {"mul", [](auto& v) { return mul(v[0], v[1]); }, {in(4, 3), in(4, 3)}},
      {"scale", [](auto& v) { return scale(v[0], 1.7); }, {in(4, 3)}},
      {"negate", [](auto& v) { return negate(v[0]); }, {in(4, 3)}},
      {"exp", [](auto& v) { return exp(v[0]); }, {in(4, 3)}},
      {"relu", [](auto& v) { return relu(v[0]); }, {in(4, 3)}},
      {"leaky_relu", [](auto& v) { return leaky_relu(v[0], 0.2); }, {in(4, 3)}},
      {"gelu", [](auto& v) { return gelu(v[0]); }, {in(4, 3)}},
      {"sigmoid", [](auto& v) { return sigmoid(v[0]); }, {in(4, 3)}},
      {"dropout", [](auto& v) { Rng r(9); return dropout(v[0], 0.4, &r, true); }, {in(4, 3)}},
      {"matmul", [](auto& v) { return matmul(v[0], v[1]); }, {in(4, 3), in(3, 5)}},
      {"transpose", [](auto& v) { return transpose(v[0]); }, {in(4, 3)}},
      {"spmm", [sp](auto& v) { return spmm(sp, v[0]); }, {in(6, 2)}},
      {"rowwise_dot", [](auto& v) { return rowwise_dot(v[0], v[1]); }, {in(4, 3), in(4, 3)}},
      {"softmax rows", [](auto& v) { return softmax(v[0], 1); }, {in(4, 3)}},
      {"softmax cols", [](auto& v) { return softmax(v[0], 0); }, {in(4, 3)}},
      {"sum_all", [](auto& v) { return sum_all(v[0]); }, {in(4, 3)}},
      {"sum", [](auto& v) { return concat<double>({sum(v[0], 0), transpose(sum(v[0], 1))}, 1); }, {in(4, 3)}},
      {"mean", [](auto& v) { return concat<double>({mean(v[0], 0), transpose(mean(v[0], 1))}, 1); }, {in(4, 3)}},
      {"layer_norm", [](auto& v) { return layer_norm(v[0], v[1], v[2]); }, {in(4, 5), in(1, 5), in(1, 5)}},
      {"concat", [](auto& v) { return concat<double>({concat<double>({v[0], v[1]}, 1), v[2]}, 0); },
       {in(2, 3), in(2, 2), in(3, 5)}},
      {"slice cols", [](auto& v) { return slice(v[0], 1, 1, 2); }, {in(6, 3)}},
      {"slice rows", [](auto& v) { return slice(v[0], 0, 2, 4); }, {in(6, 3)}},
      {"gather_rows", [](auto& v) { return gather_rows(v[0], {2, 0, 2, 3}); }, {in(4, 3)}},
      {"segment_reduce sum", [seg](auto& v) { return segment_reduce(v[0], seg, 4, Reduce::Sum); }, {in(6, 3)}},
      {"segment_reduce mean", [seg](auto& v) { return segment_reduce(v[0], seg, 4, Reduce::Mean); }, {in(6, 3)}},
      {"segment_reduce max", [seg](auto& v) { return segment_reduce(v[0], seg, 4, Reduce::Max); }, {in(6, 3)}},
      {"scale_rows", [](auto& v) { return scale_rows(v[0], v[1]); }, {in(4, 3), in(4, 1)}},
      {"segment_softmax", [seg](auto& v) { return segment_softmax(v[0], seg, 3); }, {in(6, 1)}},
      {"weighted_cross_entropy",
       [&labels, &cw](auto& v) { return weighted_cross_entropy(v[0], std::span<const int>(labels), std::span<const double>(cw)); },
       {in(4, 2)}},
      {"weighted_cross_entropy mean",
       [&labels, &cw](auto& v) {
         return weighted_cross_entropy(v[0], std::span<const int>(labels), std::span<const double>(cw), true);
       },
       {in(4, 2)}},
      {"bce_with_logits", [&targets](auto& v) { return bce_with_logits(v[0], std::span<const double>(targets)); },
       {in(4, 1)}},
      {"multi_head_attention", [](auto& v) { return multi_head_attention(v[0], v[1], v[2], 2, 3, 2); },
       {in(6, 4), in(6, 4), in(6, 4)}},
      {"multi_head_attention masked",
       [&lengths](auto& v) { return multi_head_attention(v[0], v[1], v[2], 2, 3, 2, &lengths); },
       {in(6, 4), in(6, 4), in(6, 4)}},
      {"graph_attention", [adj](auto& v) { return graph_attention(v[0], v[1], v[2], adj, 0.2); },
       {in(5, 6), in(2, 3), in(2, 3)}},
  };
  double worst = 0;
  std::string worst_name;
  for (const auto& [name, f, inputs] : cases) {
    const double e = op_error(f, inputs, rng);
    if (e > worst) worst = e, worst_name = name;
  }
  const double model = full_model_error();
  const double secs = seconds_since(t0);
  const bool ok = worst <= 1e-4 && model <= 1e-4 && secs < 60.0;
  return {ok, std::to_string(cases.size()) + " op cases, worst " + worst_name + " " + fixed(worst * 1e6, 3) +
                  "e-6; full model " + fixed(model * 1e6, 3) + "e-6 (limit 1e-4); " + fixed(secs, 1) + " s (limit 60 s)"};
}

MD gelu_md(const MD& x) {
  return x.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))); });
}

Outcome dispatch_oracle() {
  Rng rng(404);
  const int c = 21;
  const Index n = 500, w = 12, slots = 3;
  const MD x = random_md(n, w, rng);
  std::vector<std::vector<int>> genres(static_cast<std::size_t>(n));
  for (auto& g : genres) {
    const auto k = 1 + rng.below(slots);
    while (g.size() < k) {
      const int j = static_cast<int>(rng.below(c));
      if (std::find(g.begin(), g.end(), j) == g.end()) g.push_back(j);
    }
  }
  const auto route = GenreRouting::build(genres, c, slots);
  double worst = 0;
  std::string detail;
  for (auto agg : {MoeAggregator::Sum, MoeAggregator::Mean, MoeAggregator::Concat}) {
    ParameterSet<double> ps;
    MixerConfig cfg;
    cfg.width = w;
    cfg.hidden = 8;
    cfg.n_experts = c;
    cfg.layers = 1;
    cfg.aggregator = agg;
    cfg.max_slots = slots;
    ReviewMixer<double> mixer(ps, "gmoe", cfg, rng);
    const MD got = mixer(TD(x), route).value();
    // Per review: apply each of its genres' experts from raw parameter
    // matrices, then aggregate in ascending genre order.
    MD want = MD::Zero(n, agg == MoeAggregator::Concat ? w * slots : w);
    for (Index i = 0; i < n; ++i) {
      auto g = genres[static_cast<std::size_t>(i)];
      std::sort(g.begin(), g.end());
      for (std::size_t k = 0; k < g.size(); ++k) {
        const std::string e = "gmoe.l0.expert" + std::to_string(g[k]);
        const MD h = gelu_md(x.row(i) * ps.find(e + ".l1.W")->value() + ps.find(e + ".l1.b")->value());
        const MD y = h * ps.find(e + ".l2.W")->value() + ps.find(e + ".l2.b")->value();
        if (agg == MoeAggregator::Concat) {
          want.block(i, static_cast<Index>(k) * w, 1, w) = y;
        } else {
          want.row(i) += agg == MoeAggregator::Mean ? MD(y / static_cast<double>(g.size())) : y;
        }
      }
    }
    const double diff = got.cols() == want.cols() ? (got - want).cwiseAbs().maxCoeff() : 1e9;
    worst = std::max(worst, diff);
    detail += to_string(agg) + " " + fixed(diff * 1e9, 3) + "e-9 ";
  }
  return {worst <= 1e-6, "max abs diff on 500 reviews: " + detail + "(limit 1e-6)"};
}

Outcome decay_law() {
  // Directed cycle: every node has exactly one in-neighbour at each hop
  // distance, so with shared hop parameters each raw hop output is a row
  // permutation of the same matrix and only the decay changes the norm.
  const std::int64_t n = 9;
  EdgePairs edges;
  for (std::int64_t i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
  const int K = 3;
  const auto hops = khop_exact(n, edges, K);
  Rng rng(505);
  const TD x(random_md(n, 8, rng));
  double worst = 0;
  std::string detail;
  for (double alpha : {0.0, 0.3, 1.0}) {
    R2GConfig cfg;
    cfg.dim = 8;
    cfg.K = K;
    cfg.alpha = alpha;
    cfg.gat_heads = 2;
    ParameterSet<double> ps;
    RetGatLayer<double> layer(ps, "retgat", cfg, rng);
    for (int h = 2; h <= K; ++h) {
      for (const char* p : {".W", ".a_src", ".a_dst"}) {
        const_cast<TD*>(ps.find("retgat.hop" + std::to_string(h) + p))->value_mut() =
            ps.find(std::string("retgat.hop1") + p)->value();
      }
    }
    const auto parts = layer.contributions(hops, x);
    for (int h = 1; h < K; ++h) {
      const double ratio = parts[static_cast<std::size_t>(h)].value().norm() / parts[static_cast<std::size_t>(h - 1)].value().norm();
      worst = std::max(worst, std::abs(ratio - std::exp(-alpha)));
    }
    detail += "alpha " + fixed(alpha, 1) + " ";
  }
  return {worst <= 1e-6, detail + "max |ratio - exp(-alpha)| " + fixed(worst * 1e12, 3) + "e-12 (limit 1e-6)"};
}

Outcome metric_correctness() {
  Rng rng(909);
  int f1_bad = 0, acc_bad = 0;
  double auc_worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = static_cast<std::size_t>(1 + rng.below(80));
    const double p = rng.uniform();
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(21)) / 20.0;
      y[i] = rng.bernoulli(p) ? 1 : 0;
    }
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    double wins = 0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool pred = s[i] >= 0.5;
      tp += pred && y[i] == 1;
      fp += pred && y[i] == 0;
      fn += !pred && y[i] == 1;
      tn += !pred && y[i] == 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (y[i] == 1 && y[j] == 0) {
          ++pairs;
          wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
        }
      }
    }
    const Metrics m = compute_metrics(s, y);
    const double f1 = tp == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    f1_bad += m.f1 != f1;
    acc_bad += m.acc != static_cast<double>(tp + tn) / static_cast<double>(n);
    if (pairs > 0) {
      auc_worst = m.auc ? std::max(auc_worst, std::abs(*m.auc - wins / static_cast<double>(pairs))) : 1.0;
    } else if (m.auc) {
      auc_worst = 1.0;
    }
  }
  const auto hand = roc_auc(std::vector<double>{0.9, 0.8, 0.1}, std::vector<int>{1, 0, 1});
  const bool hand_ok = hand && *hand == 0.5;
  return {f1_bad == 0 && acc_bad == 0 && auc_worst <= 1e-9 && hand_ok,
          "1000 vectors: " + std::to_string(f1_bad) + " F1 and " + std::to_string(acc_bad) +
              " accuracy mismatches, max AUC diff " + fixed(auc_worst * 1e12, 3) + "e-12; hand case AUC " +
              (hand ? fixed(*hand, 4) : std::string("undefined"))};
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run(const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()); }

Outcome determinism(const std::string& cli) {
  const fs::path dir = fs::temp_directory_path() / ("gusd-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream(dir / "gen.json") << R"({"n_users": 150, "n_movies": 30, "n_reviews": 1500, "seed": 3})";
    std::ofstream(dir / "run.json") << R"({"epochs": 3, "batch_size": 512, "lr": 0.003, "hidden": 16,
                                          "gnn_layers": 1, "bias": {"dim": 8, "epochs": 5}})";
  }
  const std::string q = "\"" + cli + "\"";
  const std::string d = (dir / "data").string(), a = (dir / "a").string(), b = (dir / "b").string();
  int rc = run(q + " generate --config " + (dir / "gen.json").string() + " --out " + d);
  if (rc == 0) rc = run(q + " train --data " + d + " --config " + (dir / "run.json").string() + " --seeds 2 --out " + a);
  if (rc == 0) rc = run(q + " train --manifest " + (a + "/manifest.json") + " --out " + b);
  if (rc != 0) return {false, "CLI exited with status " + std::to_string(rc)};
  const std::string ma = read_all(fs::path(a) / "metrics.json"), mb = read_all(fs::path(b) / "metrics.json");
  const bool same = !ma.empty() && ma == mb;
  const bool ckpt = read_all(fs::path(a) / "seed-1.bin") == read_all(fs::path(b) / "seed-1.bin");
  fs::remove_all(dir);
  return {same && ckpt, std::string("metrics.json ") + (same ? "identical" : "differs") + " (" +
                            std::to_string(ma.size()) + " bytes), checkpoints " + (ckpt ? "identical" : "differ")};
}

double mean_f1(const SweepResult& s) { return s.summary("test", "f1").mean; }

std::string seeds_f1(const SweepResult& s) {
  std::string out;
  for (const auto& r : s.runs) out += (out.empty() ? "" : ",") + fixed(r.test.f1, 3);
  return out;
}

constexpr int kSeeds = 5;

// Criteria 6 and 10 share the default-data GUSD runs: edge drops touch only
// test-time inputs, so one trained model per seed serves every level.
std::pair<Outcome, Outcome> ordering_and_robustness() {
  const auto t0 = Clock::now();
  const auto bundle = generate(GeneratorConfig{});
  RunConfig cfg = desk_profile();
  cfg.perturb = PerturbKind::DropEdges;
  const std::vector<double> levels{0.0, 0.25, 0.5};
  const auto gusd = run_seeds_levels(bundle, cfg, kSeeds, levels);
  RunConfig text = desk_profile();
  text.model = "text-mlp";
  const auto baseline = run_seeds(bundle, text, kSeeds);
  const double secs = seconds_since(t0);

  const double g = mean_f1(gusd[0]), t = mean_f1(baseline);
  Outcome ordering{g - t >= 0.05 && secs < 900.0,
                   "spoiler rate " + fixed(100 * bundle.spoiler_rate(), 2) + "%; GUSD F1 " + fixed(100 * g, 2) + " [" +
                       seeds_f1(gusd[0]) + "] vs text-MLP " + fixed(100 * t, 2) + " [" + seeds_f1(baseline) +
                       "], margin " + fixed(100 * (g - t), 2) + " pts (need >= 5); " + fixed(secs, 0) +
                       " s (limit 900 s)"};

  const double f0 = mean_f1(gusd[0]), f1 = mean_f1(gusd[1]), f2 = mean_f1(gusd[2]);
  const Metrics neg = all_negative_baseline(bundle);
  Outcome robust{f1 <= f0 && f2 <= f1 && f2 > neg.f1,
                 "mean F1 at drop 0 / 0.25 / 0.5: " + fixed(100 * f0, 2) + " / " + fixed(100 * f1, 2) + " / " +
                     fixed(100 * f2, 2) + "; all-negative F1 " + fixed(100 * neg.f1, 2) + " (acc " +
                     fixed(100 * neg.acc, 2) + ")"};
  return {ordering, robust};
}

Outcome ablation_directions(const DatasetBundle& bundle) {
  const RunConfig base = desk_profile();
  std::map<std::string, SweepResult> arms;
  for (const char* arm : {"full", "w/o-ub", "normal-gat", "mlp"}) arms[arm] = run_seeds(bundle, apply_arm(base, arm), kSeeds);
  const double full = mean_f1(arms["full"]), noub = mean_f1(arms["w/o-ub"]), gat = mean_f1(arms["normal-gat"]),
               mlp = mean_f1(arms["mlp"]);
  return {full >= noub && full >= gat && full >= mlp,
          "mean F1 full " + fixed(100 * full, 2) + " [" + seeds_f1(arms["full"]) + "], w/o-ub " + fixed(100 * noub, 2) +
              " [" + seeds_f1(arms["w/o-ub"]) + "], normal-gat " + fixed(100 * gat, 2) + " [" +
              seeds_f1(arms["normal-gat"]) + "], GMoE " + fixed(100 * full, 2) + " vs MLP " + fixed(100 * mlp, 2) +
              " [" + seeds_f1(arms["mlp"]) + "]"};
}

Outcome bias_probe(const DatasetBundle& bundle) {
  const auto users = majority_spoiler_users(bundle.graph, bundle.labels);
  double ub_sum = 0, raw_sum = 0;
  int wins = 0, counted = 0;
  for (int s = 1; s <= kSeeds; ++s) {
    RunConfig cfg = desk_profile();
    cfg.seed = static_cast<std::uint64_t>(s);
    const auto pre = pretrain_bias(bundle, cfg);
    ProbeConfig pc;
    pc.seed = cfg.seed;
    const auto a = probe_features(pre.user_bias, users, pc);
    const auto b = probe_features(bundle.user_embeddings, users, pc);
    if (a.skipped || b.skipped || !a.metrics.auc || !b.metrics.auc) continue;
    ub_sum += *a.metrics.auc;
    raw_sum += *b.metrics.auc;
    wins += *a.metrics.auc > *b.metrics.auc;
    ++counted;
  }
  if (counted == 0) return {false, "probe skipped on every seed"};
  const double ub = ub_sum / counted, raw = raw_sum / counted;
  return {counted == kSeeds && ub > raw, "mean probe AUC U_b " + fixed(ub) + " vs raw " + fixed(raw) + " over " +
                                             std::to_string(counted) + " seeds (U_b higher on " + std::to_string(wins) +
                                             ")"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <gusd-cli> [criterion ...]\n");
    return 2;
  }
  const std::string cli = argv[1];
  std::set<int> only;
  for (int i = 2; i < argc; ++i) only.insert(std::atoi(argv[i]));
  auto wanted = [&](int c) { return only.empty() || only.count(c) > 0; };

  std::map<int, std::pair<std::string, Outcome>> results;
  auto report = [&](int id, const std::string& name, const Outcome& o) {
    results[id] = {name, o};
    std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  };
  auto guarded = [&](int id, const std::string& name, const std::function<Outcome()>& f) {
    if (!wanted(id)) return;
    try {
      report(id, name, f());
    } catch (const std::exception& e) {
      report(id, name, {false, std::string("error: ") + e.what()});
    }
  };

  guarded(1, "k-hop exactness", khop_exactness);
  guarded(2, "approximate vs exact separation", approx_separation);
  guarded(3, "gradient suite", gradient_suite);
  guarded(4, "dispatch oracle", dispatch_oracle);
  guarded(5, "decay law", decay_law);
  guarded(9, "metric correctness", metric_correctness);
  guarded(11, "determinism", [&] { return determinism(cli); });
  if (wanted(6) || wanted(10)) {
    try {
      const auto [ordering, robust] = ordering_and_robustness();
      if (wanted(6)) report(6, "end-to-end ordering", ordering);
      if (wanted(10)) report(10, "robustness shape", robust);
    } catch (const std::exception& e) {
      if (wanted(6)) report(6, "end-to-end ordering", {false, std::string("error: ") + e.what()});
      if (wanted(10)) report(10, "robustness shape", {false, std::string("error: ") + e.what()});
    }
  }
  if (wanted(7) || wanted(8)) {
    const auto bias = generate(GeneratorConfig::bias_driven());
    guarded(8, "user-bias probe", [&] { return bias_probe(bias); });
    guarded(7, "ablation directions", [&] { return ablation_directions(bias); });
  }

  int failed = 0;
  for (const auto& [_, r] : results) failed += !r.second.pass;
  std::printf("%d/%zu criteria passed\n", static_cast<int>(results.size()) - failed, results.size());
  return failed == 0 ? 0 : 1;
}
