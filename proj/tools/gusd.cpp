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
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gusd/dataset_io.hpp"
#include "gusd/errors.hpp"
#include "gusd/train.hpp"

using namespace gusd;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json read_json(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

RunConfig load_run_config(const std::string& path) {
  if (path.empty()) return RunConfig{};
  return read_json(path).get<RunConfig>();
}

json manifest_for(const std::string& command, const RunConfig& cfg, int seeds, const fs::path& data, const json& extra = {}) {
  json m{{"command", command},
         {"config", cfg},
         {"seeds", seeds},
         {"data", fs::absolute(data).lexically_normal().string()},
         {"dataset_digest", dataset_digest(data)}};
  for (const auto& [k, v] : extra.items()) m[k] = v;
  return m;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

std::string row_for(const std::string& name, const SweepResult& s) {
  std::ostringstream out;
  out << "| " << name;
  for (const char* metric : {"f1", "auc", "acc"}) {
    const auto sm = s.summary("test", metric);
    out << " | " << fmt(sm.mean) << " +- " << fmt(sm.std);
  }
  out << " |\n";
  return out.str();
}

constexpr const char* kTableHeader = "| arm | F1 | AUC | Acc |\n|---|---|---|---|\n";

int cmd_generate(const std::string& config, const std::string& out, std::optional<std::uint64_t> seed) {
  GeneratorConfig gc;
  if (!config.empty()) gc = read_json(config).get<GeneratorConfig>();
  if (seed) gc.seed = *seed;
  const auto bundle = generate(gc);
  save_bundle(bundle, out);
  std::cout << json{{"out", out},
                    {"users", bundle.graph.num_users()},
                    {"reviews", bundle.graph.num_reviews()},
                    {"movies", bundle.graph.num_movies()},
                    {"spoiler_rate", bundle.spoiler_rate()},
                    {"digest", dataset_digest(out)}}
                   .dump()
            << "\n";
  return 0;
}

int cmd_pretrain(const std::string& data, const std::string& config, const std::string& out, bool probe) {
  const auto bundle = load_bundle(data);
  const RunConfig cfg = load_run_config(config);
  const auto result = pretrain_bias(bundle, cfg);
  write_tensors(out, {to_named("user_bias", result.user_bias)});
  json report{{"out", out}, {"tau", result.tau}};
  if (result.holdout_auc) report["link_auc"] = *result.holdout_auc;
  if (probe) {
    const auto users = majority_spoiler_users(bundle.graph, bundle.labels);
    ProbeConfig pc;
    pc.seed = cfg.seed;
    for (const auto& [arm, features] : {std::pair<std::string, const Matrix<float>*>{"user_bias", &result.user_bias},
                                        {"raw", &bundle.user_embeddings}}) {
      const auto p = probe_features(*features, users, pc);
      report["probe"][arm] = p.skipped ? json{{"skipped", p.notice}} : json(p.metrics);
    }
  }
  std::cout << report.dump() << "\n";
  return 0;
}

SweepResult train_to(const fs::path& data, const RunConfig& cfg, int seeds, const fs::path& out, const json& manifest) {
  const auto bundle = load_bundle(data);
  fs::create_directories(out);
  write_json(out / "manifest.json", manifest);
  const auto sweep = run_seeds(bundle, cfg, seeds);
  for (const auto& r : sweep.runs) write_tensors(out / ("seed-" + std::to_string(r.config.seed) + ".bin"), r.checkpoint);
  write_json(out / "metrics.json", sweep.to_json());
  return sweep;
}

int cmd_train(std::string data, const std::string& config, int seeds, const std::string& out, const std::string& manifest_path) {
  RunConfig cfg;
  if (!manifest_path.empty()) {
    const json m = read_json(manifest_path);
    if (m.value("command", "") != "train") throw ConfigError("manifest is not from a train run");
    cfg = m.at("config").get<RunConfig>();
    seeds = m.at("seeds").get<int>();
    if (data.empty()) data = m.at("data").get<std::string>();
    if (dataset_digest(data) != m.at("dataset_digest").get<std::string>()) {
      throw IntegrityError("dataset digest differs from the manifest");
    }
  } else {
    cfg = load_run_config(config);
  }
  if (data.empty()) throw ConfigError("--data is required");
  const auto sweep = train_to(data, cfg, seeds, out, manifest_for("train", cfg, seeds, data));
  std::cout << json{{"out", out}, {"test", sweep.to_json()["summary"]["test"]}}.dump() << "\n";
  return 0;
}

int cmd_ablate(const std::string& data, const std::string& config, std::vector<std::string> arms, int seeds,
               const fs::path& out, const std::vector<int>& experts) {
  const auto bundle = load_bundle(data);
  const RunConfig base = load_run_config(config);
  if (arms.empty() || (arms.size() == 1 && arms[0] == "all")) arms = ablation_arms();
  fs::create_directories(out);
  write_json(out / "manifest.json", manifest_for("ablate", base, seeds, data, {{"arms", arms}, {"experts", experts}}));
  std::string table = kTableHeader;
  json all;
  auto run_arm = [&](const std::string& name, const RunConfig& cfg) {
    const auto sweep = run_seeds(bundle, cfg, seeds);
    all[name] = sweep.to_json();
    table += row_for(name, sweep);
  };
  for (const auto& arm : arms) run_arm(arm, apply_arm(base, arm));
  for (int n : experts) {
    for (const char* mixer : {"moe", "soft-moe"}) {
      RunConfig cfg = base;
      cfg.mixer = mixer;
      cfg.experts = n;
      run_arm(std::string(mixer) + "-" + std::to_string(n), cfg);
    }
  }
  write_json(out / "metrics.json", all);
  write_file(out / "table.md", table);
  std::cout << table;
  return 0;
}

int cmd_perturb(const std::string& data, const std::string& config, const std::string& kind, const std::vector<double>& levels,
                int seeds, const fs::path& out) {
  const auto bundle = load_bundle(data);
  RunConfig base = load_run_config(config);
  base.perturb = parse_perturb_kind(kind);
  fs::create_directories(out);
  write_json(out / "manifest.json", manifest_for("perturb", base, seeds, data, {{"levels", levels}}));
  json all;
  std::string table = "| " + kind + " level | F1 | AUC | Acc |\n|---|---|---|---|\n";
  const auto sweeps = run_seeds_levels(bundle, base, seeds, levels);
  for (std::size_t l = 0; l < levels.size(); ++l) {
    std::ostringstream key;
    key << levels[l];
    all[key.str()] = sweeps[l].to_json();
    table += row_for(key.str(), sweeps[l]);
  }
  all["all_negative_baseline"] = all_negative_baseline(bundle);
  write_json(out / "metrics.json", all);
  write_file(out / "table.md", table);
  std::cout << table;
  return 0;
}

int cmd_export(const std::string& data, const std::string& config, const std::string& checkpoint, const std::string& out) {
  const auto bundle = load_bundle(data);
  const RunConfig cfg = load_run_config(config);
  if (cfg.model != "gusd") throw ConfigError("export-features needs the gusd model");
  Matrix<float> ub;
  if (cfg.user_bias) ub = pretrain_bias(bundle, cfg).user_bias;
  const GraphInputs in = make_inputs(bundle, cfg, ub);
  Rng init = keyed_rng(cfg.seed, 0x1417);
  GusdModel<float> model(cfg, in, init);
  if (checkpoint.empty()) {
    const auto run = train_run(bundle, cfg, cfg.user_bias ? &ub : nullptr);
    const auto tmp = fs::path(out) / "checkpoint.bin";
    fs::create_directories(out);
    write_tensors(tmp, run.checkpoint);
    load_parameters(tmp, model.parameters());
  } else {
    load_parameters(checkpoint, model.parameters());
  }
  const auto x = GraphTensors<float>::from(in);
  std::vector<Index> reviews(static_cast<std::size_t>(in.n_reviews));
  for (Index r = 0; r < in.n_reviews; ++r) reviews[static_cast<std::size_t>(r)] = r;
  Matrix<float> features(in.n_reviews, 0);
  {
    NoGradGuard guard;
    model.encode(x, in, {});
    std::vector<Matrix<float>> parts;
    for (std::size_t begin = 0; begin < reviews.size(); begin += static_cast<std::size_t>(cfg.eval_batch)) {
      const std::size_t end = std::min(reviews.size(), begin + static_cast<std::size_t>(cfg.eval_batch));
      parts.push_back(model.features(x, in, {reviews.begin() + static_cast<std::ptrdiff_t>(begin),
                                             reviews.begin() + static_cast<std::ptrdiff_t>(end)}, {}).value());
    }
    features.resize(in.n_reviews, parts.front().cols());
    Index row = 0;
    for (const auto& p : parts) {
      features.middleRows(row, p.rows()) = p;
      row += p.rows();
    }
  }
  fs::create_directories(out);
  write_tensors(fs::path(out) / "features.bin", {to_named("features", features)});
  std::string meta;
  for (Index r = 0; r < in.n_reviews; ++r) {
    meta += json{{"review", in.review_node(r)},
                 {"genres", in.review_genres[static_cast<std::size_t>(r)]},
                 {"label", bundle.labels[static_cast<std::size_t>(r)]}}
                .dump() +
            "\n";
  }
  write_file(fs::path(out) / "features_meta.jsonl", meta);
  std::cout << json{{"out", out}, {"rows", features.rows()}, {"cols", features.cols()}}.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GUSD spoiler detection toolkit"};
  app.require_subcommand(1);

  std::string config, out, data, manifest, checkpoint, kind = "drop-edges";
  std::optional<std::uint64_t> seed;
  int seeds = 1;
  bool probe = false;
  std::vector<std::string> arms;
  std::vector<int> experts;
  std::vector<double> levels;

  auto* gen = app.add_subcommand("generate", "Sample a synthetic dataset");
  gen->add_option("--config", config, "Generator config JSON");
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_option("--seed", seed, "Override the generator seed");

  auto* pre = app.add_subcommand("pretrain-bias", "Pretrain user bias U_b by link prediction");
  pre->add_option("--data", data, "Dataset directory")->required();
  pre->add_option("--config", config, "Run config JSON (bias settings and seed)");
  pre->add_option("--out", out, "Output tensor file")->required();
  pre->add_flag("--probe", probe, "Also probe U_b and raw user embeddings");

  auto* train = app.add_subcommand("train", "Train over seeds and write manifest, metrics and checkpoints");
  train->add_option("--data", data, "Dataset directory");
  train->add_option("--config", config, "Run config JSON");
  train->add_option("--seeds", seeds, "Number of seeds")->check(CLI::PositiveNumber);
  train->add_option("--manifest", manifest, "Re-run from a previous manifest.json");
  train->add_option("--out", out, "Run directory")->required();

  auto* ablate = app.add_subcommand("ablate", "Run ablation arms");
  ablate->add_option("--data", data, "Dataset directory")->required();
  ablate->add_option("--config", config, "Base run config JSON");
  ablate->add_option("--arm", arms, "Arm name (repeatable) or 'all'");
  ablate->add_option("--experts", experts, "Expert counts for the MoE / Soft MoE sweep");
  ablate->add_option("--seeds", seeds, "Number of seeds")->check(CLI::PositiveNumber);
  ablate->add_option("--out", out, "Output directory")->required();

  auto* perturb = app.add_subcommand("perturb", "Robustness: perturb edges, features or labels");
  perturb->add_option("--data", data, "Dataset directory")->required();
  perturb->add_option("--config", config, "Run config JSON");
  perturb->add_option("--kind", kind, "drop-edges | zero-features | reduce-labels");
  perturb->add_option("--level", levels, "Perturbation level(s) in [0, 1]")->required();
  perturb->add_option("--seeds", seeds, "Number of seeds")->check(CLI::PositiveNumber);
  perturb->add_option("--out", out, "Output directory")->required();

  auto* exp = app.add_subcommand("export-features", "Export post-GMoE review features");
  exp->add_option("--data", data, "Dataset directory")->required();
  exp->add_option("--config", config, "Run config JSON");
  exp->add_option("--checkpoint", checkpoint, "Trained parameters (trains one run when absent)");
  exp->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) return cmd_generate(config, out, seed);
    if (*pre) return cmd_pretrain(data, config, out, probe);
    if (*train) return cmd_train(data, config, seeds, out, manifest);
    if (*ablate) return cmd_ablate(data, config, arms, seeds, out, experts);
    if (*perturb) return cmd_perturb(data, config, kind, levels, seeds, out);
    if (*exp) return cmd_export(data, config, checkpoint, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IntegrityError& e) {
    std::cerr << "integrity error: " << e.what() << "\n";
    return 3;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
