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
#include "gusd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gusd/errors.hpp"

namespace gusd {
namespace {

void check_aligned(std::span<const double> scores, std::span<const int> y) {
  if (scores.size() != y.size()) throw ShapeError("metrics: scores and labels differ in length");
  for (int v : y) {
    if (v != 0 && v != 1) throw IntegrityError("metrics: label outside {0, 1}");
  }
}

}  // namespace

double f1_score(std::span<const double> scores, std::span<const int> y, double threshold) {
  check_aligned(scores, y);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    if (pred && y[i] == 1) ++tp;
    if (pred && y[i] == 0) ++fp;
    if (!pred && y[i] == 1) ++fn;
  }
  if (tp == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

double accuracy(std::span<const double> scores, std::span<const int> y, double threshold) {
  check_aligned(scores, y);
  if (y.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hit += (scores[i] >= threshold) == (y[i] == 1);
  return static_cast<double>(hit) / static_cast<double>(y.size());
}

std::optional<double> roc_auc(std::span<const double> scores, std::span<const int> y) {
  check_aligned(scores, y);
  const std::size_t n = y.size();
  const auto n_pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
    for (std::size_t k = i; k <= j; ++k) {
      if (y[order[k]] == 1) rank_sum += avg_rank;
    }
    i = j + 1;
  }
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

Metrics compute_metrics(std::span<const double> scores, std::span<const int> y) {
  Metrics m;
  m.f1 = f1_score(scores, y);
  m.acc = accuracy(scores, y);
  m.auc = roc_auc(scores, y);
  if (!m.auc) m.notice = "AUC undefined: labels contain a single class";
  return m;
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

void to_json(nlohmann::json& j, const Metrics& m) {
  j = nlohmann::json{{"f1", m.f1}, {"acc", m.acc}};
  j["auc"] = m.auc ? nlohmann::json(*m.auc) : nlohmann::json(nullptr);
  if (!m.notice.empty()) j["notice"] = m.notice;
}

void to_json(nlohmann::json& j, const Summary& s) { j = nlohmann::json{{"mean", s.mean}, {"std", s.std}}; }

}  // namespace gusd
