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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace gusd {

/// Binary classification report; positive class = 1 (spoiler).
struct Metrics {
  double f1 = 0.0;
  double acc = 0.0;
  std::optional<double> auc;  // absent when only one class is present
  std::string notice;
};

/// F1 of the positive class at `threshold` (0 when there are no predicted
/// and no actual positives).
double f1_score(std::span<const double> scores, std::span<const int> y, double threshold = 0.5);
double accuracy(std::span<const double> scores, std::span<const int> y, double threshold = 0.5);

/// Mann-Whitney rank statistic with average ranks for ties.
std::optional<double> roc_auc(std::span<const double> scores, std::span<const int> y);

Metrics compute_metrics(std::span<const double> scores, std::span<const int> y);

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (0 for a single value)
};
Summary summarize(const std::vector<double>& values);

void to_json(nlohmann::json& j, const Metrics& m);
void to_json(nlohmann::json& j, const Summary& s);

}  // namespace gusd
