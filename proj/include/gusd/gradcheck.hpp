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

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "gusd/random.hpp"
#include "gusd/tensor.hpp"

namespace gusd {

struct GradCheckEntry {
  std::string name;
  double rel_error = 0.0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||)
  double analytic_norm = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error() const {
    double m = 0.0;
    for (const auto& e : entries) m = std::max(m, e.rel_error);
    return m;
  }
};

/// Central finite differences against reverse-mode gradients, one relative
/// error per input tensor. Tensors with more than `max_entries` values are
/// checked on a random subset of coordinates.
inline GradCheckReport check_gradients(const std::function<Tensor<double>()>& loss_fn,
                                       std::vector<std::pair<std::string, Tensor<double>>> inputs,
                                       double h = 1e-5, Index max_entries = 64, std::uint64_t seed = 1) {
  for (auto& [_, t] : inputs) t.clear_grad();
  backward(loss_fn());
  Rng rng(seed);
  GradCheckReport report;
  for (auto& [name, t] : inputs) {
    const Matrix<double> analytic = t.grad();
    std::vector<Index> coords(static_cast<std::size_t>(t.size()));
    for (Index i = 0; i < t.size(); ++i) coords[static_cast<std::size_t>(i)] = i;
    if (t.size() > max_entries) {
      rng.shuffle(coords);
      coords.resize(static_cast<std::size_t>(max_entries));
    }
    double diff2 = 0, a2 = 0, n2 = 0;
    NoGradGuard guard;
    for (Index c : coords) {
      double& x = t.value_mut().data()[c];
      const double saved = x;
      x = saved + h;
      const double up = loss_fn().item();
      x = saved - h;
      const double down = loss_fn().item();
      x = saved;
      const double numeric = (up - down) / (2 * h);
      const double a = analytic.data()[c];
      diff2 += (a - numeric) * (a - numeric);
      a2 += a * a;
      n2 += numeric * numeric;
    }
    // Gradients that vanish identically (e.g. attention key biases, which
    // softmax cancels) leave only rounding noise; below 1e-5 compare in
    // absolute terms.
    const double denom = std::max({std::sqrt(a2), std::sqrt(n2), 1e-5});
    report.entries.push_back({name, std::sqrt(diff2) / denom, std::sqrt(a2)});
  }
  return report;
}

}  // namespace gusd
