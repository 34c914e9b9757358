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

#include <cmath>
#include <cstdint>
#include <vector>

#include "gusd/nn.hpp"

namespace gusd {

struct AdamWConfig {
  double lr = 1e-4;
  double weight_decay = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adaptive-moment optimizer with decoupled weight decay:
///   theta <- theta * (1 - lr * wd) - lr * m_hat / (sqrt(v_hat) + eps)
template <typename T>
class AdamW {
 public:
  AdamW(std::vector<Tensor<T>> params, AdamWConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    for (const auto& p : params_) {
      m_.push_back(Matrix<T>::Zero(p.rows(), p.cols()));
      v_.push_back(Matrix<T>::Zero(p.rows(), p.cols()));
    }
  }

  void step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (!params_[i].has_grad()) throw ContractError("optimizer step: parameter " + std::to_string(i) + " has no gradient");
    }
    ++step_;
    const double b1c = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double b2c = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    const T decay = static_cast<T>(1.0 - cfg_.lr * cfg_.weight_decay);
    const T lr = static_cast<T>(cfg_.lr);
    const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
    const T eps = static_cast<T>(cfg_.eps);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const Matrix<T>& g = params_[i].grad_mut();
      m_[i] = b1 * m_[i] + (T(1) - b1) * g;
      v_[i] = b2 * v_[i] + (T(1) - b2) * g.cwiseProduct(g);
      auto m_hat = m_[i].array() / static_cast<T>(b1c);
      auto v_hat = v_[i].array() / static_cast<T>(b2c);
      Matrix<T>& theta = params_[i].value_mut();
      theta = (theta.array() * decay - lr * m_hat / (v_hat.sqrt() + eps)).matrix();
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  std::int64_t steps() const { return step_; }
  const AdamWConfig& config() const { return cfg_; }
  const std::vector<Matrix<T>>& first_moments() const { return m_; }
  const std::vector<Matrix<T>>& second_moments() const { return v_; }

 private:
  std::vector<Tensor<T>> params_;
  AdamWConfig cfg_;
  std::vector<Matrix<T>> m_, v_;
  std::int64_t step_ = 0;
};

}  // namespace gusd
