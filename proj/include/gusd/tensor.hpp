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

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "gusd/errors.hpp"

namespace gusd {

using Index = Eigen::Index;

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail {
inline bool& grad_mode_flag() {
  thread_local bool enabled = true;
  return enabled;
}
}  // namespace detail

inline bool grad_enabled() { return detail::grad_mode_flag(); }

/// Disables tape recording for the current thread while in scope.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_mode_flag()) { detail::grad_mode_flag() = false; }
  ~NoGradGuard() { detail::grad_mode_flag() = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// One recorded value. Interior nodes hold a backward rule that pushes
/// `grad` into their parents.
template <typename T>
struct Node {
  Matrix<T> value;
  Matrix<T> grad;  // empty until populated
  bool requires_grad = false;
  bool is_leaf = true;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;
};

template <typename T>
class Tensor {
 public:
  using Scalar = T;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}
  explicit Tensor(Matrix<T> value, bool requires_grad = false) : node_(std::make_shared<Node<T>>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }

  static Tensor zeros(Index rows, Index cols, bool requires_grad = false) {
    return Tensor(Matrix<T>::Zero(rows, cols), requires_grad);
  }

  static Tensor from_rows(std::initializer_list<std::initializer_list<T>> rows,
                          bool requires_grad = false) {
    const Index r = static_cast<Index>(rows.size());
    const Index c = r == 0 ? 0 : static_cast<Index>(rows.begin()->size());
    Matrix<T> m(r, c);
    Index i = 0;
    for (const auto& row : rows) {
      if (static_cast<Index>(row.size()) != c) throw ShapeError("ragged initializer");
      Index j = 0;
      for (T v : row) m(i, j++) = v;
      ++i;
    }
    return Tensor(std::move(m), requires_grad);
  }

  static Tensor row(std::initializer_list<T> values, bool requires_grad = false) {
    return from_rows({values}, requires_grad);
  }

  bool defined() const { return node_ != nullptr; }
  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  Index size() const { return node_->value.size(); }
  std::array<Index, 2> shape() const { return {rows(), cols()}; }

  const Matrix<T>& value() const { return node_->value; }
  /// Direct access for optimizers and perturbation checks on leaves.
  Matrix<T>& value_mut() { return node_->value; }

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return node_->grad.size() != 0; }

  /// Gradient, or zeros of the value's shape when nothing reached this tensor.
  Matrix<T> grad() const {
    if (has_grad()) return node_->grad;
    return Matrix<T>::Zero(rows(), cols());
  }
  Matrix<T>& grad_mut() { return node_->grad; }

  void zero_grad() { node_->grad = Matrix<T>::Zero(rows(), cols()); }
  void clear_grad() { node_->grad.resize(0, 0); }

  T item() const {
    if (size() != 1) throw ShapeError("item() on non-scalar tensor");
    return node_->value(0, 0);
  }

  const char* op() const { return node_->op; }
  const std::shared_ptr<Node<T>>& node() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

namespace detail {

template <typename T, typename Expr>
void accumulate(Node<T>& n, const Expr& g) {
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

template <typename T, typename Fn>
Tensor<T> make_result(Matrix<T> value, const char* op, std::vector<std::shared_ptr<Node<T>>> parents,
                      Fn&& fn) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->op = op;
  node->is_leaf = false;
  bool needs = false;
  if (grad_enabled()) {
    for (const auto& p : parents) needs = needs || p->requires_grad;
  }
  if (needs) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward = std::forward<Fn>(fn);
  }
  return Tensor<T>(std::move(node));
}

}  // namespace detail

/// Topologically ordered record of the ops reachable from a loss. The tape
/// owns its nodes so interior values outlive closure release.
template <typename T>
struct Tape {
  std::vector<std::shared_ptr<Node<T>>> order;  // inputs precede the ops that consume them

  static Tape build(const Tensor<T>& root) {
    Tape tape;
    if (!root.defined() || !root.requires_grad()) return tape;
    std::unordered_set<Node<T>*> visited;
    std::vector<std::pair<std::shared_ptr<Node<T>>, std::size_t>> stack;
    stack.emplace_back(root.node(), 0);
    visited.insert(root.node().get());
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < node->parents.size()) {
        std::shared_ptr<Node<T>> parent = node->parents[next++];
        if (parent->requires_grad && visited.insert(parent.get()).second) stack.emplace_back(std::move(parent), 0);
      } else {
        tape.order.push_back(node);
        stack.pop_back();
      }
    }
    return tape;
  }
};

/// Reverse sweep from a scalar loss. Leaf gradients accumulate; interior
/// nodes release their closures afterwards.
template <typename T>
void backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.size() != 1) throw ContractError("backward requires a scalar loss");
  if (!loss.requires_grad()) throw ContractError("backward on an empty tape");
  Tape<T> tape = Tape<T>::build(loss);
  Node<T>* root = loss.node().get();
  detail::accumulate(*root, Matrix<T>::Ones(1, 1));
  for (auto it = tape.order.rbegin(); it != tape.order.rend(); ++it) {
    Node<T>* node = it->get();
    if (node->is_leaf) continue;
    if (node->grad.size() != 0 && node->backward) node->backward(*node);
    node->backward = nullptr;
    node->parents.clear();
    if (node != root) node->grad.resize(0, 0);
  }
}

}  // namespace gusd
