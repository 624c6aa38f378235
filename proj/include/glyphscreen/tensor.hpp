/* Copyright (c) 2026 The glyphscreen Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "glyphscreen/error.hpp"

namespace glyph {

using Shape = std::vector<int>;

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (int d : s) n *= static_cast<std::size_t>(d);
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One value in the computation graph. Leaves have no backward function;
/// trainable leaves accumulate gradients across backward calls until
/// zero_grad(). Interior gradients are scratch space and reset at the start
/// of every backward pass.
struct Node {
  std::uint64_t seq = 0;
  std::string_view op = "leaf";
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool trainable = false;
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backward;

  std::span<double> grad_buffer() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

namespace detail {

inline std::uint64_t next_seq() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

inline bool& grad_enabled_flag() {
  thread_local bool enabled = true;
  return enabled;
}

}  // namespace detail

/// Disables backward bookkeeping on this thread for its lifetime. Results
/// still record their op name and parents, so op traces stay available.
class NoGradGuard {
 public:
  NoGradGuard() : prev_(detail::grad_enabled_flag()) { detail::grad_enabled_flag() = false; }
  ~NoGradGuard() { detail::grad_enabled_flag() = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

inline bool grad_enabled() { return detail::grad_enabled_flag(); }

/// Handle to a graph node. Copies share the node.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor from(Shape shape, std::vector<double> values, bool trainable = false) {
    if (values.size() != shape_numel(shape)) {
      throw DimensionError("tensor: " + std::to_string(values.size()) + " values for shape " +
                           shape_str(shape));
    }
    auto n = std::make_shared<Node>();
    n->seq = detail::next_seq();
    n->shape = std::move(shape);
    n->value = std::move(values);
    n->trainable = trainable;
    n->requires_grad = trainable;
    return Tensor(std::move(n));
  }

  static Tensor zeros(Shape shape, bool trainable = false) {
    const auto n = shape_numel(shape);
    return from(std::move(shape), std::vector<double>(n, 0.0), trainable);
  }

  static Tensor full(Shape shape, double v, bool trainable = false) {
    const auto n = shape_numel(shape);
    return from(std::move(shape), std::vector<double>(n, v), trainable);
  }

  static Tensor scalar(double v) { return from({}, {v}); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->value.size(); }

  std::span<const double> values() const { return node_->value; }
  /// Direct write access, meant for optimizers and initializers. Writing into
  /// a tensor that is already part of a recorded graph invalidates it.
  std::span<double> mutable_values() { return node_->value; }
  double item() const {
    if (numel() != 1) throw DimensionError("tensor: item() on shape " + shape_str(shape()));
    return node_->value[0];
  }

  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  std::span<const double> grad() const { return node_->grad; }
  void zero_grad() { node_->grad.clear(); }

  bool trainable() const { return node_->trainable; }
  bool requires_grad() const { return node_->requires_grad; }
  std::string_view op() const { return node_->op; }

  Node& node() const { return *node_; }
  const NodePtr& node_ptr() const { return node_; }

 private:
  NodePtr node_;
};

/// Builds a non-leaf result. `backward` is only attached when gradients are
/// enabled and at least one parent needs them; it receives the result node
/// (whose `grad` holds dL/d(result)) and must accumulate into parents.
inline Tensor make_result(std::string_view op, Shape shape, std::vector<double> values,
                          std::vector<Tensor> parents, std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->seq = detail::next_seq();
  n->op = op;
  n->shape = std::move(shape);
  n->value = std::move(values);
  bool needs = false;
  n->parents.reserve(parents.size());
  for (auto& p : parents) {
    if (!p.defined()) continue;
    needs = needs || p.requires_grad();
    n->parents.push_back(p.node_ptr());
  }
  if (needs && grad_enabled()) {
    n->requires_grad = true;
    n->backward = std::move(backward);
  }
  return Tensor(std::move(n));
}

// ---------------------------------------------------------------------------
// Tape

/// The executed operations that a tensor depends on, in execution order.
/// Every node's parents precede it; backward walks the list in reverse.
class Tape {
 public:
  static Tape record(const Tensor& root) {
    Tape t;
    std::unordered_set<const Node*> seen;
    std::vector<NodePtr> stack{root.node_ptr()};
    while (!stack.empty()) {
      NodePtr n = std::move(stack.back());
      stack.pop_back();
      if (!seen.insert(n.get()).second) continue;
      for (const auto& p : n->parents) stack.push_back(p);
      t.nodes_.push_back(std::move(n));
    }
    std::sort(t.nodes_.begin(), t.nodes_.end(),
              [](const NodePtr& a, const NodePtr& b) { return a->seq < b->seq; });
    return t;
  }

  std::span<const NodePtr> nodes() const { return nodes_; }

  std::vector<std::string_view> op_trace() const {
    std::vector<std::string_view> ops;
    for (const auto& n : nodes_) {
      if (n->op != "leaf") ops.push_back(n->op);
    }
    return ops;
  }

  std::size_t count(std::string_view op) const {
    return static_cast<std::size_t>(std::count_if(
        nodes_.begin(), nodes_.end(), [&](const NodePtr& n) { return n->op == op; }));
  }

 private:
  std::vector<NodePtr> nodes_;
};

/// Reverse-mode sweep from a scalar loss. Gradients of trainable leaves
/// accumulate; call zero_grad() on parameters between steps.
inline void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw DimensionError("backward: loss must be a scalar, got shape " +
                         (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  }
  const Tape tape = Tape::record(loss);
  for (const auto& n : tape.nodes()) {
    if (n->backward) n->grad.assign(n->value.size(), 0.0);
  }
  auto& root = loss.node();
  if (!root.requires_grad) return;
  root.grad_buffer()[0] += 1.0;
  const auto nodes = tape.nodes();
  for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
    Node& n = **it;
    if (n.backward) n.backward(n);
  }
}

namespace detail {

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

inline void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* what) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": " + what + " must have rank " +
                         std::to_string(rank) + ", got " + shape_str(t.shape()));
  }
}

}  // namespace detail

}  // namespace glyph
