// Copyright (c) 2026, The PartialFormer Authors
// SPDX-License-Identifier: Apache-2.0

#include "partialformer/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "partialformer/errors.hpp"

namespace pf {

namespace {

thread_local bool t_grad_enabled = true;
thread_local ActivationPatternRecorder* t_recorder = nullptr;

detail::Node& checked(const std::shared_ptr<detail::Node>& node) {
  if (!node) throw UsageError("operation on an undefined tensor");
  return *node;
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor detail::make_result(Shape shape, std::vector<double> data, std::vector<Tensor> parents,
                           BackwardFn backward_fn) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->leaf = false;
  bool needs = false;
  if (t_grad_enabled) {
    for (const Tensor& p : parents) {
      if (p.defined() && p.requires_grad()) {
        needs = true;
        break;
      }
    }
  }
  if (needs) {
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (const Tensor& p : parents) node->parents.push_back(p.node());
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  for (std::size_t e : shape) {
    if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_str(shape));
  }
  auto node = std::make_shared<detail::Node>();
  node->data.assign(shape_numel(shape), value);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
  for (std::size_t e : shape) {
    if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_str(shape));
  }
  if (data.size() != shape_numel(shape)) {
    throw DimensionError("data length " + std::to_string(data.size()) + " does not match shape " +
                         shape_str(shape));
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value) { return from_data({1}, {value}); }

Tensor Tensor::identity(std::size_t n) {
  Tensor t = zeros({n, n});
  auto d = t.mutable_data();
  for (std::size_t i = 0; i < n; ++i) d[i * n + i] = 1.0;
  return t;
}

const Shape& Tensor::shape() const { return checked(node_).shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " + shape_str(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return checked(node_).data.size(); }

std::span<const double> Tensor::data() const { return checked(node_).data; }

std::span<double> Tensor::mutable_data() {
  detail::Node& n = checked(node_);
  if (!n.leaf) throw UsageError("op results are immutable; only leaf tensors may be written");
  return n.data;
}

double Tensor::item() const {
  const detail::Node& n = checked(node_);
  if (n.data.size() != 1) throw UsageError("item() requires a one-element tensor, got " + shape_str(n.shape));
  return n.data[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  const detail::Node& n = checked(node_);
  if (index.size() != n.shape.size()) throw DimensionError("index rank mismatch for " + shape_str(n.shape));
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (std::size_t i : index) {
    if (i >= n.shape[axis]) throw DimensionError("index out of range for " + shape_str(n.shape));
    flat = flat * n.shape[axis] + i;
    ++axis;
  }
  return n.data[flat];
}

bool Tensor::requires_grad() const { return checked(node_).requires_grad; }

bool Tensor::is_leaf() const { return checked(node_).leaf; }

bool Tensor::has_grad() const {
  const detail::Node& n = checked(node_);
  return n.grad.size() == n.data.size();
}

std::span<const double> Tensor::grad() const {
  detail::Node& n = checked(node_);
  return n.ensure_grad();
}

void Tensor::zero_grad() {
  detail::Node& n = checked(node_);
  std::fill(n.grad.begin(), n.grad.end(), 0.0);
}

Tensor Tensor::detach() const {
  const detail::Node& n = checked(node_);
  return from_data(n.shape, n.data, false);
}

Tensor Tensor::clone_leaf(bool requires_grad) const {
  const detail::Node& n = checked(node_);
  return from_data(n.shape, n.data, requires_grad);
}

void backward(const Tensor& loss) {
  if (!loss.defined()) throw UsageError("backward on an undefined tensor");
  if (loss.numel() != 1) {
    throw UsageError("backward requires a scalar loss, got shape " + shape_str(loss.shape()));
  }
  detail::Node* root = loss.node().get();
  if (!root->requires_grad) return;

  // Iterative post-order DFS yields a topological order.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Interior gradients are per-sweep scratch.
  for (detail::Node* n : order) {
    if (!n->leaf) n->grad.assign(n->data.size(), 0.0);
  }
  root->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

bool grad_mode_enabled() { return t_grad_enabled; }

ActivationPatternRecorder::ActivationPatternRecorder() : previous_(t_recorder) { t_recorder = this; }
ActivationPatternRecorder::~ActivationPatternRecorder() { t_recorder = previous_; }

ActivationPatternRecorder* ActivationPatternRecorder::active() { return t_recorder; }

void ActivationPatternRecorder::record(std::span<const double> pre_activation) {
  for (double v : pre_activation) {
    hash_ ^= (v > 0.0) ? 0x9E3779B97F4A7C15ULL : 0x7F4A7C159E3779B9ULL;
    hash_ *= 1099511628211ULL;
  }
  count_ += pre_activation.size();
}

}  // namespace pf
