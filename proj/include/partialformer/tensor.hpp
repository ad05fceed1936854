// Copyright (c) 2026, The PartialFormer Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major tensor of doubles with a reverse-mode gradient tape.
//
// A Tensor is a cheap handle onto an immutable node. Operations create new
// nodes; when any input requires a gradient the result records its parents
// and a backward closure. The tape is therefore rebuilt on every forward
// pass and released when the last handle to the loss goes away.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace pf {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class Tensor;

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  bool leaf = true;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into parents' grads.
  std::function<void(Node&)> backward_fn;

  std::vector<double>& ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    return grad;
  }
};

using BackwardFn = std::function<void(Node&)>;

// Builds an op result. When no parent requires a gradient (or grad mode is
// off) the parents and closure are dropped and the result is a plain
// constant.
Tensor make_result(Shape shape, std::vector<double> data, std::vector<Tensor> parents,
                   BackwardFn backward_fn);

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double value);
  static Tensor identity(std::size_t n);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  // Only leaves may be written; op results are immutable.
  std::span<double> mutable_data();
  double item() const;
  double at(std::initializer_list<std::size_t> index) const;

  bool requires_grad() const;
  bool is_leaf() const;
  bool has_grad() const;
  // Zero-filled view when no gradient has been accumulated yet.
  std::span<const double> grad() const;
  void zero_grad();

  // Same data, detached from the tape. Leaves get a fresh copy.
  Tensor detach() const;
  // Deep copy as a new leaf with the given requires_grad flag.
  Tensor clone_leaf(bool requires_grad) const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

// Reverse-mode sweep from a one-element tensor. Gradients accumulate into
// every reachable tensor that requires them (leaves keep them across calls
// until zero_grad()).
void backward(const Tensor& loss);

// Disables tape recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_mode_enabled();

// Records the sign pattern of every ReLU input evaluated on this thread while
// installed. Gradient checks use it to tell whether a finite-difference
// stencil straddled a kink.
class ActivationPatternRecorder {
 public:
  ActivationPatternRecorder();
  ~ActivationPatternRecorder();
  ActivationPatternRecorder(const ActivationPatternRecorder&) = delete;
  ActivationPatternRecorder& operator=(const ActivationPatternRecorder&) = delete;

  void record(std::span<const double> pre_activation);
  std::uint64_t hash() const { return hash_; }
  std::size_t count() const { return count_; }
  void reset() {
    hash_ = 1469598103934665603ULL;
    count_ = 0;
  }

  static ActivationPatternRecorder* active();

 private:
  std::uint64_t hash_ = 1469598103934665603ULL;
  std::size_t count_ = 0;
  ActivationPatternRecorder* previous_;
};

}  // namespace pf
