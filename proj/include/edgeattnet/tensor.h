/* Copyright 2026 The EdgeAttNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef EDGEATTNET_TENSOR_H_
#define EDGEATTNET_TENSOR_H_

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace edgeattnet {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

// Raised by every tensor operation whose operands have incompatible shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {
struct Node;
}  // namespace detail

// Dense row-major real tensor of rank 1-4 with optional reverse-mode gradient.
//
// A Tensor is a cheap handle; copies share storage. Values produced by
// operations are never modified afterwards. Leaf tensors (parameters) are the
// only ones mutated in place, by the optimizer.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> values,
                          bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  int rank() const;
  // Negative axes count from the end.
  std::int64_t size(int axis) const;
  std::int64_t numel() const;

  std::span<const double> data() const;
  std::span<double> mutable_data();
  double item() const;

  bool requires_grad() const;
  void set_requires_grad(bool requires_grad);
  bool is_leaf() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  // Reverse-mode sweep from a one-element tensor. Leaf gradients accumulate
  // across calls; interior gradients are recomputed on every call.
  void backward() const;

  Tensor detach() const;

  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

void backward(const Tensor& scalar);

// Gives an operation's backward function access to the forward values and to
// the gradient buffers of the inputs that require one.
class GradContext {
 public:
  explicit GradContext(detail::Node& node) : node_(node) {}

  std::span<const double> output() const;
  std::span<const double> output_grad() const;
  std::span<const double> input(std::size_t i) const;
  const Shape& input_shape(std::size_t i) const;
  bool needs_grad(std::size_t i) const;
  // Gradient buffer of input i; backward functions add into it.
  std::span<double> input_grad(std::size_t i);

 private:
  detail::Node& node_;
};

using BackwardFn = std::function<void(GradContext&)>;

// Builds the result node of an operation. When gradients are disabled or no
// input requires one, the backward function and input links are dropped.
Tensor make_op(std::string_view op, Shape shape, std::vector<double> values,
               std::vector<Tensor> inputs, BackwardFn backward);

// Disables graph construction on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Records the name of every operation executed on the current thread while
// alive. Nested traces are not supported.
class OpTrace {
 public:
  OpTrace();
  ~OpTrace();
  OpTrace(const OpTrace&) = delete;
  OpTrace& operator=(const OpTrace&) = delete;

  const std::vector<std::string>& ops() const { return ops_; }
  bool contains(std::string_view op) const;

  // Hash of every branch taken by piecewise-linear ops (relu sign, maxpool
  // argmax). Two traced passes with equal signatures ran on the same linear
  // piece of the network.
  std::uint64_t branch_signature() const { return branches_; }

 private:
  std::vector<std::string> ops_;
  std::uint64_t branches_ = 0xcbf29ce484222325ULL;
};

// For op implementations: true while an OpTrace is alive on this thread.
bool tracing_branches();
// Folds one branch decision into the active trace's signature.
void trace_branch(std::int64_t decision);

}  // namespace edgeattnet

#endif  // EDGEATTNET_TENSOR_H_
