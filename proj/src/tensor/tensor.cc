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

#include "edgeattnet/tensor.h"

#include <algorithm>
#include <sstream>
#include <unordered_set>
#include <utility>

namespace edgeattnet {
namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward_fn;
  std::string op;

  bool is_leaf() const { return !backward_fn; }

  std::vector<double>& ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

namespace {

thread_local bool g_grad_enabled = true;
thread_local std::vector<std::string>* g_trace = nullptr;
thread_local std::uint64_t* g_branches = nullptr;

void check_shape(const Shape& shape) {
  if (shape.empty() || shape.size() > 4) {
    throw ShapeError("tensor rank must be 1-4, got shape " +
                     shape_string(shape));
  }
  for (auto extent : shape) {
    if (extent < 0) throw ShapeError("negative extent in " + shape_string(shape));
  }
}

std::shared_ptr<detail::Node> new_node(Shape shape, std::vector<double> values,
                                       bool requires_grad) {
  check_shape(shape);
  if (static_cast<std::int64_t>(values.size()) != shape_numel(shape)) {
    throw ShapeError("data length " + std::to_string(values.size()) +
                     " does not match shape " + shape_string(shape));
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->requires_grad = requires_grad;
  return node;
}

}  // namespace

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto extent : shape) n *= extent;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const auto n = shape_numel(shape);
  return Tensor(new_node(std::move(shape),
                         std::vector<double>(static_cast<std::size_t>(n), value),
                         requires_grad));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> values,
                         bool requires_grad) {
  return Tensor(new_node(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(new_node({1}, {value}, requires_grad));
}

const Shape& Tensor::shape() const { return node_->shape; }

int Tensor::rank() const { return static_cast<int>(node_->shape.size()); }

std::int64_t Tensor::size(int axis) const {
  const int r = rank();
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " +
                     shape_string(shape()));
  }
  return node_->shape[static_cast<std::size_t>(a)];
}

std::int64_t Tensor::numel() const {
  return static_cast<std::int64_t>(node_->data.size());
}

std::span<const double> Tensor::data() const { return node_->data; }

std::span<double> Tensor::mutable_data() { return node_->data; }

double Tensor::item() const {
  if (node_->data.size() != 1) {
    throw ShapeError("item() needs a one-element tensor, got " +
                     shape_string(shape()));
  }
  return node_->data[0];
}

bool Tensor::requires_grad() const { return node_->requires_grad; }

void Tensor::set_requires_grad(bool requires_grad) {
  if (!is_leaf()) throw std::logic_error("requires_grad can only be set on leaves");
  node_->requires_grad = requires_grad;
}

bool Tensor::is_leaf() const { return node_->is_leaf(); }

bool Tensor::has_grad() const {
  return node_->grad.size() == node_->data.size() && !node_->data.empty();
}

std::span<const double> Tensor::grad() const {
  if (!has_grad()) throw std::logic_error("tensor has no gradient");
  return node_->grad;
}

std::span<double> Tensor::mutable_grad() { return node_->ensure_grad(); }

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const {
  return Tensor(new_node(node_->shape, node_->data, false));
}

void Tensor::backward() const { edgeattnet::backward(*this); }

void backward(const Tensor& scalar) {
  if (!scalar.defined() || scalar.numel() != 1) {
    throw ShapeError("backward() needs a one-element tensor, got " +
                     (scalar.defined() ? shape_string(scalar.shape())
                                       : std::string("undefined")));
  }
  detail::Node* root = scalar.node().get();
  if (!root->requires_grad) {
    throw std::logic_error("backward() on a tensor that does not require grad");
  }

  // Iterative post-order DFS gives a topological order (inputs first).
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (detail::Node* node : order) {
    if (node->is_leaf()) {
      node->ensure_grad();
    } else {
      node->grad.assign(node->data.size(), 0.0);
    }
  }
  root->grad[0] += 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (node->is_leaf()) continue;
    GradContext ctx(*node);
    node->backward_fn(ctx);
  }
}

std::span<const double> GradContext::output() const { return node_.data; }

std::span<const double> GradContext::output_grad() const { return node_.grad; }

std::span<const double> GradContext::input(std::size_t i) const {
  return node_.inputs.at(i)->data;
}

const Shape& GradContext::input_shape(std::size_t i) const {
  return node_.inputs.at(i)->shape;
}

bool GradContext::needs_grad(std::size_t i) const {
  return node_.inputs.at(i)->requires_grad;
}

std::span<double> GradContext::input_grad(std::size_t i) {
  auto& input = *node_.inputs.at(i);
  if (!input.requires_grad) return {};
  return input.ensure_grad();
}

Tensor make_op(std::string_view op, Shape shape, std::vector<double> values,
               std::vector<Tensor> inputs, BackwardFn backward) {
  if (g_trace != nullptr) g_trace->emplace_back(op);
  auto node = new_node(std::move(shape), std::move(values), false);
  node->op = std::string(op);
  if (!g_grad_enabled || !backward) return Tensor(std::move(node));
  bool any = false;
  for (const auto& input : inputs) {
    if (input.defined() && input.requires_grad()) any = true;
  }
  if (!any) return Tensor(std::move(node));
  node->requires_grad = true;
  node->inputs.reserve(inputs.size());
  for (auto& input : inputs) {
    if (!input.defined()) {
      // Placeholder keeps input indices stable for optional operands.
      auto placeholder = std::make_shared<detail::Node>();
      placeholder->shape = {0};
      node->inputs.push_back(std::move(placeholder));
    } else {
      node->inputs.push_back(input.node());
    }
  }
  node->backward_fn = std::move(backward);
  return Tensor(std::move(node));
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }

NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

OpTrace::OpTrace() {
  g_trace = &ops_;
  g_branches = &branches_;
}

OpTrace::~OpTrace() {
  g_trace = nullptr;
  g_branches = nullptr;
}

bool tracing_branches() { return g_branches != nullptr; }

void trace_branch(std::int64_t decision) {
  if (g_branches == nullptr) return;
  std::uint64_t h = *g_branches ^ static_cast<std::uint64_t>(decision);
  h *= 0x100000001b3ULL;
  *g_branches = h ^ (h >> 29);
}

bool OpTrace::contains(std::string_view op) const {
  return std::find(ops_.begin(), ops_.end(), op) != ops_.end();
}

}  // namespace edgeattnet
