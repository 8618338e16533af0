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

#include "edgeattnet/layers.h"

#include <cmath>
#include <stdexcept>

namespace edgeattnet::layers {

Tensor ParamRegistry::create(const std::string& name, Shape shape, Init init,
                             std::int64_t fan_in, std::int64_t fan_out) {
  for (const auto& [existing, unused] : layout_) {
    if (existing == name) throw std::logic_error("duplicate parameter name " + name);
  }
  layout_.emplace_back(name, shape);
  if (!allocate_) return Tensor();
  const auto n = static_cast<std::size_t>(shape_numel(shape));
  std::vector<double> values(n, init == Init::kOnes ? 1.0 : 0.0);
  if (init == Init::kKaimingUniform || init == Init::kXavierUniform) {
    const double bound =
        init == Init::kKaimingUniform
            ? std::sqrt(6.0 / static_cast<double>(fan_in))
            : std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : values) v = dist(rng_);
  }
  Tensor t = Tensor::from_data(std::move(shape), std::move(values), true);
  params_.push_back({name, t});
  return t;
}

Conv2d::Conv2d(ParamRegistry& reg, const std::string& name, int in, int out,
               int kernel, bool with_bias)
    : padding(kernel / 2) {
  weight = reg.create(name + ".weight", {out, in, kernel, kernel},
                      Init::kKaimingUniform, static_cast<std::int64_t>(in) * kernel * kernel);
  if (with_bias) bias = reg.create(name + ".bias", {out}, Init::kZeros);
}

Tensor Conv2d::forward(const Tensor& x) const {
  return ops::conv2d(x, weight, bias, 1, padding);
}

BatchNorm2d::BatchNorm2d(ParamRegistry& reg, const std::string& layer_name,
                         int channels, double bn_momentum, double bn_eps)
    : name(layer_name),
      stats(ops::BatchNormStats::identity(channels)),
      momentum(bn_momentum),
      eps(bn_eps) {
  gamma = reg.create(name + ".weight", {channels}, Init::kOnes);
  beta = reg.create(name + ".bias", {channels}, Init::kZeros);
}

Tensor BatchNorm2d::forward(const Tensor& x, bool training) {
  ops::BatchNormOptions options;
  options.training = training;
  options.momentum = momentum;
  options.eps = eps;
  return ops::batchnorm2d(x, gamma, beta, &stats, options);
}

DoubleConv::DoubleConv(ParamRegistry& reg, const std::string& name, int in,
                       int out, bool bias, bool batchnorm, double bn_momentum,
                       double bn_eps) {
  conv1 = Conv2d(reg, name + ".conv1", in, out, 3, bias);
  if (batchnorm) bn1.emplace(reg, name + ".bn1", out, bn_momentum, bn_eps);
  conv2 = Conv2d(reg, name + ".conv2", out, out, 3, bias);
  if (batchnorm) bn2.emplace(reg, name + ".bn2", out, bn_momentum, bn_eps);
}

Tensor DoubleConv::forward(const Tensor& x, bool training) {
  Tensor y = conv1.forward(x);
  if (bn1) y = bn1->forward(y, training);
  y = ops::relu(y);
  y = conv2.forward(y);
  if (bn2) y = bn2->forward(y, training);
  return ops::relu(y);
}

void DoubleConv::append_buffers(std::vector<NamedBuffer>& out) {
  for (auto* bn : {bn1 ? &*bn1 : nullptr, bn2 ? &*bn2 : nullptr}) {
    if (bn == nullptr) continue;
    out.push_back({bn->name + ".running_mean", &bn->stats.mean});
    out.push_back({bn->name + ".running_var", &bn->stats.var});
  }
}

UpConv::UpConv(ParamRegistry& reg, const std::string& name, int in, int out,
               bool with_bias) {
  // Each output pixel sees exactly `in` inputs through a 2x2 stride-2 kernel.
  weight = reg.create(name + ".weight", {in, out, 2, 2}, Init::kKaimingUniform, in);
  if (with_bias) bias = reg.create(name + ".bias", {out}, Init::kZeros);
}

Tensor UpConv::forward(const Tensor& x) const {
  return ops::conv_transpose2d(x, weight, bias, 2);
}

EdgeBranch::EdgeBranch(ParamRegistry& reg, const std::string& name, int in_channels)
    : conv(reg, name + ".conv", in_channels, 1, 3, true) {}

EdgePrior EdgeBranch::forward(const Tensor& input, std::int64_t height,
                              std::int64_t width) const {
  EdgePrior prior;
  prior.edge_map = ops::sigmoid(conv.forward(input));
  prior.resized = ops::bilinear_resize(prior.edge_map, height, width);
  return prior;
}

AttentionBlock::AttentionBlock(ParamRegistry& reg, const std::string& name,
                               const AttentionConfig& cfg)
    : config(cfg) {
  if (cfg.heads <= 0 || cfg.head_dim <= 0 || cfg.width <= 0) {
    throw std::invalid_argument("attention: heads, head_dim and width must be positive");
  }
  const int inner = cfg.heads * cfg.head_dim;
  auto projection = [&](const std::string& p, int out, int in, bool bias,
                        Tensor& w, Tensor& b) {
    w = reg.create(name + "." + p + ".weight", {out, in}, Init::kXavierUniform, in, out);
    if (bias) b = reg.create(name + "." + p + ".bias", {out}, Init::kZeros);
  };
  projection("q", inner, cfg.width, cfg.qkv_bias, q_weight, q_bias);
  projection("k", inner, cfg.width, cfg.qkv_bias, k_weight, k_bias);
  projection("v", inner, cfg.width, cfg.qkv_bias, v_weight, v_bias);
  projection("out", cfg.width, inner, true, o_weight, o_bias);
  ln_gamma = reg.create(name + ".norm.weight", {cfg.width}, Init::kOnes);
  ln_beta = reg.create(name + ".norm.bias", {cfg.width}, Init::kZeros);
  if (cfg.edge_projection) {
    edge_proj = Conv2d(reg, name + ".edge_proj", 1, cfg.width, 1, true);
  }
}

Tensor AttentionBlock::project_edge(const EdgePrior& prior) const {
  return edge_proj.forward(prior.resized);
}

Tensor AttentionBlock::forward(const Tensor& x, const EdgePrior* prior,
                               bool training, std::mt19937_64& rng) {
  Tensor bias;
  if (config.edge_projection && prior != nullptr) bias = project_edge(*prior);
  return forward_with_bias(x, bias, training, rng);
}

Tensor AttentionBlock::forward_with_bias(const Tensor& x, const Tensor& edge_bias,
                                         bool training, std::mt19937_64& rng) {
  if (x.rank() != 4 || x.size(1) != config.width) {
    throw ShapeError("attention: expected B x " + std::to_string(config.width) +
                     " x H x W input, got " + shape_string(x.shape()));
  }
  const std::int64_t h = x.size(2);
  const std::int64_t w = x.size(3);
  if (positional.defined() && h * w != positional.size(0)) {
    throw ShapeError("attention: positional table holds " +
                     std::to_string(positional.size(0)) + " tokens, input has " +
                     std::to_string(h * w));
  }
  const Tensor tokens = ops::flatten_spatial(x);
  Tensor qk_input = tokens;
  if (edge_bias.defined()) qk_input = ops::add(tokens, ops::flatten_spatial(edge_bias));

  Tensor q = ops::linear(qk_input, q_weight, q_bias);
  Tensor k = ops::linear(qk_input, k_weight, k_bias);
  const Tensor v = ops::linear(tokens, v_weight, v_bias);
  if (positional.defined()) {
    q = ops::add(q, positional);
    k = ops::add(k, positional);
  }
  const int heads = config.heads;
  const Tensor qh = ops::split_heads(q, heads);
  const Tensor kh = ops::split_heads(k, heads);
  const Tensor vh = ops::split_heads(v, heads);
  const Tensor scores = ops::scale(ops::matmul(qh, ops::transpose_last2(kh)),
                                   1.0 / std::sqrt(static_cast<double>(config.head_dim)));
  last_attention_ = ops::softmax_lastdim(scores);
  const Tensor context = ops::merge_heads(ops::matmul(last_attention_, vh), heads);
  const Tensor projected = ops::linear(context, o_weight, o_bias);
  Tensor y = ops::layernorm_lastdim(ops::add(tokens, projected), ln_gamma, ln_beta,
                                    config.ln_eps);
  y = ops::dropout(y, config.dropout_p, training, rng);
  return ops::unflatten_spatial(y, h, w);
}

}  // namespace edgeattnet::layers
