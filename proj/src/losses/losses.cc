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

#include "edgeattnet/losses.h"

#include <cmath>

#include "edgeattnet/ops.h"

namespace edgeattnet::losses {
namespace {

void require_same_shape(const char* op, const Tensor& logits, const Tensor& target) {
  if (logits.shape() != target.shape()) {
    throw ShapeError(std::string(op) + ": logits " + shape_string(logits.shape()) +
                     " and target " + shape_string(target.shape()) + " differ");
  }
}

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

Tensor bce_with_logits(const Tensor& logits, const Tensor& target) {
  require_same_shape("bce_with_logits", logits, target);
  const auto z = logits.data();
  const auto t = target.data();
  const double n = static_cast<double>(z.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    total += std::max(z[i], 0.0) - z[i] * t[i] + std::log1p(std::exp(-std::abs(z[i])));
  }
  return make_op("bce_with_logits", {1}, {total / n}, {logits},
                 [target, n](GradContext& ctx) {
                   const double g = ctx.output_grad()[0] / n;
                   const auto zs = ctx.input(0);
                   const auto ts = target.data();
                   auto gz = ctx.input_grad(0);
                   for (std::size_t i = 0; i < gz.size(); ++i) {
                     gz[i] += g * (stable_sigmoid(zs[i]) - ts[i]);
                   }
                 });
}

Tensor dice_loss(const Tensor& logits, const Tensor& target, double smooth) {
  require_same_shape("dice_loss", logits, target);
  const auto z = logits.data();
  const auto t = target.data();
  std::vector<double> p(z.size());
  double inter = 0.0;
  double denom = smooth;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = stable_sigmoid(z[i]);
    inter += p[i] * t[i];
    denom += p[i] + t[i];
  }
  const double numer = 2.0 * inter + smooth;
  const double loss = 1.0 - numer / denom;
  return make_op("dice_loss", {1}, {loss}, {logits},
                 [target, p = std::move(p), numer, denom](GradContext& ctx) {
                   const double g = ctx.output_grad()[0];
                   const auto ts = target.data();
                   auto gz = ctx.input_grad(0);
                   const double d2 = denom * denom;
                   for (std::size_t i = 0; i < gz.size(); ++i) {
                     const double dl_dp = -(2.0 * ts[i] * denom - numer) / d2;
                     gz[i] += g * dl_dp * p[i] * (1.0 - p[i]);
                   }
                 });
}

LossValue bce_dice(const Tensor& logits, const Tensor& target, double smooth) {
  LossValue v;
  v.bce = bce_with_logits(logits, target);
  v.dice = dice_loss(logits, target, smooth);
  v.total = ops::add(v.bce, v.dice);
  return v;
}

double dice_coefficient(const Tensor& logits, const Tensor& target, double threshold) {
  require_same_shape("dice_coefficient", logits, target);
  const auto z = logits.data();
  const auto t = target.data();
  double inter = 0.0;
  double sizes = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double pred = stable_sigmoid(z[i]) > threshold ? 1.0 : 0.0;
    const double gt = t[i] > 0.5 ? 1.0 : 0.0;
    inter += pred * gt;
    sizes += pred + gt;
  }
  return sizes == 0.0 ? 1.0 : 2.0 * inter / sizes;
}

}  // namespace edgeattnet::losses
