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

// Normalization, activation and dropout operations.

#include <algorithm>
#include <cmath>

#include "edgeattnet/ops.h"
#include "eigen_util.h"

namespace edgeattnet::ops {

using internal::require_rank;

Tensor batchnorm2d(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                   BatchNormStats* stats, const BatchNormOptions& options) {
  require_rank(input, 4, "batchnorm2d", "input");
  const auto batch = input.size(0);
  const auto channels = input.size(1);
  const auto plane = input.size(2) * input.size(3);
  if (gamma.numel() != channels || beta.numel() != channels) {
    throw ShapeError("batchnorm2d: gamma/beta must have " +
                     std::to_string(channels) + " elements");
  }
  if (stats != nullptr && (static_cast<std::int64_t>(stats->mean.size()) != channels ||
                           static_cast<std::int64_t>(stats->var.size()) != channels)) {
    throw ShapeError("batchnorm2d: running stats do not match channel count");
  }
  if (!options.training && stats == nullptr) {
    throw std::invalid_argument("batchnorm2d: eval mode needs running stats");
  }
  const std::int64_t count = batch * plane;
  const double* x = input.data().data();
  std::vector<double> mean(channels), inv_std(channels);
  for (std::int64_t c = 0; c < channels; ++c) {
    if (options.training) {
      double s = 0.0;
      for (std::int64_t n = 0; n < batch; ++n) {
        const double* p = x + (n * channels + c) * plane;
        for (std::int64_t i = 0; i < plane; ++i) s += p[i];
      }
      const double mu = s / static_cast<double>(count);
      double sq = 0.0;
      for (std::int64_t n = 0; n < batch; ++n) {
        const double* p = x + (n * channels + c) * plane;
        for (std::int64_t i = 0; i < plane; ++i) sq += (p[i] - mu) * (p[i] - mu);
      }
      const double var = sq / static_cast<double>(count);
      mean[c] = mu;
      inv_std[c] = 1.0 / std::sqrt(var + options.eps);
      if (stats != nullptr) {
        const double unbiased =
            count > 1 ? sq / static_cast<double>(count - 1) : var;
        stats->mean[c] = (1.0 - options.momentum) * stats->mean[c] + options.momentum * mu;
        stats->var[c] = (1.0 - options.momentum) * stats->var[c] + options.momentum * unbiased;
      }
    } else {
      mean[c] = stats->mean[c];
      inv_std[c] = 1.0 / std::sqrt(stats->var[c] + options.eps);
    }
  }

  std::vector<double> normalized(input.data().size());
  std::vector<double> out(input.data().size());
  const double* g = gamma.data().data();
  const double* b = beta.data().data();
  for (std::int64_t n = 0; n < batch; ++n) {
    for (std::int64_t c = 0; c < channels; ++c) {
      const std::int64_t off = (n * channels + c) * plane;
      for (std::int64_t i = 0; i < plane; ++i) {
        const double xh = (x[off + i] - mean[c]) * inv_std[c];
        normalized[off + i] = xh;
        out[off + i] = g[c] * xh + b[c];
      }
    }
  }

  const bool training = options.training;
  return make_op(
      "batchnorm2d", input.shape(), std::move(out), {input, gamma, beta},
      [=, normalized = std::move(normalized),
       inv_std = std::move(inv_std)](GradContext& ctx) {
        const double* gy = ctx.output_grad().data();
        const double* g = ctx.input(1).data();
        auto gx = ctx.input_grad(0);
        auto gg = ctx.input_grad(1);
        auto gb = ctx.input_grad(2);
        for (std::int64_t c = 0; c < channels; ++c) {
          double sum_dy = 0.0, sum_dy_xh = 0.0;
          for (std::int64_t n = 0; n < batch; ++n) {
            const std::int64_t off = (n * channels + c) * plane;
            for (std::int64_t i = 0; i < plane; ++i) {
              sum_dy += gy[off + i];
              sum_dy_xh += gy[off + i] * normalized[off + i];
            }
          }
          if (!gg.empty()) gg[c] += sum_dy_xh;
          if (!gb.empty()) gb[c] += sum_dy;
          if (gx.empty()) continue;
          const double k = g[c] * inv_std[c];
          const double inv_n = 1.0 / static_cast<double>(count);
          for (std::int64_t n = 0; n < batch; ++n) {
            const std::int64_t off = (n * channels + c) * plane;
            for (std::int64_t i = 0; i < plane; ++i) {
              if (training) {
                gx[off + i] += k * (gy[off + i] - inv_n * sum_dy -
                                    normalized[off + i] * inv_n * sum_dy_xh);
              } else {
                gx[off + i] += k * gy[off + i];
              }
            }
          }
        }
      });
}

Tensor relu(const Tensor& input) {
  std::vector<double> out(input.data().begin(), input.data().end());
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  if (tracing_branches()) {
    for (double v : out) trace_branch(v > 0.0);
  }
  return make_op("relu", input.shape(), std::move(out), {input},
                 [](GradContext& ctx) {
                   auto gx = ctx.input_grad(0);
                   const auto x = ctx.input(0);
                   const auto gy = ctx.output_grad();
                   for (std::size_t i = 0; i < gx.size(); ++i) {
                     if (x[i] > 0.0) gx[i] += gy[i];
                   }
                 });
}

Tensor sigmoid(const Tensor& input) {
  std::vector<double> out(input.data().size());
  const auto x = input.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = x[i] >= 0.0 ? 1.0 / (1.0 + std::exp(-x[i]))
                         : std::exp(x[i]) / (1.0 + std::exp(x[i]));
  }
  return make_op("sigmoid", input.shape(), std::move(out), {input},
                 [](GradContext& ctx) {
                   auto gx = ctx.input_grad(0);
                   const auto y = ctx.output();
                   const auto gy = ctx.output_grad();
                   for (std::size_t i = 0; i < gx.size(); ++i) {
                     gx[i] += gy[i] * y[i] * (1.0 - y[i]);
                   }
                 });
}

Tensor softmax_lastdim(const Tensor& input) {
  const auto d = input.size(-1);
  const auto rows = input.numel() / d;
  std::vector<double> out(input.data().size());
  const double* x = input.data().data();
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* xr = x + r * d;
    double* yr = out.data() + r * d;
    double m = xr[0];
    for (std::int64_t i = 1; i < d; ++i) m = std::max(m, xr[i]);
    double s = 0.0;
    for (std::int64_t i = 0; i < d; ++i) {
      yr[i] = std::exp(xr[i] - m);
      s += yr[i];
    }
    for (std::int64_t i = 0; i < d; ++i) yr[i] /= s;
  }
  return make_op("softmax_lastdim", input.shape(), std::move(out), {input},
                 [d, rows](GradContext& ctx) {
                   auto gx = ctx.input_grad(0);
                   const double* y = ctx.output().data();
                   const double* gy = ctx.output_grad().data();
                   for (std::int64_t r = 0; r < rows; ++r) {
                     double dot = 0.0;
                     for (std::int64_t i = 0; i < d; ++i) dot += gy[r * d + i] * y[r * d + i];
                     for (std::int64_t i = 0; i < d; ++i) {
                       gx[r * d + i] += y[r * d + i] * (gy[r * d + i] - dot);
                     }
                   }
                 });
}

Tensor layernorm_lastdim(const Tensor& input, const Tensor& gamma,
                         const Tensor& beta, double eps) {
  const auto d = input.size(-1);
  if (gamma.numel() != d || beta.numel() != d) {
    throw ShapeError("layernorm_lastdim: gamma/beta must have " +
                     std::to_string(d) + " elements, input " +
                     shape_string(input.shape()));
  }
  const auto rows = input.numel() / d;
  const double* x = input.data().data();
  const double* g = gamma.data().data();
  const double* b = beta.data().data();
  std::vector<double> normalized(input.data().size());
  std::vector<double> out(input.data().size());
  std::vector<double> inv_std(static_cast<std::size_t>(rows));
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* xr = x + r * d;
    double mu = 0.0;
    for (std::int64_t i = 0; i < d; ++i) mu += xr[i];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::int64_t i = 0; i < d; ++i) var += (xr[i] - mu) * (xr[i] - mu);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = is;
    for (std::int64_t i = 0; i < d; ++i) {
      const double xh = (xr[i] - mu) * is;
      normalized[r * d + i] = xh;
      out[r * d + i] = g[i] * xh + b[i];
    }
  }
  return make_op(
      "layernorm_lastdim", input.shape(), std::move(out), {input, gamma, beta},
      [d, rows, normalized = std::move(normalized),
       inv_std = std::move(inv_std)](GradContext& ctx) {
        const double* gy = ctx.output_grad().data();
        const double* g = ctx.input(1).data();
        auto gx = ctx.input_grad(0);
        auto gg = ctx.input_grad(1);
        auto gb = ctx.input_grad(2);
        std::vector<double> dxh(static_cast<std::size_t>(d));
        for (std::int64_t r = 0; r < rows; ++r) {
          const double* gr = gy + r * d;
          const double* xh = normalized.data() + r * d;
          double sum_dxh = 0.0, sum_dxh_xh = 0.0;
          for (std::int64_t i = 0; i < d; ++i) {
            if (!gg.empty()) gg[i] += gr[i] * xh[i];
            if (!gb.empty()) gb[i] += gr[i];
            dxh[i] = gr[i] * g[i];
            sum_dxh += dxh[i];
            sum_dxh_xh += dxh[i] * xh[i];
          }
          if (gx.empty()) continue;
          const double inv_d = 1.0 / static_cast<double>(d);
          for (std::int64_t i = 0; i < d; ++i) {
            gx[r * d + i] += inv_std[r] * (dxh[i] - inv_d * sum_dxh - xh[i] * inv_d * sum_dxh_xh);
          }
        }
      });
}

Tensor dropout(const Tensor& input, double p, bool training,
               std::mt19937_64& rng) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw std::invalid_argument("dropout: p must lie in [0, 1), got " +
                                std::to_string(p));
  }
  if (!training || p == 0.0) return input;
  const double keep_scale = 1.0 / (1.0 - p);
  std::bernoulli_distribution keep(1.0 - p);
  std::vector<double> mask(input.data().size());
  std::vector<double> out(input.data().size());
  const auto x = input.data();
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = keep(rng) ? keep_scale : 0.0;
    out[i] = x[i] * mask[i];
  }
  return make_op("dropout", input.shape(), std::move(out), {input},
                 [mask = std::move(mask)](GradContext& ctx) {
                   auto gx = ctx.input_grad(0);
                   const auto gy = ctx.output_grad();
                   for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i] * mask[i];
                 });
}

}  // namespace edgeattnet::ops
