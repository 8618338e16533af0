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

// Elementwise, reduction, reshaping and matrix operations.

#include <algorithm>

#include "edgeattnet/ops.h"
#include "eigen_util.h"

namespace edgeattnet::ops {

using internal::ConstMatMap;
using internal::MatMap;
using internal::require_rank;

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != b.rank() || (a.rank() != 2 && a.rank() != 3)) {
    throw ShapeError("matmul: operands must both be rank 2 or rank 3, got " +
                     shape_string(a.shape()) + " and " + shape_string(b.shape()));
  }
  const bool batched = a.rank() == 3;
  const std::int64_t batch = batched ? a.size(0) : 1;
  const auto m = a.size(-2), k = a.size(-1), n = b.size(-1);
  if (b.size(-2) != k || (batched && b.size(0) != batch)) {
    throw ShapeError("matmul: incompatible shapes " + shape_string(a.shape()) +
                     " and " + shape_string(b.shape()));
  }
  std::vector<double> out(static_cast<std::size_t>(batch * m * n));
  for (std::int64_t i = 0; i < batch; ++i) {
    MatMap(out.data() + i * m * n, m, n).noalias() =
        ConstMatMap(a.data().data() + i * m * k, m, k) *
        ConstMatMap(b.data().data() + i * k * n, k, n);
  }
  Shape shape = batched ? Shape{batch, m, n} : Shape{m, n};
  return make_op("matmul", std::move(shape), std::move(out), {a, b},
                 [=](GradContext& ctx) {
                   auto ga = ctx.input_grad(0);
                   auto gb = ctx.input_grad(1);
                   for (std::int64_t i = 0; i < batch; ++i) {
                     ConstMatMap dc(ctx.output_grad().data() + i * m * n, m, n);
                     if (!ga.empty()) {
                       MatMap(ga.data() + i * m * k, m, k).noalias() +=
                           dc * ConstMatMap(ctx.input(1).data() + i * k * n, k, n).transpose();
                     }
                     if (!gb.empty()) {
                       MatMap(gb.data() + i * k * n, k, n).noalias() +=
                           ConstMatMap(ctx.input(0).data() + i * m * k, m, k).transpose() * dc;
                     }
                   }
                 });
}

Tensor transpose_last2(const Tensor& input) {
  if (input.rank() < 2) {
    throw ShapeError("transpose_last2: rank must be >= 2, got " +
                     shape_string(input.shape()));
  }
  const auto r = input.size(-2), c = input.size(-1);
  const auto batch = input.numel() / (r * c);
  std::vector<double> out(input.data().size());
  for (std::int64_t i = 0; i < batch; ++i) {
    MatMap(out.data() + i * r * c, c, r) =
        ConstMatMap(input.data().data() + i * r * c, r, c).transpose();
  }
  Shape shape = input.shape();
  std::swap(shape[shape.size() - 1], shape[shape.size() - 2]);
  return make_op("transpose_last2", std::move(shape), std::move(out), {input},
                 [=](GradContext& ctx) {
                   auto gx = ctx.input_grad(0);
                   for (std::int64_t i = 0; i < batch; ++i) {
                     MatMap(gx.data() + i * r * c, r, c) +=
                         ConstMatMap(ctx.output_grad().data() + i * r * c, c, r).transpose();
                   }
                 });
}

Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  require_rank(weight, 2, "linear", "weight");
  const auto in = weight.size(1), outf = weight.size(0);
  if (input.size(-1) != in) {
    throw ShapeError("linear: input " + shape_string(input.shape()) +
                     " does not match weight " + shape_string(weight.shape()));
  }
  if (bias.defined() && bias.numel() != outf) {
    throw ShapeError("linear: bias " + shape_string(bias.shape()) +
                     " does not match weight " + shape_string(weight.shape()));
  }
  const auto rows = input.numel() / in;
  std::vector<double> out(static_cast<std::size_t>(rows * outf));
  MatMap y(out.data(), rows, outf);
  y.noalias() = ConstMatMap(input.data().data(), rows, in) *
                ConstMatMap(weight.data().data(), outf, in).transpose();
  if (bias.defined()) {
    y.rowwise() += internal::ConstVecMap(bias.data().data(), outf).transpose();
  }
  Shape shape = input.shape();
  shape.back() = outf;
  return make_op("linear", std::move(shape), std::move(out), {input, weight, bias},
                 [=](GradContext& ctx) {
                   ConstMatMap dy(ctx.output_grad().data(), rows, outf);
                   auto gx = ctx.input_grad(0);
                   auto gw = ctx.input_grad(1);
                   auto gb = ctx.input_grad(2);
                   if (!gx.empty()) {
                     MatMap(gx.data(), rows, in).noalias() +=
                         dy * ConstMatMap(ctx.input(1).data(), outf, in);
                   }
                   if (!gw.empty()) {
                     MatMap(gw.data(), outf, in).noalias() +=
                         dy.transpose() * ConstMatMap(ctx.input(0).data(), rows, in);
                   }
                   if (!gb.empty()) {
                     // Plain loops keep the summation order independent of
                     // buffer alignment, so repeated runs agree bit for bit.
                     for (std::int64_t r = 0; r < rows; ++r) {
                       for (std::int64_t o = 0; o < outf; ++o) gb[o] += dy(r, o);
                     }
                   }
                 });
}

namespace {

// Number of times b repeats inside a, or -1 if b is not a trailing sub-shape.
std::int64_t broadcast_repeats(const Shape& a, const Shape& b) {
  if (b.size() > a.size()) return -1;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (a[a.size() - b.size() + i] != b[i]) return -1;
  }
  return shape_numel(a) / std::max<std::int64_t>(shape_numel(b), 1);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  const auto repeats = broadcast_repeats(a.shape(), b.shape());
  if (repeats < 0) {
    throw ShapeError("add: cannot broadcast " + shape_string(b.shape()) +
                     " onto " + shape_string(a.shape()));
  }
  const auto inner = b.numel();
  std::vector<double> out(a.data().begin(), a.data().end());
  const double* bp = b.data().data();
  for (std::int64_t r = 0; r < repeats; ++r) {
    double* o = out.data() + r * inner;
    for (std::int64_t i = 0; i < inner; ++i) o[i] += bp[i];
  }
  return make_op("add", a.shape(), std::move(out), {a, b},
                 [repeats, inner](GradContext& ctx) {
                   const auto gy = ctx.output_grad();
                   auto ga = ctx.input_grad(0);
                   auto gb = ctx.input_grad(1);
                   for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i];
                   if (gb.empty()) return;
                   for (std::int64_t r = 0; r < repeats; ++r) {
                     for (std::int64_t i = 0; i < inner; ++i) gb[i] += gy[r * inner + i];
                   }
                 });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("mul: shapes differ " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
  std::vector<double> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return make_op("mul", a.shape(), std::move(out), {a, b}, [](GradContext& ctx) {
    const auto gy = ctx.output_grad();
    auto ga = ctx.input_grad(0);
    auto gb = ctx.input_grad(1);
    const auto av = ctx.input(0);
    const auto bv = ctx.input(1);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i] * bv[i];
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gy[i] * av[i];
  });
}

Tensor scale(const Tensor& input, double factor) {
  std::vector<double> out(input.data().begin(), input.data().end());
  for (double& v : out) v *= factor;
  return make_op("scale", input.shape(), std::move(out), {input},
                 [factor](GradContext& ctx) {
                   auto gx = ctx.input_grad(0);
                   const auto gy = ctx.output_grad();
                   for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += factor * gy[i];
                 });
}

Tensor sum(const Tensor& input) {
  double s = 0.0;
  for (double v : input.data()) s += v;
  return make_op("sum", {1}, {s}, {input}, [](GradContext& ctx) {
    auto gx = ctx.input_grad(0);
    const double g = ctx.output_grad()[0];
    for (double& v : gx) v += g;
  });
}

Tensor mean(const Tensor& input) {
  return scale(sum(input), 1.0 / static_cast<double>(input.numel()));
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require_rank(a, 4, "concat_channels", "first operand");
  require_rank(b, 4, "concat_channels", "second operand");
  if (a.size(0) != b.size(0) || a.size(2) != b.size(2) || a.size(3) != b.size(3)) {
    throw ShapeError("concat_channels: " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()) + " differ outside the channel axis");
  }
  const auto batch = a.size(0);
  const auto plane = a.size(2) * a.size(3);
  const auto ca = a.size(1) * plane, cb = b.size(1) * plane;
  std::vector<double> out(static_cast<std::size_t>(batch * (ca + cb)));
  for (std::int64_t n = 0; n < batch; ++n) {
    std::copy_n(a.data().data() + n * ca, ca, out.data() + n * (ca + cb));
    std::copy_n(b.data().data() + n * cb, cb, out.data() + n * (ca + cb) + ca);
  }
  return make_op("concat_channels", {batch, a.size(1) + b.size(1), a.size(2), a.size(3)},
                 std::move(out), {a, b}, [=](GradContext& ctx) {
                   const double* gy = ctx.output_grad().data();
                   auto ga = ctx.input_grad(0);
                   auto gb = ctx.input_grad(1);
                   for (std::int64_t n = 0; n < batch; ++n) {
                     const double* src = gy + n * (ca + cb);
                     if (!ga.empty()) {
                       for (std::int64_t i = 0; i < ca; ++i) ga[n * ca + i] += src[i];
                     }
                     if (!gb.empty()) {
                       for (std::int64_t i = 0; i < cb; ++i) gb[n * cb + i] += src[ca + i];
                     }
                   }
                 });
}

namespace {

// Copies a batch of [rows, cols] matrices into their transposes, adding when
// `accumulate` is set.
void batched_transpose(const double* src, double* dst, std::int64_t batch,
                       std::int64_t rows, std::int64_t cols, bool accumulate) {
  for (std::int64_t i = 0; i < batch; ++i) {
    ConstMatMap s(src + i * rows * cols, rows, cols);
    MatMap d(dst + i * rows * cols, cols, rows);
    if (accumulate) {
      d += s.transpose();
    } else {
      d = s.transpose();
    }
  }
}

}  // namespace

Tensor flatten_spatial(const Tensor& input) {
  require_rank(input, 4, "flatten_spatial", "input");
  const auto batch = input.size(0), c = input.size(1);
  const auto t = input.size(2) * input.size(3);
  std::vector<double> out(input.data().size());
  batched_transpose(input.data().data(), out.data(), batch, c, t, false);
  return make_op("flatten_spatial", {batch, t, c}, std::move(out), {input},
                 [=](GradContext& ctx) {
                   batched_transpose(ctx.output_grad().data(), ctx.input_grad(0).data(),
                                     batch, t, c, true);
                 });
}

Tensor unflatten_spatial(const Tensor& input, std::int64_t height,
                         std::int64_t width) {
  require_rank(input, 3, "unflatten_spatial", "input");
  const auto batch = input.size(0), t = input.size(1), c = input.size(2);
  if (height * width != t) {
    throw ShapeError("unflatten_spatial: " + std::to_string(t) +
                     " tokens cannot form " + std::to_string(height) + "x" +
                     std::to_string(width));
  }
  std::vector<double> out(input.data().size());
  batched_transpose(input.data().data(), out.data(), batch, t, c, false);
  return make_op("unflatten_spatial", {batch, c, height, width}, std::move(out),
                 {input}, [=](GradContext& ctx) {
                   batched_transpose(ctx.output_grad().data(), ctx.input_grad(0).data(),
                                     batch, c, t, true);
                 });
}

namespace {

// [B, T, H, D] <-> [B, H, T, D] permutation.
void swap_token_head(const double* src, double* dst, std::int64_t batch,
                     std::int64_t a, std::int64_t b, std::int64_t d,
                     bool accumulate) {
  for (std::int64_t n = 0; n < batch; ++n) {
    for (std::int64_t i = 0; i < a; ++i) {
      for (std::int64_t j = 0; j < b; ++j) {
        const double* s = src + ((n * a + i) * b + j) * d;
        double* t = dst + ((n * b + j) * a + i) * d;
        if (accumulate) {
          for (std::int64_t k = 0; k < d; ++k) t[k] += s[k];
        } else {
          std::copy_n(s, d, t);
        }
      }
    }
  }
}

}  // namespace

Tensor split_heads(const Tensor& input, int heads) {
  require_rank(input, 3, "split_heads", "input");
  const auto batch = input.size(0), t = input.size(1), c = input.size(2);
  if (heads < 1 || c % heads != 0) {
    throw ShapeError("split_heads: width " + std::to_string(c) +
                     " is not divisible by " + std::to_string(heads) + " heads");
  }
  const std::int64_t d = c / heads;
  std::vector<double> out(input.data().size());
  swap_token_head(input.data().data(), out.data(), batch, t, heads, d, false);
  return make_op("split_heads", {batch * heads, t, d}, std::move(out), {input},
                 [=](GradContext& ctx) {
                   swap_token_head(ctx.output_grad().data(), ctx.input_grad(0).data(),
                                   batch, heads, t, d, true);
                 });
}

Tensor merge_heads(const Tensor& input, int heads) {
  require_rank(input, 3, "merge_heads", "input");
  if (heads < 1 || input.size(0) % heads != 0) {
    throw ShapeError("merge_heads: leading extent " + std::to_string(input.size(0)) +
                     " is not divisible by " + std::to_string(heads) + " heads");
  }
  const auto batch = input.size(0) / heads, t = input.size(1), d = input.size(2);
  std::vector<double> out(input.data().size());
  swap_token_head(input.data().data(), out.data(), batch, heads, t, d, false);
  return make_op("merge_heads", {batch, t, heads * d}, std::move(out), {input},
                 [=](GradContext& ctx) {
                   swap_token_head(ctx.output_grad().data(), ctx.input_grad(0).data(),
                                   batch, t, heads, d, true);
                 });
}

}  // namespace edgeattnet::ops
