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

// Convolution, pooling and resampling operations on B x C x H x W tensors.

#include <algorithm>
#include <cmath>
#include <limits>

#include "edgeattnet/ops.h"
#include "eigen_util.h"

namespace edgeattnet::ops {
namespace {

using internal::ConstMatMap;
using internal::ConstVecMap;
using internal::MatMap;
using internal::require_rank;
using internal::RowMat;

struct ConvGeometry {
  std::int64_t channels, height, width;
  std::int64_t kernel, stride, padding;
  std::int64_t out_height, out_width;

  std::int64_t col_rows() const { return channels * kernel * kernel; }
  std::int64_t col_cols() const { return out_height * out_width; }
};

void im2col(const double* image, const ConvGeometry& g, double* col) {
  const std::int64_t cols = g.col_cols();
  for (std::int64_t c = 0; c < g.channels; ++c) {
    const double* plane = image + c * g.height * g.width;
    for (std::int64_t ky = 0; ky < g.kernel; ++ky) {
      for (std::int64_t kx = 0; kx < g.kernel; ++kx) {
        double* row = col + ((c * g.kernel + ky) * g.kernel + kx) * cols;
        for (std::int64_t oy = 0; oy < g.out_height; ++oy) {
          const std::int64_t iy = oy * g.stride - g.padding + ky;
          double* dst = row + oy * g.out_width;
          if (iy < 0 || iy >= g.height) {
            std::fill(dst, dst + g.out_width, 0.0);
            continue;
          }
          const double* src = plane + iy * g.width;
          for (std::int64_t ox = 0; ox < g.out_width; ++ox) {
            const std::int64_t ix = ox * g.stride - g.padding + kx;
            dst[ox] = (ix < 0 || ix >= g.width) ? 0.0 : src[ix];
          }
        }
      }
    }
  }
}

void col2im_add(const double* col, const ConvGeometry& g, double* image) {
  const std::int64_t cols = g.col_cols();
  for (std::int64_t c = 0; c < g.channels; ++c) {
    double* plane = image + c * g.height * g.width;
    for (std::int64_t ky = 0; ky < g.kernel; ++ky) {
      for (std::int64_t kx = 0; kx < g.kernel; ++kx) {
        const double* row = col + ((c * g.kernel + ky) * g.kernel + kx) * cols;
        for (std::int64_t oy = 0; oy < g.out_height; ++oy) {
          const std::int64_t iy = oy * g.stride - g.padding + ky;
          if (iy < 0 || iy >= g.height) continue;
          const double* src = row + oy * g.out_width;
          double* dst = plane + iy * g.width;
          for (std::int64_t ox = 0; ox < g.out_width; ++ox) {
            const std::int64_t ix = ox * g.stride - g.padding + kx;
            if (ix >= 0 && ix < g.width) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride, int padding) {
  require_rank(input, 4, "conv2d", "input");
  require_rank(weight, 4, "conv2d", "weight");
  const auto batch = input.size(0);
  const auto cout = weight.size(0);
  const auto k = weight.size(2);
  if (weight.size(1) != input.size(1)) {
    throw ShapeError("conv2d: input has " + std::to_string(input.size(1)) +
                     " channels but weight " + shape_string(weight.shape()) +
                     " expects " + std::to_string(weight.size(1)));
  }
  if (weight.size(3) != k) {
    throw ShapeError("conv2d: kernel must be square, got " +
                     shape_string(weight.shape()));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.size(0) != cout)) {
    throw ShapeError("conv2d: bias " + shape_string(bias.shape()) +
                     " does not match " + std::to_string(cout) + " outputs");
  }
  if (stride < 1 || padding < 0) throw ShapeError("conv2d: bad stride/padding");

  ConvGeometry g{input.size(1), input.size(2), input.size(3), k, stride, padding,
                 0, 0};
  if (g.height + 2 * padding < k || g.width + 2 * padding < k) {
    throw ShapeError("conv2d: kernel larger than padded input " +
                     shape_string(input.shape()));
  }
  g.out_height = (g.height + 2 * padding - k) / stride + 1;
  g.out_width = (g.width + 2 * padding - k) / stride + 1;

  const bool direct = k == 1 && stride == 1 && padding == 0;
  const std::int64_t rows = g.col_rows();
  const std::int64_t cols = g.col_cols();
  const std::int64_t in_plane = g.channels * g.height * g.width;

  std::vector<double> out(static_cast<std::size_t>(batch * cout * cols));
  std::vector<double> col(direct ? 0 : static_cast<std::size_t>(rows * cols));
  ConstMatMap w(weight.data().data(), cout, rows);
  for (std::int64_t n = 0; n < batch; ++n) {
    const double* image = input.data().data() + n * in_plane;
    const double* colp = image;
    if (!direct) {
      im2col(image, g, col.data());
      colp = col.data();
    }
    MatMap y(out.data() + n * cout * cols, cout, cols);
    y.noalias() = w * ConstMatMap(colp, rows, cols);
    if (bias.defined()) {
      y.colwise() += ConstVecMap(bias.data().data(), cout);
    }
  }

  Shape shape{batch, cout, g.out_height, g.out_width};
  return make_op(
      "conv2d", std::move(shape), std::move(out), {input, weight, bias},
      [g, batch, cout, direct](GradContext& ctx) {
        const std::int64_t rows = g.col_rows();
        const std::int64_t cols = g.col_cols();
        const std::int64_t in_plane = g.channels * g.height * g.width;
        const double* x = ctx.input(0).data();
        ConstMatMap w(ctx.input(1).data(), cout, rows);
        auto gx = ctx.input_grad(0);
        auto gw = ctx.input_grad(1);
        auto gb = ctx.input_grad(2);
        std::vector<double> col(direct ? 0 : static_cast<std::size_t>(rows * cols));
        RowMat dcol;
        for (std::int64_t n = 0; n < batch; ++n) {
          ConstMatMap dy(ctx.output_grad().data() + n * cout * cols, cout, cols);
          if (!gw.empty()) {
            const double* colp = x + n * in_plane;
            if (!direct) {
              im2col(colp, g, col.data());
              colp = col.data();
            }
            MatMap(gw.data(), cout, rows).noalias() +=
                dy * ConstMatMap(colp, rows, cols).transpose();
          }
          if (!gb.empty()) {
            for (std::int64_t co = 0; co < cout; ++co) {
              double acc = 0.0;
              for (std::int64_t j = 0; j < cols; ++j) acc += dy(co, j);
              gb[co] += acc;
            }
          }
          if (!gx.empty()) {
            if (direct) {
              MatMap(gx.data() + n * in_plane, rows, cols).noalias() +=
                  w.transpose() * dy;
            } else {
              dcol.noalias() = w.transpose() * dy;
              col2im_add(dcol.data(), g, gx.data() + n * in_plane);
            }
          }
        }
      });
}

Tensor conv_transpose2d(const Tensor& input, const Tensor& weight,
                        const Tensor& bias, int stride) {
  require_rank(input, 4, "conv_transpose2d", "input");
  require_rank(weight, 4, "conv_transpose2d", "weight");
  const auto batch = input.size(0);
  const auto cin = input.size(1);
  const auto h = input.size(2);
  const auto w = input.size(3);
  const auto cout = weight.size(1);
  const auto k = weight.size(2);
  if (weight.size(0) != cin) {
    throw ShapeError("conv_transpose2d: input has " + std::to_string(cin) +
                     " channels but weight " + shape_string(weight.shape()) +
                     " expects " + std::to_string(weight.size(0)));
  }
  if (weight.size(3) != k || k != stride) {
    throw ShapeError("conv_transpose2d: only square kernels with stride == k are "
                     "supported, got weight " +
                     shape_string(weight.shape()) + " stride " +
                     std::to_string(stride));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.size(0) != cout)) {
    throw ShapeError("conv_transpose2d: bias " + shape_string(bias.shape()) +
                     " does not match " + std::to_string(cout) + " outputs");
  }
  const std::int64_t hw = h * w;
  const std::int64_t taps = k * k;
  const std::int64_t oh = h * k;
  const std::int64_t ow = w * k;

  std::vector<double> out(static_cast<std::size_t>(batch * cout * oh * ow));
  ConstMatMap wm(weight.data().data(), cin, cout * taps);
  RowMat z;
  for (std::int64_t n = 0; n < batch; ++n) {
    z.noalias() = wm.transpose() * ConstMatMap(input.data().data() + n * cin * hw, cin, hw);
    double* o = out.data() + n * cout * oh * ow;
    for (std::int64_t co = 0; co < cout; ++co) {
      const double b = bias.defined() ? bias.data()[co] : 0.0;
      for (std::int64_t t = 0; t < taps; ++t) {
        const std::int64_t ky = t / k, kx = t % k;
        const double* zr = z.data() + (co * taps + t) * hw;
        for (std::int64_t i = 0; i < h; ++i) {
          double* orow = o + (co * oh + i * k + ky) * ow + kx;
          for (std::int64_t j = 0; j < w; ++j) orow[j * k] = zr[i * w + j] + b;
        }
      }
    }
  }

  return make_op(
      "conv_transpose2d", {batch, cout, oh, ow}, std::move(out),
      {input, weight, bias},
      [=](GradContext& ctx) {
        auto gx = ctx.input_grad(0);
        auto gw = ctx.input_grad(1);
        auto gb = ctx.input_grad(2);
        ConstMatMap wm(ctx.input(1).data(), cin, cout * taps);
        RowMat dz(cout * taps, hw);
        for (std::int64_t n = 0; n < batch; ++n) {
          const double* go = ctx.output_grad().data() + n * cout * oh * ow;
          for (std::int64_t co = 0; co < cout; ++co) {
            for (std::int64_t t = 0; t < taps; ++t) {
              const std::int64_t ky = t / k, kx = t % k;
              double* zr = dz.data() + (co * taps + t) * hw;
              for (std::int64_t i = 0; i < h; ++i) {
                const double* grow = go + (co * oh + i * k + ky) * ow + kx;
                for (std::int64_t j = 0; j < w; ++j) zr[i * w + j] = grow[j * k];
              }
            }
          }
          if (!gb.empty()) {
            for (std::int64_t co = 0; co < cout; ++co) {
              gb[co] += dz.middleRows(co * taps, taps).sum();
            }
          }
          if (!gw.empty()) {
            MatMap(gw.data(), cin, cout * taps).noalias() +=
                ConstMatMap(ctx.input(0).data() + n * cin * hw, cin, hw) *
                dz.transpose();
          }
          if (!gx.empty()) {
            MatMap(gx.data() + n * cin * hw, cin, hw).noalias() += wm * dz;
          }
        }
      });
}

Tensor maxpool2x2(const Tensor& input) {
  require_rank(input, 4, "maxpool2x2", "input");
  const auto planes = input.size(0) * input.size(1);
  const auto h = input.size(2);
  const auto w = input.size(3);
  if (h % 2 != 0 || w % 2 != 0) {
    throw ShapeError("maxpool2x2: spatial dims must be even, got " +
                     shape_string(input.shape()));
  }
  const auto oh = h / 2, ow = w / 2;
  std::vector<double> out(static_cast<std::size_t>(planes * oh * ow));
  std::vector<std::int64_t> argmax(out.size());
  const double* x = input.data().data();
  for (std::int64_t p = 0; p < planes; ++p) {
    for (std::int64_t i = 0; i < oh; ++i) {
      for (std::int64_t j = 0; j < ow; ++j) {
        const std::int64_t base = p * h * w + 2 * i * w + 2 * j;
        const std::int64_t cand[4] = {base, base + 1, base + w, base + w + 1};
        std::int64_t best = cand[0];
        for (int c = 1; c < 4; ++c) {
          if (x[cand[c]] > x[best]) best = cand[c];
        }
        const std::int64_t o = (p * oh + i) * ow + j;
        out[o] = x[best];
        argmax[o] = best;
      }
    }
  }
  if (tracing_branches()) {
    for (auto a : argmax) trace_branch(a);
  }
  return make_op("maxpool2x2", {input.size(0), input.size(1), oh, ow},
                 std::move(out), {input},
                 [argmax = std::move(argmax)](GradContext& ctx) {
                   auto gx = ctx.input_grad(0);
                   const auto gy = ctx.output_grad();
                   for (std::size_t o = 0; o < argmax.size(); ++o) {
                     gx[argmax[o]] += gy[o];
                   }
                 });
}

namespace {

struct Tap {
  std::int64_t lo, hi;
  double w_hi;
};

std::vector<Tap> resize_taps(std::int64_t in, std::int64_t out) {
  std::vector<Tap> taps(static_cast<std::size_t>(out));
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  for (std::int64_t o = 0; o < out; ++o) {
    double src = (static_cast<double>(o) + 0.5) * ratio - 0.5;
    if (src < 0.0) src = 0.0;
    auto lo = static_cast<std::int64_t>(std::floor(src));
    if (lo > in - 1) lo = in - 1;
    const std::int64_t hi = std::min(lo + 1, in - 1);
    taps[o] = {lo, hi, src - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace

Tensor bilinear_resize(const Tensor& input, std::int64_t height,
                       std::int64_t width) {
  require_rank(input, 4, "bilinear_resize", "input");
  if (height < 1 || width < 1) {
    throw ShapeError("bilinear_resize: target size must be positive");
  }
  const auto planes = input.size(0) * input.size(1);
  const auto h = input.size(2), w = input.size(3);
  auto ty = resize_taps(h, height);
  auto tx = resize_taps(w, width);
  std::vector<double> out(static_cast<std::size_t>(planes * height * width));
  const double* x = input.data().data();
  for (std::int64_t p = 0; p < planes; ++p) {
    const double* src = x + p * h * w;
    double* dst = out.data() + p * height * width;
    for (std::int64_t i = 0; i < height; ++i) {
      const Tap& a = ty[i];
      for (std::int64_t j = 0; j < width; ++j) {
        const Tap& b = tx[j];
        const double top = src[a.lo * w + b.lo] * (1.0 - b.w_hi) + src[a.lo * w + b.hi] * b.w_hi;
        const double bot = src[a.hi * w + b.lo] * (1.0 - b.w_hi) + src[a.hi * w + b.hi] * b.w_hi;
        dst[i * width + j] = top * (1.0 - a.w_hi) + bot * a.w_hi;
      }
    }
  }
  return make_op(
      "bilinear_resize", {input.size(0), input.size(1), height, width},
      std::move(out), {input},
      [=, ty = std::move(ty), tx = std::move(tx)](GradContext& ctx) {
        auto gx = ctx.input_grad(0);
        const auto gy = ctx.output_grad();
        for (std::int64_t p = 0; p < planes; ++p) {
          double* dst = gx.data() + p * h * w;
          const double* src = gy.data() + p * height * width;
          for (std::int64_t i = 0; i < height; ++i) {
            const Tap& a = ty[i];
            for (std::int64_t j = 0; j < width; ++j) {
              const Tap& b = tx[j];
              const double g = src[i * width + j];
              dst[a.lo * w + b.lo] += g * (1.0 - a.w_hi) * (1.0 - b.w_hi);
              dst[a.lo * w + b.hi] += g * (1.0 - a.w_hi) * b.w_hi;
              dst[a.hi * w + b.lo] += g * a.w_hi * (1.0 - b.w_hi);
              dst[a.hi * w + b.hi] += g * a.w_hi * b.w_hi;
            }
          }
        }
      });
}

}  // namespace edgeattnet::ops
