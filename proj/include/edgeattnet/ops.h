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

#ifndef EDGEATTNET_OPS_H_
#define EDGEATTNET_OPS_H_

#include <cstdint>
#include <random>
#include <vector>

#include "edgeattnet/tensor.h"

// Differentiable tensor operations. Exactly the set the segmentation models
// need; image tensors are laid out B x C x H x W.
namespace edgeattnet::ops {

// weight: Cout x Cin x k x k, bias: Cout (may be undefined).
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride = 1, int padding = 0);

// weight: Cin x Cout x k x k with stride == k (non-overlapping upsampling).
Tensor conv_transpose2d(const Tensor& input, const Tensor& weight,
                        const Tensor& bias, int stride = 2);

// 2x2 window, stride 2. Ties route the gradient to the first element in
// row-major window order.
Tensor maxpool2x2(const Tensor& input);

struct BatchNormStats {
  std::vector<double> mean;
  std::vector<double> var;

  static BatchNormStats identity(std::int64_t channels) {
    return {std::vector<double>(channels, 0.0), std::vector<double>(channels, 1.0)};
  }
};

struct BatchNormOptions {
  bool training = true;
  double momentum = 0.1;
  double eps = 1e-5;
};

// Training mode normalizes with batch statistics over B x H x W and updates
// `stats` (unbiased variance) if non-null; eval mode reads `stats`.
Tensor batchnorm2d(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                   BatchNormStats* stats, const BatchNormOptions& options);

Tensor relu(const Tensor& input);
Tensor sigmoid(const Tensor& input);
Tensor softmax_lastdim(const Tensor& input);
Tensor layernorm_lastdim(const Tensor& input, const Tensor& gamma,
                         const Tensor& beta, double eps = 1e-5);

// Inverted dropout. Identity when not training or p == 0; p outside [0, 1)
// is rejected.
Tensor dropout(const Tensor& input, double p, bool training,
               std::mt19937_64& rng);

// [M, K] x [K, N] or batched [B, M, K] x [B, K, N].
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose_last2(const Tensor& input);

// x [..., in] times weight [out, in] transposed plus bias [out] (optional).
Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias);

// Same shapes, or b matching the trailing dimensions of a (broadcast over the
// leading ones).
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& input, double factor);
Tensor sum(const Tensor& input);
Tensor mean(const Tensor& input);

Tensor concat_channels(const Tensor& a, const Tensor& b);

// B x C x H x W  ->  B x (H*W) x C, and back.
Tensor flatten_spatial(const Tensor& input);
Tensor unflatten_spatial(const Tensor& input, std::int64_t height,
                         std::int64_t width);

// B x T x (heads*d)  <->  (B*heads) x T x d.
Tensor split_heads(const Tensor& input, int heads);
Tensor merge_heads(const Tensor& input, int heads);

// Half-pixel-centred bilinear interpolation (align_corners = false).
Tensor bilinear_resize(const Tensor& input, std::int64_t height,
                       std::int64_t width);

}  // namespace edgeattnet::ops

#endif  // EDGEATTNET_OPS_H_
