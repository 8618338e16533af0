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

#ifndef EDGEATTNET_LAYERS_H_
#define EDGEATTNET_LAYERS_H_

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "edgeattnet/ops.h"
#include "edgeattnet/optim.h"
#include "edgeattnet/tensor.h"

namespace edgeattnet::layers {

enum class Init { kZeros, kOnes, kKaimingUniform, kXavierUniform };

// Creates named parameters in a fixed order from one seeded generator. With
// allocate = false only names and shapes are recorded, which makes layer
// accounting free for full-size models.
class ParamRegistry {
 public:
  explicit ParamRegistry(std::uint64_t seed = 0, bool allocate = true)
      : rng_(seed), allocate_(allocate) {}

  Tensor create(const std::string& name, Shape shape, Init init,
                std::int64_t fan_in = 1, std::int64_t fan_out = 1);

  bool allocating() const { return allocate_; }
  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  // (name, shape) for every created parameter, in creation order.
  const std::vector<std::pair<std::string, Shape>>& layout() const { return layout_; }

 private:
  std::mt19937_64 rng_;
  bool allocate_;
  std::vector<Parameter> params_;
  std::vector<std::pair<std::string, Shape>> layout_;
};

// Non-trainable state saved with a checkpoint.
struct NamedBuffer {
  std::string name;
  std::vector<double>* values;
};

struct Conv2d {
  Conv2d() = default;
  Conv2d(ParamRegistry& reg, const std::string& name, int in, int out,
         int kernel, bool bias);
  Tensor forward(const Tensor& x) const;

  Tensor weight;
  Tensor bias;
  int padding = 0;
};

struct BatchNorm2d {
  BatchNorm2d() = default;
  BatchNorm2d(ParamRegistry& reg, const std::string& name, int channels,
              double momentum, double eps);
  Tensor forward(const Tensor& x, bool training);

  std::string name;
  Tensor gamma;
  Tensor beta;
  ops::BatchNormStats stats;
  double momentum = 0.1;
  double eps = 1e-5;
};

// conv3x3 -> [BN] -> ReLU, twice.
struct DoubleConv {
  DoubleConv() = default;
  DoubleConv(ParamRegistry& reg, const std::string& name, int in, int out,
             bool bias, bool batchnorm, double bn_momentum, double bn_eps);
  Tensor forward(const Tensor& x, bool training);
  void append_buffers(std::vector<NamedBuffer>& out);

  Conv2d conv1;
  Conv2d conv2;
  std::optional<BatchNorm2d> bn1;
  std::optional<BatchNorm2d> bn2;
};

// 2x2 stride-2 transposed convolution.
struct UpConv {
  UpConv() = default;
  UpConv(ParamRegistry& reg, const std::string& name, int in, int out, bool bias);
  Tensor forward(const Tensor& x) const;

  Tensor weight;
  Tensor bias;
};

struct EdgePrior {
  Tensor edge_map;  // B x 1 x H x W, sigmoid output
  Tensor resized;   // B x 1 x H' x W'
};

// E = sigmoid(conv3x3(input)), plus its bilinear resize to the bottleneck grid.
struct EdgeBranch {
  EdgeBranch() = default;
  EdgeBranch(ParamRegistry& reg, const std::string& name, int in_channels);
  EdgePrior forward(const Tensor& input, std::int64_t height,
                    std::int64_t width) const;

  Conv2d conv;
};

struct AttentionConfig {
  int width = 512;       // token width (channels of the feature map)
  int heads = 4;
  int head_dim = 128;
  bool qkv_bias = true;
  bool edge_projection = false;
  double dropout_p = 0.1;
  double ln_eps = 1e-5;
};

// Multi-head self-attention over the spatial positions of a feature map.
// Queries and keys read x + bias, values read x alone; output projection,
// residual, layer norm and dropout follow.
struct AttentionBlock {
  AttentionBlock() = default;
  AttentionBlock(ParamRegistry& reg, const std::string& name,
                 const AttentionConfig& config);

  // Uses the block's own edge projection of `prior` when it has one.
  Tensor forward(const Tensor& x, const EdgePrior* prior, bool training,
                 std::mt19937_64& rng);
  // edge_bias: B x width x H' x W' added to the query/key input, or undefined.
  Tensor forward_with_bias(const Tensor& x, const Tensor& edge_bias,
                           bool training, std::mt19937_64& rng);
  // Projects a resized edge map to the token width.
  Tensor project_edge(const EdgePrior& prior) const;

  // Softmax weights of the most recent forward, (B*heads) x T x T.
  const Tensor& last_attention() const { return last_attention_; }

  AttentionConfig config;
  Tensor q_weight, q_bias;
  Tensor k_weight, k_bias;
  Tensor v_weight, v_bias;
  Tensor o_weight, o_bias;
  Tensor ln_gamma, ln_beta;
  // Optional T x (heads*head_dim) table added to queries and keys. Owned by
  // the model and shared between blocks.
  Tensor positional;
  Conv2d edge_proj;

 private:
  Tensor last_attention_;
};

}  // namespace edgeattnet::layers

#endif  // EDGEATTNET_LAYERS_H_
