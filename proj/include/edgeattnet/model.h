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

#ifndef EDGEATTNET_MODEL_H_
#define EDGEATTNET_MODEL_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "edgeattnet/layers.h"
#include "edgeattnet/optim.h"
#include "edgeattnet/tensor.h"
#include "json.hpp"

namespace edgeattnet::model {

enum class Variant { kUnet, kMhsaNoPe, kMhsaPe, kEdgeAttNet };

inline constexpr Variant kAllVariants[] = {Variant::kUnet, Variant::kMhsaNoPe,
                                           Variant::kMhsaPe, Variant::kEdgeAttNet};

// "unet", "mhsa-nope", "mhsa-pe", "edgeattnet".
std::string_view variant_name(Variant variant);
// Accepts the names above with '-' or '_'. Throws std::invalid_argument.
Variant parse_variant(std::string_view name);

// Full architectural description of one network. Presets reproduce the
// published parameter counts; every field can be overridden.
struct ModelSpec {
  Variant variant = Variant::kEdgeAttNet;
  int in_channels = 1;
  std::vector<int> encoder_channels{64, 128, 256, 512};
  int bottleneck_channels = 512;
  int heads = 4;
  int head_dim = 128;
  int attention_blocks = 2;
  double dropout_p = 0.1;
  int input_height = 256;
  int input_width = 256;
  bool conv_bias = true;
  bool batchnorm = true;
  bool qkv_bias = true;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;
  double ln_eps = 1e-5;

  static ModelSpec preset(Variant variant, int input_size = 256);

  // Divides every channel width (and the head size) by `divisor`, keeping the
  // head count. Used for desk-scale experiments.
  ModelSpec with_width_divisor(int divisor) const;

  bool has_attention() const { return variant != Variant::kUnet && attention_blocks > 0; }
  bool has_edge_prior() const { return variant == Variant::kEdgeAttNet; }
  bool has_positional_table() const { return variant == Variant::kMhsaPe; }
  int depth() const { return static_cast<int>(encoder_channels.size()); }
  int bottleneck_height() const { return input_height >> depth(); }
  int bottleneck_width() const { return input_width >> depth(); }
  int attention_inner_width() const { return heads * head_dim; }

  // Throws std::invalid_argument describing the first violated constraint.
  void validate() const;

  bool operator==(const ModelSpec&) const = default;
};

nlohmann::json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& json);

struct ParamShape {
  std::string name;
  Shape shape;
  std::int64_t numel() const { return shape_numel(shape); }
};

struct BreakdownRow {
  std::string layer;
  std::int64_t count = 0;
};

struct ParamReport {
  Variant variant = Variant::kUnet;
  std::vector<BreakdownRow> rows;
  std::int64_t total = 0;
  // Published total for the preset configuration, when the spec matches it.
  std::optional<std::int64_t> reference;
  std::int64_t residual() const { return reference ? total - *reference : 0; }
};

// Published parameter count of each variant at the default configuration.
std::int64_t reference_param_count(Variant variant);

std::vector<ParamShape> parameter_layout(const ModelSpec& spec);
std::int64_t param_count(const ModelSpec& spec);
ParamReport param_report(const ModelSpec& spec);
std::string format_param_report(const ParamReport& report);

class Model {
 public:
  explicit Model(ModelSpec spec, std::uint64_t seed = 0);
  ~Model();
  Model(Model&&) noexcept;
  Model& operator=(Model&&) noexcept;

  // input: B x in_channels x H x W with H, W divisible by 2^depth.
  // Returns B x 1 x H x W logits.
  Tensor forward(const Tensor& input, bool training);

  const ModelSpec& spec() const { return spec_; }
  std::vector<Parameter>& parameters();
  const std::vector<Parameter>& parameters() const;
  // Batchnorm running statistics, by name ("enc1.bn1.running_mean", ...).
  std::vector<layers::NamedBuffer> buffers();

  void reseed_dropout(std::uint64_t seed) { dropout_rng_.seed(seed); }

  // Direct access for tests and tooling.
  layers::EdgeBranch* edge_branch();
  std::vector<layers::AttentionBlock>& attention_blocks();

 private:
  struct Layers;
  friend std::vector<ParamShape> parameter_layout(const ModelSpec& spec);

  ModelSpec spec_;
  layers::ParamRegistry registry_;
  std::unique_ptr<Layers> layers_;
  std::mt19937_64 dropout_rng_;
};

}  // namespace edgeattnet::model

#endif  // EDGEATTNET_MODEL_H_
