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

#include "edgeattnet/model.h"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

namespace edgeattnet::model {

std::string_view variant_name(Variant variant) {
  switch (variant) {
    case Variant::kUnet: return "unet";
    case Variant::kMhsaNoPe: return "mhsa-nope";
    case Variant::kMhsaPe: return "mhsa-pe";
    case Variant::kEdgeAttNet: return "edgeattnet";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  std::string s(name);
  std::replace(s.begin(), s.end(), '_', '-');
  for (Variant v : kAllVariants) {
    if (variant_name(v) == s) return v;
  }
  throw std::invalid_argument("unknown variant '" + std::string(name) +
                              "' (expected unet, mhsa-nope, mhsa-pe or edgeattnet)");
}

ModelSpec ModelSpec::preset(Variant variant, int input_size) {
  ModelSpec spec;
  spec.variant = variant;
  spec.input_height = input_size;
  spec.input_width = input_size;
  if (variant == Variant::kEdgeAttNet) {
    spec.bottleneck_channels = 512;
    spec.conv_bias = true;
    spec.batchnorm = true;
    spec.qkv_bias = true;
  } else {
    spec.bottleneck_channels = 1024;
    spec.conv_bias = true;
    spec.batchnorm = false;
    spec.qkv_bias = false;
  }
  return spec;
}

ModelSpec ModelSpec::with_width_divisor(int divisor) const {
  if (divisor <= 0) throw std::invalid_argument("width divisor must be positive");
  ModelSpec out = *this;
  for (int& c : out.encoder_channels) c = std::max(1, c / divisor);
  out.bottleneck_channels = std::max(1, bottleneck_channels / divisor);
  out.head_dim = std::max(1, head_dim / divisor);
  return out;
}

void ModelSpec::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("model spec: " + msg); };
  if (in_channels <= 0) fail("in_channels must be positive");
  if (encoder_channels.empty()) fail("encoder_channels must not be empty");
  for (int c : encoder_channels) {
    if (c <= 0) fail("encoder channel widths must be positive");
  }
  if (bottleneck_channels <= 0) fail("bottleneck_channels must be positive");
  const int factor = 1 << depth();
  if (input_height <= 0 || input_width <= 0 || input_height % factor != 0 ||
      input_width % factor != 0) {
    fail("input size " + std::to_string(input_height) + "x" + std::to_string(input_width) +
         " must be divisible by " + std::to_string(factor));
  }
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) fail("dropout_p must lie in [0, 1)");
  if (has_attention()) {
    if (heads <= 0 || head_dim <= 0) fail("heads and head_dim must be positive");
    if (bottleneck_channels % heads != 0) {
      fail("bottleneck width " + std::to_string(bottleneck_channels) +
           " is not divisible by " + std::to_string(heads) + " heads");
    }
    if (variant == Variant::kEdgeAttNet && heads * head_dim != bottleneck_channels) {
      fail("heads x head_dim must equal the bottleneck width for edge-guided attention");
    }
  }
}

nlohmann::json spec_to_json(const ModelSpec& s) {
  return {
      {"variant", std::string(variant_name(s.variant))},
      {"in_channels", s.in_channels},
      {"encoder_channels", s.encoder_channels},
      {"bottleneck_channels", s.bottleneck_channels},
      {"heads", s.heads},
      {"head_dim", s.head_dim},
      {"attention_blocks", s.attention_blocks},
      {"dropout_p", s.dropout_p},
      {"input_height", s.input_height},
      {"input_width", s.input_width},
      {"conv_bias", s.conv_bias},
      {"batchnorm", s.batchnorm},
      {"qkv_bias", s.qkv_bias},
      {"bn_momentum", s.bn_momentum},
      {"bn_eps", s.bn_eps},
      {"ln_eps", s.ln_eps},
  };
}

ModelSpec spec_from_json(const nlohmann::json& j) {
  ModelSpec s = ModelSpec::preset(parse_variant(j.at("variant").get<std::string>()),
                                  j.value("input_height", 256));
  s.in_channels = j.value("in_channels", s.in_channels);
  s.encoder_channels = j.value("encoder_channels", s.encoder_channels);
  s.bottleneck_channels = j.value("bottleneck_channels", s.bottleneck_channels);
  s.heads = j.value("heads", s.heads);
  s.head_dim = j.value("head_dim", s.head_dim);
  s.attention_blocks = j.value("attention_blocks", s.attention_blocks);
  s.dropout_p = j.value("dropout_p", s.dropout_p);
  s.input_height = j.value("input_height", s.input_height);
  s.input_width = j.value("input_width", s.input_width);
  s.conv_bias = j.value("conv_bias", s.conv_bias);
  s.batchnorm = j.value("batchnorm", s.batchnorm);
  s.qkv_bias = j.value("qkv_bias", s.qkv_bias);
  s.bn_momentum = j.value("bn_momentum", s.bn_momentum);
  s.bn_eps = j.value("bn_eps", s.bn_eps);
  s.ln_eps = j.value("ln_eps", s.ln_eps);
  s.validate();
  return s;
}

struct Model::Layers {
  std::vector<layers::DoubleConv> encoders;
  layers::DoubleConv bottleneck;
  std::optional<layers::EdgeBranch> edge;
  std::vector<layers::AttentionBlock> attention;
  std::vector<layers::UpConv> ups;
  std::vector<layers::DoubleConv> decoders;
  layers::Conv2d head;

  Layers(const ModelSpec& s, layers::ParamRegistry& reg) {
    const int depth = s.depth();
    int in = s.in_channels;
    for (int i = 0; i < depth; ++i) {
      const int out = s.encoder_channels[i];
      encoders.emplace_back(reg, "enc" + std::to_string(i + 1), in, out, s.conv_bias,
                            s.batchnorm, s.bn_momentum, s.bn_eps);
      in = out;
    }
    bottleneck = layers::DoubleConv(reg, "bottleneck", in, s.bottleneck_channels,
                                    s.conv_bias, s.batchnorm, s.bn_momentum, s.bn_eps);
    if (s.has_attention()) {
      if (s.has_edge_prior()) edge.emplace(reg, "edge", s.in_channels);
      layers::AttentionConfig cfg;
      cfg.width = s.bottleneck_channels;
      cfg.heads = s.heads;
      cfg.head_dim = s.head_dim;
      cfg.qkv_bias = s.qkv_bias;
      cfg.edge_projection = s.has_edge_prior();
      cfg.dropout_p = s.dropout_p;
      cfg.ln_eps = s.ln_eps;
      Tensor table;
      if (s.has_positional_table()) {
        table = reg.create("pos_embedding",
                           {s.bottleneck_height() * s.bottleneck_width(),
                            s.attention_inner_width()},
                           layers::Init::kZeros);
      }
      for (int b = 0; b < s.attention_blocks; ++b) {
        attention.emplace_back(reg, "attn" + std::to_string(b + 1), cfg);
        attention.back().positional = table;
      }
    }
    // Decoder stages are built deepest first so names match their encoders.
    ups.resize(depth);
    decoders.resize(depth);
    int prev = s.bottleneck_channels;
    for (int i = depth - 1; i >= 0; --i) {
      const int c = s.encoder_channels[i];
      const std::string name = "dec" + std::to_string(i + 1);
      ups[i] = layers::UpConv(reg, name + ".up", prev, c, s.conv_bias);
      decoders[i] = layers::DoubleConv(reg, name, 2 * c, c, s.conv_bias, s.batchnorm,
                                       s.bn_momentum, s.bn_eps);
      prev = c;
    }
    head = layers::Conv2d(reg, "head", s.encoder_channels[0], 1, 1, true);
  }
};

Model::Model(ModelSpec spec, std::uint64_t seed)
    : spec_(std::move(spec)), registry_(seed), dropout_rng_(seed ^ 0x9e3779b97f4a7c15ULL) {
  spec_.validate();
  layers_ = std::make_unique<Layers>(spec_, registry_);
}

Model::~Model() = default;
Model::Model(Model&&) noexcept = default;
Model& Model::operator=(Model&&) noexcept = default;

std::vector<Parameter>& Model::parameters() { return registry_.parameters(); }
const std::vector<Parameter>& Model::parameters() const { return registry_.parameters(); }

std::vector<layers::NamedBuffer> Model::buffers() {
  std::vector<layers::NamedBuffer> out;
  for (auto& e : layers_->encoders) e.append_buffers(out);
  layers_->bottleneck.append_buffers(out);
  for (int i = spec_.depth() - 1; i >= 0; --i) layers_->decoders[i].append_buffers(out);
  return out;
}

layers::EdgeBranch* Model::edge_branch() {
  return layers_->edge ? &*layers_->edge : nullptr;
}

std::vector<layers::AttentionBlock>& Model::attention_blocks() { return layers_->attention; }

Tensor Model::forward(const Tensor& input, bool training) {
  if (input.rank() != 4 || input.size(1) != spec_.in_channels) {
    throw ShapeError("model: expected B x " + std::to_string(spec_.in_channels) +
                     " x H x W input, got " + shape_string(input.shape()));
  }
  const std::int64_t factor = std::int64_t{1} << spec_.depth();
  if (input.size(2) % factor != 0 || input.size(3) % factor != 0) {
    throw ShapeError("model: spatial size " + shape_string(input.shape()) +
                     " is not divisible by " + std::to_string(factor));
  }
  if (spec_.has_positional_table() &&
      (input.size(2) != spec_.input_height || input.size(3) != spec_.input_width)) {
    throw ShapeError("model: positional table was built for " +
                     std::to_string(spec_.input_height) + "x" +
                     std::to_string(spec_.input_width) + " inputs");
  }
  auto& L = *layers_;
  std::vector<Tensor> skips;
  Tensor x = input;
  for (auto& enc : L.encoders) {
    x = enc.forward(x, training);
    skips.push_back(x);
    x = ops::maxpool2x2(x);
  }
  Tensor z = L.bottleneck.forward(x, training);
  if (!L.attention.empty()) {
    std::optional<layers::EdgePrior> prior;
    if (L.edge) prior = L.edge->forward(input, z.size(2), z.size(3));
    for (auto& block : L.attention) {
      z = block.forward(z, prior ? &*prior : nullptr, training, dropout_rng_);
    }
  }
  for (int i = spec_.depth() - 1; i >= 0; --i) {
    z = ops::concat_channels(skips[i], L.ups[i].forward(z));
    z = L.decoders[i].forward(z, training);
  }
  return L.head.forward(z);
}

std::int64_t reference_param_count(Variant variant) {
  switch (variant) {
    case Variant::kUnet: return 31'030'593;
    case Variant::kMhsaNoPe: return 35'231'041;
    case Variant::kMhsaPe: return 35'362'113;
    case Variant::kEdgeAttNet: return 22'658'891;
  }
  return 0;
}

std::vector<ParamShape> parameter_layout(const ModelSpec& spec) {
  spec.validate();
  layers::ParamRegistry reg(0, /*allocate=*/false);
  Model::Layers unused_layers(spec, reg);
  (void)unused_layers;
  std::vector<ParamShape> out;
  for (const auto& [name, shape] : reg.layout()) out.push_back({name, shape});
  return out;
}

std::int64_t param_count(const ModelSpec& spec) {
  std::int64_t total = 0;
  for (const auto& p : parameter_layout(spec)) total += p.numel();
  return total;
}

namespace {

// "enc1.conv1.weight" -> "enc1.conv1"; attention projections group by block.
std::string layer_of(const std::string& name) {
  const auto dot = name.rfind('.');
  return dot == std::string::npos ? name : name.substr(0, dot);
}

}  // namespace

ParamReport param_report(const ModelSpec& spec) {
  ParamReport report;
  report.variant = spec.variant;
  for (const auto& p : parameter_layout(spec)) {
    const std::string layer = layer_of(p.name);
    if (report.rows.empty() || report.rows.back().layer != layer) {
      report.rows.push_back({layer, 0});
    }
    report.rows.back().count += p.numel();
    report.total += p.numel();
  }
  if (spec == ModelSpec::preset(spec.variant, 256)) {
    report.reference = reference_param_count(spec.variant);
  }
  return report;
}

std::string format_param_report(const ParamReport& report) {
  std::ostringstream out;
  out << "variant " << variant_name(report.variant) << "\n";
  char line[128];
  for (const auto& row : report.rows) {
    std::snprintf(line, sizeof(line), "  %-28s %12lld\n", row.layer.c_str(),
                  static_cast<long long>(row.count));
    out << line;
  }
  std::snprintf(line, sizeof(line), "  %-28s %12lld\n", "total",
                static_cast<long long>(report.total));
  out << line;
  if (report.reference) {
    std::snprintf(line, sizeof(line), "  %-28s %12lld\n  %-28s %12lld\n", "reference",
                  static_cast<long long>(*report.reference), "residual",
                  static_cast<long long>(report.residual()));
    out << line;
  }
  return out.str();
}

}  // namespace edgeattnet::model
