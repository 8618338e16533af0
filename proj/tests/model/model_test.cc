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
#include <cmath>
#include <cstring>
#include <map>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "edgeattnet/losses.h"
#include "edgeattnet/ops.h"
#include "gradcheck.h"

namespace edgeattnet::model {
namespace {

using testing::random_tensor;

bool bit_identical(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data().data(), b.data().data(), a.data().size() * sizeof(double)) == 0;
}

TEST(ParamCountTest, PresetsMatchPublishedTotals) {
  for (Variant v : kAllVariants) {
    const auto report = param_report(ModelSpec::preset(v));
    ASSERT_TRUE(report.reference.has_value()) << variant_name(v);
    EXPECT_EQ(report.total, reference_param_count(v)) << variant_name(v);
    EXPECT_EQ(report.residual(), 0);
  }
}

TEST(ParamCountTest, PositionalTableDelta) {
  EXPECT_EQ(param_count(ModelSpec::preset(Variant::kMhsaPe)) -
                param_count(ModelSpec::preset(Variant::kMhsaNoPe)),
            16 * 16 * 512);
  EXPECT_EQ(param_count(ModelSpec::preset(Variant::kMhsaPe, 128)) -
                param_count(ModelSpec::preset(Variant::kMhsaNoPe, 128)),
            8 * 8 * 512);
}

TEST(ParamCountTest, EdgeAttNetIsSmallest) {
  const auto edge = param_count(ModelSpec::preset(Variant::kEdgeAttNet));
  for (Variant v : {Variant::kUnet, Variant::kMhsaNoPe, Variant::kMhsaPe}) {
    EXPECT_LT(edge, param_count(ModelSpec::preset(v)));
  }
}

TEST(ParamCountTest, RowsSumToTotal) {
  for (Variant v : kAllVariants) {
    const auto report = param_report(ModelSpec::preset(v));
    std::int64_t sum = 0;
    for (const auto& row : report.rows) sum += row.count;
    EXPECT_EQ(sum, report.total);
  }
}

TEST(ParamCountTest, ClosedFormForToySchedule) {
  ModelSpec spec = ModelSpec::preset(Variant::kEdgeAttNet, 16);
  spec.encoder_channels = {8, 16};
  spec.bottleneck_channels = 16;
  spec.head_dim = 4;
  std::map<std::string, std::int64_t> per_stage;
  for (const auto& p : parameter_layout(spec)) {
    per_stage[p.name.substr(0, p.name.find('.'))] += p.numel();
  }
  auto block = [](std::int64_t in, std::int64_t out) {
    return 9 * in * out + 9 * out * out + 2 * out + 4 * out;
  };
  EXPECT_EQ(per_stage["enc1"], block(1, 8));
  EXPECT_EQ(per_stage["enc2"], block(8, 16));
}

TEST(ParamCountTest, LayoutMatchesAllocatedModel) {
  ModelSpec spec = ModelSpec::preset(Variant::kMhsaPe, 32).with_width_divisor(8);
  Model m(spec, 1);
  const auto layout = parameter_layout(spec);
  ASSERT_EQ(layout.size(), m.parameters().size());
  std::set<std::string> names;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    EXPECT_EQ(layout[i].name, m.parameters()[i].name);
    EXPECT_EQ(layout[i].shape, m.parameters()[i].tensor.shape());
    names.insert(layout[i].name);
  }
  EXPECT_EQ(names.size(), layout.size());
}

TEST(ModelSpecTest, JsonRoundTrip) {
  ModelSpec spec = ModelSpec::preset(Variant::kMhsaNoPe, 64).with_width_divisor(4);
  spec.dropout_p = 0.25;
  EXPECT_EQ(spec_from_json(spec_to_json(spec)), spec);
}

TEST(ModelSpecTest, RejectsBadShapes) {
  ModelSpec spec = ModelSpec::preset(Variant::kEdgeAttNet, 40);
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  spec = ModelSpec::preset(Variant::kMhsaNoPe, 64);
  spec.heads = 3;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  EXPECT_THROW(parse_variant("segformer"), std::invalid_argument);
  EXPECT_EQ(parse_variant("mhsa_pe"), Variant::kMhsaPe);
}

TEST(ModelTest, OutputShapeMatchesInputForEveryVariant) {
  NoGradGuard no_grad;
  std::mt19937_64 rng(7);
  auto x = random_tensor({1, 1, 64, 64}, rng, false);
  for (Variant v : kAllVariants) {
    Model m(ModelSpec::preset(v, 64), 3);
    EXPECT_EQ(m.forward(x, false).shape(), (Shape{1, 1, 64, 64})) << variant_name(v);
  }
}

TEST(ModelTest, UnetNeverRunsAttentionOrEdgeBranch) {
  NoGradGuard no_grad;
  std::mt19937_64 rng(8);
  auto x = random_tensor({1, 1, 32, 32}, rng, false);
  Model unet(ModelSpec::preset(Variant::kUnet, 32).with_width_divisor(8), 1);
  {
    OpTrace trace;
    unet.forward(x, true);
    EXPECT_TRUE(trace.contains("conv2d"));
    for (const char* op : {"softmax_lastdim", "sigmoid", "bilinear_resize",
                           "layernorm_lastdim", "dropout", "matmul"}) {
      EXPECT_FALSE(trace.contains(op)) << op;
    }
  }
  Model edge(ModelSpec::preset(Variant::kEdgeAttNet, 32).with_width_divisor(8), 1);
  OpTrace trace;
  edge.forward(x, true);
  EXPECT_TRUE(trace.contains("softmax_lastdim"));
  EXPECT_TRUE(trace.contains("sigmoid"));
  EXPECT_EQ(std::count(trace.ops().begin(), trace.ops().end(), "sigmoid"), 1);
}

TEST(EdgePriorTest, ZeroWeightsGiveHalf) {
  layers::ParamRegistry reg(1);
  layers::EdgeBranch branch(reg, "edge", 1);
  std::fill(branch.conv.weight.mutable_data().begin(), branch.conv.weight.mutable_data().end(),
            0.0);
  std::mt19937_64 rng(9);
  auto prior = branch.forward(random_tensor({2, 1, 16, 16}, rng, false), 1, 1);
  EXPECT_EQ(prior.edge_map.shape(), (Shape{2, 1, 16, 16}));
  for (double v : prior.edge_map.data()) EXPECT_EQ(v, 0.5);
}

TEST(EdgePriorTest, ProjectedShapeAtDefaultResolution) {
  NoGradGuard no_grad;
  layers::ParamRegistry reg(2);
  layers::EdgeBranch branch(reg, "edge", 1);
  layers::AttentionConfig cfg;
  cfg.edge_projection = true;
  layers::AttentionBlock block(reg, "attn1", cfg);
  std::mt19937_64 rng(10);
  auto prior = branch.forward(random_tensor({1, 1, 256, 256}, rng, false), 256 / 16, 256 / 16);
  EXPECT_EQ(prior.edge_map.shape(), (Shape{1, 1, 256, 256}));
  for (double v : prior.edge_map.data()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
  EXPECT_EQ(block.project_edge(prior).shape(), (Shape{1, 512, 16, 16}));
}

layers::AttentionConfig small_config(bool edge) {
  layers::AttentionConfig cfg;
  cfg.width = 16;
  cfg.heads = 4;
  cfg.head_dim = 4;
  cfg.edge_projection = edge;
  return cfg;
}

void copy_values(Tensor& dst, const Tensor& src) {
  std::copy(src.data().begin(), src.data().end(), dst.mutable_data().begin());
}

TEST(AttentionTest, ZeroEdgeBiasReducesToPlainBlock) {
  layers::ParamRegistry reg_eg(11), reg_plain(12);
  layers::AttentionBlock eg(reg_eg, "eg", small_config(true));
  layers::AttentionBlock plain(reg_plain, "plain", small_config(false));
  for (auto [dst, src] : {std::pair{&plain.q_weight, &eg.q_weight}, {&plain.q_bias, &eg.q_bias},
                          {&plain.k_weight, &eg.k_weight}, {&plain.k_bias, &eg.k_bias},
                          {&plain.v_weight, &eg.v_weight}, {&plain.v_bias, &eg.v_bias},
                          {&plain.o_weight, &eg.o_weight}, {&plain.o_bias, &eg.o_bias},
                          {&plain.ln_gamma, &eg.ln_gamma}, {&plain.ln_beta, &eg.ln_beta}}) {
    copy_values(*dst, *src);
  }
  std::fill(eg.edge_proj.weight.mutable_data().begin(), eg.edge_proj.weight.mutable_data().end(),
            0.0);
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    auto x = random_tensor({2, 16, 3, 3}, rng, false);
    layers::EdgePrior prior{Tensor(), random_tensor({2, 1, 3, 3}, rng, false, 0.0, 1.0)};
    std::mt19937_64 r1(trial), r2(trial), r3(trial);
    auto reference = plain.forward_with_bias(x, Tensor(), true, r1);
    EXPECT_TRUE(bit_identical(eg.forward(x, &prior, true, r2), reference));
    EXPECT_TRUE(bit_identical(eg.forward_with_bias(x, Tensor::zeros({2, 16, 3, 3}), true, r3),
                              reference));
  }
}

TEST(AttentionTest, WeightRowsSumToOne) {
  layers::ParamRegistry reg(14);
  layers::AttentionBlock block(reg, "attn", small_config(true));
  std::mt19937_64 rng(15);
  auto x = random_tensor({2, 16, 4, 3}, rng, false, -3.0, 3.0);
  layers::EdgePrior prior{Tensor(), random_tensor({2, 1, 4, 3}, rng, false, 0.0, 1.0)};
  block.forward(x, &prior, false, rng);
  const auto& a = block.last_attention();
  ASSERT_EQ(a.shape(), (Shape{8, 12, 12}));
  for (std::int64_t row = 0; row < 8 * 12; ++row) {
    double s = 0.0;
    for (int j = 0; j < 12; ++j) {
      const double v = a.data()[row * 12 + j];
      EXPECT_GT(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-10);
  }
}

TEST(AttentionTest, SingleTokenIsValuePathOnly) {
  layers::ParamRegistry reg(16);
  layers::AttentionBlock block(reg, "attn", small_config(true));
  std::mt19937_64 rng(17);
  for (auto* t : {&block.q_bias, &block.k_bias, &block.v_bias, &block.o_bias, &block.ln_gamma,
                  &block.ln_beta}) {
    for (double& v : t->mutable_data()) v = std::uniform_real_distribution<double>(-1, 1)(rng);
  }
  auto x = random_tensor({1, 16, 1, 1}, rng, false);
  auto bias = random_tensor({1, 16, 1, 1}, rng, false, -5.0, 5.0);
  auto y = block.forward_with_bias(x, bias, false, rng);

  const auto xs = x.data();
  std::vector<double> v(16), r(16);
  for (int i = 0; i < 16; ++i) {
    v[i] = block.v_bias.data()[i];
    for (int j = 0; j < 16; ++j) v[i] += block.v_weight.data()[i * 16 + j] * xs[j];
  }
  for (int i = 0; i < 16; ++i) {
    r[i] = xs[i] + block.o_bias.data()[i];
    for (int j = 0; j < 16; ++j) r[i] += block.o_weight.data()[i * 16 + j] * v[j];
  }
  double mu = 0.0, var = 0.0;
  for (double e : r) mu += e / 16.0;
  for (double e : r) var += (e - mu) * (e - mu) / 16.0;
  for (int i = 0; i < 16; ++i) {
    const double expected =
        (r[i] - mu) / std::sqrt(var + 1e-5) * block.ln_gamma.data()[i] + block.ln_beta.data()[i];
    EXPECT_NEAR(y.data()[i], expected, 1e-12);
  }
}

TEST(ModelTest, BatchPermutationEquivarianceInEval) {
  NoGradGuard no_grad;
  Model m(ModelSpec::preset(Variant::kEdgeAttNet, 32).with_width_divisor(8), 4);
  std::mt19937_64 rng(18);
  auto x = random_tensor({3, 1, 32, 32}, rng, false);
  const std::int64_t plane = 32 * 32;
  std::vector<double> permuted(x.data().size());
  const int order[3] = {2, 0, 1};
  for (int b = 0; b < 3; ++b) {
    std::copy_n(x.data().begin() + order[b] * plane, plane, permuted.begin() + b * plane);
  }
  auto y = m.forward(x, false);
  auto yp = m.forward(Tensor::from_data({3, 1, 32, 32}, permuted), false);
  for (int b = 0; b < 3; ++b) {
    for (std::int64_t i = 0; i < plane; ++i) {
      EXPECT_NEAR(yp.data()[b * plane + i], y.data()[order[b] * plane + i], 1e-12);
    }
  }
}

TEST(ModelTest, DeterministicWithFixedDropoutSeed) {
  std::mt19937_64 rng(19);
  auto x = random_tensor({2, 1, 32, 32}, rng, false);
  auto run = [&] {
    Model m(ModelSpec::preset(Variant::kMhsaPe, 32).with_width_divisor(8), 5);
    m.reseed_dropout(77);
    return m.forward(x, true);
  };
  EXPECT_TRUE(bit_identical(run(), run()));
}

TEST(ModelTest, SmallEdgeAttNetGradientCheck) {
  ModelSpec spec = ModelSpec::preset(Variant::kEdgeAttNet, 32).with_width_divisor(16);
  Model m(spec, 6);
  std::mt19937_64 rng(20);
  auto x = random_tensor({1, 1, 32, 32}, rng, false);
  std::vector<double> t(32 * 32);
  for (int i = 0; i < 32 * 32; ++i) t[i] = (i % 32 > 10 && i % 32 < 16) ? 1.0 : 0.0;
  auto target = Tensor::from_data({1, 1, 32, 32}, t);
  auto loss = [&] {
    m.reseed_dropout(3);
    return losses::bce_dice(m.forward(x, true), target).total;
  };
  std::vector<Tensor> leaves;
  std::vector<std::vector<std::int64_t>> indices;
  for (auto& p : m.parameters()) {
    leaves.push_back(p.tensor);
    indices.push_back(testing::sample_indices(p.tensor, 4, rng));
  }
  // Conv biases feeding batchnorm have an exactly zero gradient; the floor
  // keeps finite-difference roundoff (~1e-10) from dominating those entries.
  auto r = testing::check_gradients(loss, leaves, indices, 1e-6, 1e-6);
  EXPECT_LT(r.max_rel_error, 1e-3);
  EXPECT_GT(r.checked, 100);
}

}  // namespace
}  // namespace edgeattnet::model
