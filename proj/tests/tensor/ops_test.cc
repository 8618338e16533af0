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

#include "edgeattnet/ops.h"

#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "gradcheck.h"

namespace edgeattnet {
namespace {

using testing::random_tensor;

TEST(Conv2dTest, IdentityKernelPreservesInput) {
  auto x = Tensor::full({1, 1, 4, 4}, 1.0);
  std::vector<double> k(9, 0.0);
  k[4] = 1.0;
  auto w = Tensor::from_data({1, 1, 3, 3}, k);
  auto y = ops::conv2d(x, w, Tensor::zeros({1}), 1, 1);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 4, 4}));
  for (double v : y.data()) EXPECT_EQ(v, 1.0);
}

TEST(Conv2dTest, ScalarAffineOneByOne) {
  auto x = Tensor::from_data({1, 1, 2, 2}, {1, 2, 3, 4});
  auto y = ops::conv2d(x, Tensor::from_data({1, 1, 1, 1}, {2}),
                       Tensor::from_data({1}, {1}));
  EXPECT_EQ(std::vector<double>(y.data().begin(), y.data().end()),
            (std::vector<double>{3, 5, 7, 9}));
}

TEST(Conv2dTest, RejectsChannelMismatch) {
  auto x = Tensor::zeros({1, 2, 4, 4});
  auto w = Tensor::zeros({3, 5, 3, 3});
  try {
    ops::conv2d(x, w, Tensor(), 1, 1);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("channels"), std::string::npos);
  }
}

TEST(Conv2dTest, ThreeByThreePaddingOnePreservesSpatialSize) {
  std::mt19937_64 rng(5);
  for (int h = 1; h <= 9; ++h) {
    for (int w = 1; w <= 9; w += 2) {
      auto y = ops::conv2d(random_tensor({2, 3, h, w}, rng, false),
                           random_tensor({4, 3, 3, 3}, rng, false), Tensor(), 1, 1);
      EXPECT_EQ(y.shape(), (Shape{2, 4, h, w}));
    }
  }
}

TEST(Conv2dTest, StrideShapeArithmetic) {
  auto y = ops::conv2d(Tensor::zeros({1, 1, 7, 8}), Tensor::zeros({2, 1, 3, 3}),
                       Tensor(), 2, 1);
  EXPECT_EQ(y.shape(), (Shape{1, 2, 4, 4}));
}

TEST(ConvTranspose2dTest, SinglePixelBroadcast) {
  auto y = ops::conv_transpose2d(Tensor::from_data({1, 1, 1, 1}, {5}),
                                 Tensor::full({1, 1, 2, 2}, 1.0), Tensor::zeros({1}));
  ASSERT_EQ(y.shape(), (Shape{1, 1, 2, 2}));
  for (double v : y.data()) EXPECT_EQ(v, 5.0);
}

TEST(ConvTranspose2dTest, DoublesSpatialExtent) {
  std::mt19937_64 rng(6);
  auto y = ops::conv_transpose2d(random_tensor({1, 4, 5, 5}, rng, false),
                                 random_tensor({4, 3, 2, 2}, rng, false), Tensor());
  EXPECT_EQ(y.shape(), (Shape{1, 3, 10, 10}));
}

TEST(ConvTranspose2dTest, RejectsOtherStrides) {
  EXPECT_THROW(ops::conv_transpose2d(Tensor::zeros({1, 1, 2, 2}),
                                     Tensor::zeros({1, 1, 3, 3}), Tensor(), 2),
               ShapeError);
}

TEST(MaxPoolTest, SingleWindow) {
  auto y = ops::maxpool2x2(Tensor::from_data({1, 1, 2, 2}, {1, 2, 3, 4}));
  ASSERT_EQ(y.shape(), (Shape{1, 1, 1, 1}));
  EXPECT_EQ(y.data()[0], 4.0);
}

TEST(MaxPoolTest, ConstantImageStaysConstant) {
  auto y = ops::maxpool2x2(Tensor::full({2, 3, 8, 6}, 0.25));
  EXPECT_EQ(y.shape(), (Shape{2, 3, 4, 3}));
  for (double v : y.data()) EXPECT_EQ(v, 0.25);
}

TEST(MaxPoolTest, RejectsOddExtent) {
  EXPECT_THROW(ops::maxpool2x2(Tensor::zeros({1, 1, 3, 4})), ShapeError);
}

TEST(MaxPoolTest, TiesRouteToFirstElement) {
  auto x = Tensor::full({1, 1, 2, 2}, 1.0, true);
  ops::sum(ops::maxpool2x2(x)).backward();
  EXPECT_EQ(std::vector<double>(x.grad().begin(), x.grad().end()),
            (std::vector<double>{1, 0, 0, 0}));
}

TEST(BatchNormTest, TrainingNormalizesPerChannel) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> dist(5.0, 10.0);
  std::vector<double> v(2 * 3 * 4 * 5);
  for (double& x : v) x = dist(rng);
  auto x = Tensor::from_data({2, 3, 4, 5}, v);
  auto stats = ops::BatchNormStats::identity(3);
  auto y = ops::batchnorm2d(x, Tensor::full({3}, 1.0), Tensor::zeros({3}), &stats, {});
  for (int c = 0; c < 3; ++c) {
    double s = 0, sq = 0;
    int n = 0;
    for (int b = 0; b < 2; ++b) {
      for (int i = 0; i < 20; ++i) {
        const double val = y.data()[(b * 3 + c) * 20 + i];
        s += val;
        sq += val * val;
        ++n;
      }
    }
    const double mean = s / n;
    EXPECT_NEAR(mean, 0.0, 1e-6);
    EXPECT_NEAR(sq / n - mean * mean, 1.0, 1e-6);
  }
}

TEST(BatchNormTest, ZeroGammaGivesBeta) {
  std::mt19937_64 rng(8);
  auto x = random_tensor({2, 2, 3, 3}, rng, false);
  auto beta = Tensor::from_data({2}, {0.7, -1.5});
  auto y = ops::batchnorm2d(x, Tensor::zeros({2}), beta, nullptr, {});
  for (int n = 0; n < 2; ++n) {
    for (int c = 0; c < 2; ++c) {
      for (int i = 0; i < 9; ++i) EXPECT_EQ(y.data()[(n * 2 + c) * 9 + i], beta.data()[c]);
    }
  }
}

TEST(BatchNormTest, RunningStatsUpdateAndEvalMode) {
  auto x = Tensor::from_data({1, 1, 2, 2}, {1, 2, 3, 4});
  auto stats = ops::BatchNormStats::identity(1);
  ops::batchnorm2d(x, Tensor::full({1}, 1.0), Tensor::zeros({1}), &stats, {});
  EXPECT_NEAR(stats.mean[0], 0.1 * 2.5, 1e-15);
  // Unbiased variance of {1,2,3,4} is 5/3.
  EXPECT_NEAR(stats.var[0], 0.9 + 0.1 * 5.0 / 3.0, 1e-15);
  ops::BatchNormOptions eval;
  eval.training = false;
  auto y = ops::batchnorm2d(x, Tensor::full({1}, 2.0), Tensor::full({1}, 1.0), &stats, eval);
  const double expected = 2.0 * (1.0 - stats.mean[0]) / std::sqrt(stats.var[0] + 1e-5) + 1.0;
  EXPECT_NEAR(y.data()[0], expected, 1e-14);
}

TEST(SoftmaxTest, UniformRow) {
  auto y = ops::softmax_lastdim(Tensor::zeros({3}));
  for (double v : y.data()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(SoftmaxTest, RowsSumToOneAndArePositive) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    auto y = ops::softmax_lastdim(random_tensor({4, 7}, rng, false, -30.0, 30.0));
    for (int r = 0; r < 4; ++r) {
      double s = 0.0;
      for (int i = 0; i < 7; ++i) {
        EXPECT_GT(y.data()[r * 7 + i], 0.0);
        s += y.data()[r * 7 + i];
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(LayerNormTest, NormalizesRows) {
  std::mt19937_64 rng(10);
  auto x = random_tensor({3, 16}, rng, false, -4.0, 9.0);
  auto y = ops::layernorm_lastdim(x, Tensor::full({16}, 1.0), Tensor::zeros({16}));
  for (int r = 0; r < 3; ++r) {
    double s = 0.0;
    for (int i = 0; i < 16; ++i) s += y.data()[r * 16 + i];
    EXPECT_NEAR(s / 16.0, 0.0, 1e-12);
  }
  EXPECT_THROW(ops::layernorm_lastdim(x, Tensor::zeros({15}), Tensor::zeros({16})),
               ShapeError);
}

TEST(DropoutTest, ValidatesProbability) {
  std::mt19937_64 rng(11);
  auto x = Tensor::zeros({4});
  EXPECT_THROW(ops::dropout(x, 1.0, true, rng), std::invalid_argument);
  EXPECT_THROW(ops::dropout(x, -0.1, true, rng), std::invalid_argument);
}

TEST(DropoutTest, EvalModeIsIdentity) {
  std::mt19937_64 rng(12);
  auto x = random_tensor({10}, rng, false);
  auto y = ops::dropout(x, 0.5, false, rng);
  EXPECT_EQ(std::vector<double>(y.data().begin(), y.data().end()),
            std::vector<double>(x.data().begin(), x.data().end()));
}

TEST(DropoutTest, SeededMaskIsDeterministic) {
  auto x = Tensor::full({64}, 1.0);
  std::mt19937_64 a(13), b(13);
  auto ya = ops::dropout(x, 0.1, true, a);
  auto yb = ops::dropout(x, 0.1, true, b);
  EXPECT_EQ(std::vector<double>(ya.data().begin(), ya.data().end()),
            std::vector<double>(yb.data().begin(), yb.data().end()));
  for (double v : ya.data()) EXPECT_TRUE(v == 0.0 || std::abs(v - 1.0 / 0.9) < 1e-15);
}

TEST(MatmulTest, SmallProduct) {
  auto a = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  auto b = Tensor::from_data({3, 2}, {7, 8, 9, 10, 11, 12});
  auto c = ops::matmul(a, b);
  EXPECT_EQ(std::vector<double>(c.data().begin(), c.data().end()),
            (std::vector<double>{58, 64, 139, 154}));
  EXPECT_THROW(ops::matmul(a, a), ShapeError);
}

TEST(LinearTest, MatchesManualAffine) {
  auto x = Tensor::from_data({1, 2, 2}, {1, 2, 3, 4});
  auto w = Tensor::from_data({3, 2}, {1, 0, 0, 1, 1, 1});
  auto b = Tensor::from_data({3}, {0.5, 0, -1});
  auto y = ops::linear(x, w, b);
  EXPECT_EQ(y.shape(), (Shape{1, 2, 3}));
  EXPECT_EQ(std::vector<double>(y.data().begin(), y.data().end()),
            (std::vector<double>{1.5, 2, 2, 3.5, 4, 6}));
}

TEST(AddTest, BroadcastsTrailingShape) {
  auto a = Tensor::zeros({2, 3, 2});
  auto b = Tensor::from_data({3, 2}, {1, 2, 3, 4, 5, 6});
  auto y = ops::add(a, b);
  for (int i = 0; i < 12; ++i) EXPECT_EQ(y.data()[i], b.data()[i % 6]);
  EXPECT_THROW(ops::add(a, Tensor::zeros({2, 3})), ShapeError);
}

TEST(ReshapeTest, FlattenSpatialRoundTripIsExact) {
  std::mt19937_64 rng(14);
  auto x = random_tensor({2, 8, 4, 4}, rng, false);
  auto flat = ops::flatten_spatial(x);
  EXPECT_EQ(flat.shape(), (Shape{2, 16, 8}));
  // token (b, t) channel c is x[b, c, t].
  EXPECT_EQ(flat.data()[(1 * 16 + 5) * 8 + 3], x.data()[(1 * 8 + 3) * 16 + 5]);
  auto back = ops::unflatten_spatial(flat, 4, 4);
  EXPECT_EQ(std::vector<double>(back.data().begin(), back.data().end()),
            std::vector<double>(x.data().begin(), x.data().end()));
}

TEST(ReshapeTest, SplitMergeHeadsRoundTrip) {
  std::mt19937_64 rng(15);
  auto x = random_tensor({2, 5, 12}, rng, false);
  auto heads = ops::split_heads(x, 3);
  EXPECT_EQ(heads.shape(), (Shape{6, 5, 4}));
  // head 2 of batch 1, token 4, dim 1 is channel 2*4+1 of token 4.
  EXPECT_EQ(heads.data()[((1 * 3 + 2) * 5 + 4) * 4 + 1], x.data()[(1 * 5 + 4) * 12 + 9]);
  auto back = ops::merge_heads(heads, 3);
  EXPECT_EQ(std::vector<double>(back.data().begin(), back.data().end()),
            std::vector<double>(x.data().begin(), x.data().end()));
  EXPECT_THROW(ops::split_heads(x, 5), ShapeError);
}

TEST(BilinearTest, ConstantImageStaysConstant) {
  auto x = Tensor::full({1, 2, 5, 7}, 0.625);
  for (auto [h, w] : {std::pair{1, 1}, {3, 4}, {16, 9}, {5, 7}}) {
    auto y = ops::bilinear_resize(x, h, w);
    EXPECT_EQ(y.shape(), (Shape{1, 2, h, w}));
    for (double v : y.data()) EXPECT_NEAR(v, 0.625, 1e-15);
  }
}

TEST(BilinearTest, SameSizeIsIdentity) {
  std::mt19937_64 rng(16);
  auto x = random_tensor({2, 1, 6, 5}, rng, false);
  auto y = ops::bilinear_resize(x, 6, 5);
  EXPECT_EQ(std::vector<double>(y.data().begin(), y.data().end()),
            std::vector<double>(x.data().begin(), x.data().end()));
}

TEST(BilinearTest, UpsampleInterpolatesLinearly) {
  // Half-pixel centres: output 0 samples source 0 (clamped), output 1
  // samples 0.25 of the way from source 0 to 1.
  auto y = ops::bilinear_resize(Tensor::from_data({1, 1, 1, 2}, {0, 4}), 1, 4);
  EXPECT_EQ(std::vector<double>(y.data().begin(), y.data().end()),
            (std::vector<double>{0, 1, 3, 4}));
}

}  // namespace
}  // namespace edgeattnet
