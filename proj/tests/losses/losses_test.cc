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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "gradcheck.h"

namespace edgeattnet::losses {
namespace {

using testing::check_all;
using testing::random_tensor;

Tensor binary_target(Shape shape, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.4);
  std::vector<double> v(static_cast<std::size_t>(shape_numel(shape)));
  for (double& x : v) x = coin(rng) ? 1.0 : 0.0;
  return Tensor::from_data(std::move(shape), std::move(v));
}

TEST(BceTest, ZeroLogitsGiveLogTwo) {
  std::mt19937_64 rng(1);
  auto t = binary_target({2, 1, 3, 3}, rng);
  EXPECT_NEAR(bce_with_logits(Tensor::zeros({2, 1, 3, 3}), t).item(), std::log(2.0), 1e-15);
}

TEST(BceTest, SaturatedCorrectLogit) {
  auto z = Tensor::full({1, 1, 2, 2}, 20.0);
  auto t = Tensor::full({1, 1, 2, 2}, 1.0);
  EXPECT_LT(bce_with_logits(z, t).item(), 1e-8);
}

TEST(BceTest, MatchesNaiveFormula) {
  std::mt19937_64 rng(2);
  auto z = random_tensor({1, 1, 4, 4}, rng, false, -4.0, 4.0);
  auto t = binary_target({1, 1, 4, 4}, rng);
  double naive = 0.0;
  for (int i = 0; i < 16; ++i) {
    const double s = 1.0 / (1.0 + std::exp(-z.data()[i]));
    naive -= t.data()[i] * std::log(s) + (1.0 - t.data()[i]) * std::log(1.0 - s);
  }
  EXPECT_NEAR(bce_with_logits(z, t).item(), naive / 16.0, 1e-10);
}

TEST(BceTest, RejectsShapeMismatch) {
  EXPECT_THROW(bce_with_logits(Tensor::zeros({1, 1, 2, 2}), Tensor::zeros({1, 1, 2, 3})),
               ShapeError);
  EXPECT_THROW(dice_loss(Tensor::zeros({4}), Tensor::zeros({5})), ShapeError);
}

TEST(DiceTest, PerfectOverlapIsNearZero) {
  EXPECT_NEAR(dice_loss(Tensor::full({1, 1, 3, 3}, 20.0), Tensor::full({1, 1, 3, 3}, 1.0))
                  .item(),
              0.0, 1e-8);
}

TEST(DiceTest, EmptyTargetAndPredictionIsZero) {
  // sigmoid(-800) underflows to exactly 0.
  EXPECT_DOUBLE_EQ(
      dice_loss(Tensor::full({1, 1, 2, 2}, -800.0), Tensor::zeros({1, 1, 2, 2})).item(),
      0.0);
}

TEST(DiceTest, HandEvaluatedUniformHalf) {
  auto t = Tensor::from_data({1, 1, 2, 2}, {1, 0, 0, 0});
  EXPECT_NEAR(dice_loss(Tensor::zeros({1, 1, 2, 2}), t).item(), 0.5, 1e-15);
}

TEST(LossTest, TotalIsExactSum) {
  std::mt19937_64 rng(3);
  auto z = random_tensor({2, 1, 4, 4}, rng, false, -3.0, 3.0);
  auto t = binary_target({2, 1, 4, 4}, rng);
  auto v = bce_dice(z, t);
  EXPECT_EQ(v.total.item(), v.bce.item() + v.dice.item());
  EXPECT_GE(v.bce.item(), 0.0);
  EXPECT_GE(v.dice.item(), 0.0);
  EXPECT_LE(v.dice.item(), 1.0);
}

TEST(LossTest, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(4);
  auto z = random_tensor({2, 1, 3, 4}, rng, true, -3.0, 3.0);
  auto t = binary_target({2, 1, 3, 4}, rng);
  EXPECT_LT(check_all([&] { return bce_with_logits(z, t); }, {z}).max_rel_error, 1e-5);
  EXPECT_LT(check_all([&] { return dice_loss(z, t); }, {z}).max_rel_error, 1e-5);
  EXPECT_LT(check_all([&] { return bce_dice(z, t).total; }, {z}).max_rel_error, 1e-5);
}

TEST(LossTest, InvariantToSharedSpatialPermutation) {
  std::mt19937_64 rng(5);
  auto z = random_tensor({1, 1, 4, 4}, rng, false, -3.0, 3.0);
  auto t = binary_target({1, 1, 4, 4}, rng);
  std::vector<int> perm(16);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<double> zp(16), tp(16);
  for (int i = 0; i < 16; ++i) {
    zp[i] = z.data()[perm[i]];
    tp[i] = t.data()[perm[i]];
  }
  auto a = bce_dice(z, t);
  auto b = bce_dice(Tensor::from_data({1, 1, 4, 4}, zp), Tensor::from_data({1, 1, 4, 4}, tp));
  EXPECT_NEAR(a.total.item(), b.total.item(), 1e-14);
}

TEST(DiceCoefficientTest, CountsThresholdedOverlap) {
  auto z = Tensor::from_data({1, 1, 2, 2}, {5, 5, -5, -5});
  auto t = Tensor::from_data({1, 1, 2, 2}, {1, 0, 0, 0});
  EXPECT_DOUBLE_EQ(dice_coefficient(z, t), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(dice_coefficient(Tensor::full({4}, -5.0), Tensor::zeros({4})), 1.0);
}

}  // namespace
}  // namespace edgeattnet::losses
