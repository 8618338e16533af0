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

#include "edgeattnet/tensor.h"

#include <random>

#include <gtest/gtest.h>

#include "edgeattnet/ops.h"
#include "gradcheck.h"

namespace edgeattnet {
namespace {

TEST(TensorTest, ShapeMustMatchData) {
  EXPECT_THROW(Tensor::from_data({2, 3}, std::vector<double>(5)), ShapeError);
  EXPECT_THROW(Tensor::zeros({1, 1, 1, 1, 1}), ShapeError);
  auto t = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.numel(), 6);
  EXPECT_EQ(t.size(-1), 3);
  EXPECT_EQ(t.rank(), 2);
}

TEST(TensorTest, BackwardOfSumIsOnes) {
  std::mt19937_64 rng(1);
  auto x = testing::random_tensor({3, 3}, rng);
  ops::sum(x).backward();
  for (double g : x.grad()) EXPECT_EQ(g, 1.0);
}

TEST(TensorTest, BackwardOfSquareIsTwiceInput) {
  std::mt19937_64 rng(2);
  auto x = testing::random_tensor({3, 3}, rng);
  ops::sum(ops::mul(x, x)).backward();
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    EXPECT_DOUBLE_EQ(x.grad()[i], 2.0 * x.data()[i]);
  }
}

TEST(TensorTest, RepeatedBackwardAccumulatesOnLeaves) {
  std::mt19937_64 rng(3);
  auto x = testing::random_tensor({4}, rng);
  auto y = ops::sum(ops::scale(ops::mul(x, x), 3.0));
  y.backward();
  y.backward();
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    EXPECT_NEAR(x.grad()[i], 2.0 * 6.0 * x.data()[i], 1e-12);
  }
}

TEST(TensorTest, BackwardRejectsNonScalar) {
  auto x = Tensor::zeros({2}, true);
  EXPECT_THROW(ops::scale(x, 2.0).backward(), ShapeError);
}

TEST(TensorTest, EveryReachableTensorGetsGrad) {
  auto a = Tensor::from_data({2}, {1.0, -1.0}, true);
  auto b = Tensor::from_data({2}, {2.0, 3.0}, true);
  // relu kills the gradient to `a` entirely for the negative element only,
  // while `unused_branch` contributes nothing.
  auto loss = ops::sum(ops::add(ops::relu(a), ops::scale(b, 0.0)));
  loss.backward();
  ASSERT_TRUE(a.has_grad());
  ASSERT_TRUE(b.has_grad());
  EXPECT_EQ(a.grad()[0], 1.0);
  EXPECT_EQ(a.grad()[1], 0.0);
  EXPECT_EQ(b.grad()[0], 0.0);
}

TEST(TensorTest, NoGradGuardSkipsGraph) {
  auto x = Tensor::zeros({2}, true);
  NoGradGuard guard;
  auto y = ops::sum(x);
  EXPECT_FALSE(y.requires_grad());
}

TEST(TensorTest, OpTraceRecordsOperations) {
  auto x = Tensor::zeros({1, 1, 2, 2});
  OpTrace trace;
  ops::relu(ops::maxpool2x2(x));
  EXPECT_TRUE(trace.contains("maxpool2x2"));
  EXPECT_TRUE(trace.contains("relu"));
  EXPECT_FALSE(trace.contains("softmax_lastdim"));
}

std::uint64_t signature_of(std::vector<double> values) {
  OpTrace trace;
  ops::relu(ops::maxpool2x2(Tensor::from_data({1, 1, 2, 2}, std::move(values))));
  return trace.branch_signature();
}

TEST(TensorTest, BranchSignatureTracksPiecewiseChoices) {
  const auto base = signature_of({0.5, 0.2, 0.1, 0.3});
  EXPECT_EQ(signature_of({0.6, 0.2, 0.1, 0.3}), base);  // same argmax and sign
  EXPECT_NE(signature_of({0.5, 0.7, 0.1, 0.3}), base);  // argmax moves
  EXPECT_NE(signature_of({-0.5, -0.2, -0.1, -0.3}), signature_of({-0.5, -0.2, 0.1, -0.3}));
  EXPECT_NE(signature_of({-0.5, -0.2, -0.4, -0.3}), signature_of({-0.5, -0.6, -0.4, -0.3}));
  EXPECT_NE(signature_of({0.5, 0.2, 0.1, 0.3}), signature_of({-0.5, -0.6, -0.7, -0.8}));
}

}  // namespace
}  // namespace edgeattnet
