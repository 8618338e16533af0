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

#ifndef EDGEATTNET_TESTS_GRADCHECK_H_
#define EDGEATTNET_TESTS_GRADCHECK_H_

// Central finite-difference oracle for reverse-mode gradients. Test-only; it
// touches nothing but Tensor values and a scalar-valued closure.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "edgeattnet/tensor.h"

namespace edgeattnet::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  int checked = 0;
};

// Relative error with an absolute floor, so gradients that are zero on both
// sides compare equal and tiny gradients are judged on absolute error.
inline double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

// Checks d loss / d leaf for the listed element indices of each leaf. `loss`
// must rebuild the graph from the leaves' current values on every call.
inline GradCheckResult check_gradients(
    const std::function<Tensor()>& loss, std::vector<Tensor> leaves,
    const std::vector<std::vector<std::int64_t>>& indices, double step = 1e-6,
    double floor = 1e-7) {
  for (auto& leaf : leaves) leaf.zero_grad();
  loss().backward();
  std::vector<std::vector<double>> analytic;
  for (auto& leaf : leaves) {
    analytic.emplace_back(leaf.grad().begin(), leaf.grad().end());
  }
  GradCheckResult result;
  NoGradGuard no_grad;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    auto values = leaves[l].mutable_data();
    for (auto idx : indices[l]) {
      const double saved = values[idx];
      values[idx] = saved + step;
      const double plus = loss().item();
      values[idx] = saved - step;
      const double minus = loss().item();
      values[idx] = saved;
      const double numeric = (plus - minus) / (2.0 * step);
      const double a = analytic[l][idx];
      result.max_rel_error = std::max(result.max_rel_error, relative_error(a, numeric, floor));
      result.max_abs_error = std::max(result.max_abs_error, std::abs(a - numeric));
      ++result.checked;
    }
  }
  return result;
}

inline std::vector<std::int64_t> all_indices(const Tensor& t) {
  std::vector<std::int64_t> idx(static_cast<std::size_t>(t.numel()));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<std::int64_t>(i);
  return idx;
}

inline std::vector<std::int64_t> sample_indices(const Tensor& t, int count,
                                                std::mt19937_64& rng) {
  auto idx = all_indices(t);
  if (static_cast<int>(idx.size()) <= count) return idx;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<std::size_t>(count));
  return idx;
}

inline GradCheckResult check_all(const std::function<Tensor()>& loss,
                                 std::vector<Tensor> leaves, double step = 1e-6,
                                 double floor = 1e-7) {
  std::vector<std::vector<std::int64_t>> indices;
  for (const auto& leaf : leaves) indices.push_back(all_indices(leaf));
  return check_gradients(loss, std::move(leaves), indices, step, floor);
}

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng,
                            bool requires_grad = true, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(static_cast<std::size_t>(shape_numel(shape)));
  for (double& x : v) x = dist(rng);
  return Tensor::from_data(std::move(shape), std::move(v), requires_grad);
}

}  // namespace edgeattnet::testing

#endif  // EDGEATTNET_TESTS_GRADCHECK_H_
