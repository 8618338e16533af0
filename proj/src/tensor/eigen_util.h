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

#ifndef EDGEATTNET_SRC_TENSOR_EIGEN_UTIL_H_
#define EDGEATTNET_SRC_TENSOR_EIGEN_UTIL_H_

#include <Eigen/Core>

#include "edgeattnet/tensor.h"

namespace edgeattnet::internal {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

inline void require_rank(const Tensor& t, int rank, const char* op,
                         const char* what) {
  if (!t.defined()) {
    throw ShapeError(std::string(op) + ": " + what + " is undefined");
  }
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": " + what + " must have rank " +
                     std::to_string(rank) + ", got " + shape_string(t.shape()));
  }
}

}  // namespace edgeattnet::internal

#endif  // EDGEATTNET_SRC_TENSOR_EIGEN_UTIL_H_
