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

#ifndef EDGEATTNET_OPTIM_H_
#define EDGEATTNET_OPTIM_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "edgeattnet/tensor.h"

namespace edgeattnet {

// A named trainable tensor. Names are hierarchical ("enc1.conv1.weight") and
// unique within a model.
struct Parameter {
  std::string name;
  Tensor tensor;
};

std::int64_t count_parameters(std::span<const Parameter> params);
void zero_grads(std::span<Parameter> params);

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::int64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

// One bias-corrected Adam update over `params` using their current gradients.
// Parameters without a gradient are treated as having a zero gradient.
void adam_step(std::span<Parameter> params, AdamState& state,
               const AdamOptions& options = {});

class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  void step(std::span<Parameter> params) { adam_step(params, state_, options_); }
  const AdamState& state() const { return state_; }
  const AdamOptions& options() const { return options_; }

 private:
  AdamOptions options_;
  AdamState state_;
};

}  // namespace edgeattnet

#endif  // EDGEATTNET_OPTIM_H_
