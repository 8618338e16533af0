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

#ifndef EDGEATTNET_LOSSES_H_
#define EDGEATTNET_LOSSES_H_

#include "edgeattnet/tensor.h"

namespace edgeattnet::losses {

// Mean over all elements of the stable logistic loss
// max(z, 0) - z * t + log(1 + exp(-|z|)). The target is treated as a constant.
Tensor bce_with_logits(const Tensor& logits, const Tensor& target);

// 1 - (2 * sum(p * t) + smooth) / (sum(p) + sum(t) + smooth) with
// p = sigmoid(z), summed over the whole batch.
Tensor dice_loss(const Tensor& logits, const Tensor& target, double smooth = 1.0);

struct LossValue {
  Tensor total;
  Tensor bce;
  Tensor dice;
};

LossValue bce_dice(const Tensor& logits, const Tensor& target, double smooth = 1.0);

// Hard Dice coefficient 2|P & T| / (|P| + |T|) of the thresholded
// probabilities; 1 when both are empty.
double dice_coefficient(const Tensor& logits, const Tensor& target,
                        double threshold = 0.5);

}  // namespace edgeattnet::losses

#endif  // EDGEATTNET_LOSSES_H_
