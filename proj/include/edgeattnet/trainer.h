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

#ifndef EDGEATTNET_TRAINER_H_
#define EDGEATTNET_TRAINER_H_

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgeattnet/data.h"
#include "edgeattnet/model.h"
#include "edgeattnet/tensor.h"

namespace edgeattnet::train {

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, int epoch, std::int64_t step)
      : std::runtime_error(what), epoch(epoch), step(step) {}
  int epoch;
  std::int64_t step;
};

struct TrainOptions {
  int epochs = 50;
  double lr = 1e-4;
  int batch_size = 4;
  std::uint64_t seed = 0;
  double threshold = 0.5;
  std::vector<double> scales = metrics::default_scales();
  // Stop once the training-set Dice reaches this value (disabled when <= 0).
  double stop_at_train_dice = 0.0;
  // Evaluate the training set in inference mode after every epoch.
  bool eval_train = false;
  // Stop after this many optimizer steps (disabled when < 0).
  std::int64_t max_steps = -1;
};

struct EvalSummary {
  double loss = 0.0;
  double bce = 0.0;
  double dice_loss = 0.0;
  double dice = 0.0;  // hard Dice over all pixels of the set
  double miou_pairwise = 0.0;
  double miou_multiscale = 0.0;
  int evaluated_images = 0;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double train_bce = 0.0;
  double train_dice_loss = 0.0;
  bool has_train_eval = false;
  EvalSummary train_eval;
  bool has_val = false;
  EvalSummary val;
  bool best = false;
  double seconds = 0.0;
};

struct TrainCallbacks {
  std::function<void(std::int64_t step, double loss)> on_step;
  // Called after the record is complete; `best` marks a new best model.
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochRecord> epochs;
  std::vector<double> step_losses;
  int best_epoch = 0;  // 0 means the initial model was never improved upon
  double best_loss = 0.0;
};

// B x 1 x H x W image and target tensors from samples[indices].
Tensor stack_images(const std::vector<data::Sample>& samples,
                    const std::vector<std::size_t>& indices);
Tensor stack_targets(const std::vector<data::Sample>& samples,
                     const std::vector<std::size_t>& indices);

// Thresholded sigmoid of the logits, strictly above `threshold`.
std::vector<BinaryMask> logits_to_masks(const Tensor& logits, double threshold);

// Inference-mode losses, Dice and instance metrics. Predicted instances are
// the 8-connected components of each predicted mask.
EvalSummary evaluate(model::Model& model, const std::vector<data::Sample>& samples,
                     const TrainOptions& options);

// Adam on BCE + Dice. The model is selected by validation loss (training loss
// when `val` is empty); callbacks receive every epoch. Throws TrainingDiverged
// before applying an update whose loss or gradients are not finite, so the
// model still holds the last good parameters.
TrainResult fit(model::Model& model, const std::vector<data::Sample>& train,
                const std::vector<data::Sample>& val, const TrainOptions& options,
                const TrainCallbacks& callbacks = {});

}  // namespace edgeattnet::train

#endif  // EDGEATTNET_TRAINER_H_
