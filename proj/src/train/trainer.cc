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

#include "edgeattnet/trainer.h"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "edgeattnet/losses.h"
#include "edgeattnet/metrics.h"
#include "edgeattnet/optim.h"

namespace edgeattnet::train {
namespace {

std::vector<std::vector<std::size_t>> batches_of(const std::vector<std::size_t>& order,
                                                 int batch_size) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    out.emplace_back(order.begin() + i,
                     order.begin() + std::min(order.size(), i + batch_size));
  }
  return out;
}

std::vector<std::size_t> identity_order(std::size_t n) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  return order;
}

bool gradients_finite(const std::vector<Parameter>& params, std::string* which) {
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad()) {
      if (!std::isfinite(g)) {
        *which = p.name;
        return false;
      }
    }
  }
  return true;
}

}  // namespace

Tensor stack_images(const std::vector<data::Sample>& samples,
                    const std::vector<std::size_t>& indices) {
  const GrayImage& first = samples.at(indices.at(0)).image;
  std::vector<double> values;
  values.reserve(indices.size() * first.pixels.size());
  for (auto i : indices) {
    const GrayImage& img = samples.at(i).image;
    if (img.width != first.width || img.height != first.height) {
      throw ShapeError("batch images differ in size");
    }
    values.insert(values.end(), img.pixels.begin(), img.pixels.end());
  }
  return Tensor::from_data({static_cast<std::int64_t>(indices.size()), 1, first.height, first.width},
                           std::move(values));
}

Tensor stack_targets(const std::vector<data::Sample>& samples,
                     const std::vector<std::size_t>& indices) {
  const BinaryMask& first = samples.at(indices.at(0)).union_mask;
  std::vector<double> values;
  values.reserve(indices.size() * first.bits.size());
  for (auto i : indices) {
    const BinaryMask& m = samples.at(i).union_mask;
    if (!m.same_size(first)) throw ShapeError("batch targets differ in size");
    for (auto b : m.bits) values.push_back(b ? 1.0 : 0.0);
  }
  return Tensor::from_data({static_cast<std::int64_t>(indices.size()), 1, first.height, first.width},
                           std::move(values));
}

std::vector<BinaryMask> logits_to_masks(const Tensor& logits, double threshold) {
  if (logits.rank() != 4 || logits.size(1) != 1) {
    throw ShapeError("logits_to_masks: expected B x 1 x H x W, got " +
                     shape_string(logits.shape()));
  }
  const int h = static_cast<int>(logits.size(2));
  const int w = static_cast<int>(logits.size(3));
  const auto z = logits.data();
  std::vector<BinaryMask> out;
  for (std::int64_t b = 0; b < logits.size(0); ++b) {
    BinaryMask m(w, h);
    for (std::size_t i = 0; i < m.bits.size(); ++i) {
      const double p = 1.0 / (1.0 + std::exp(-z[b * m.bits.size() + i]));
      m.bits[i] = p > threshold;
    }
    out.push_back(std::move(m));
  }
  return out;
}

EvalSummary evaluate(model::Model& model, const std::vector<data::Sample>& samples,
                     const TrainOptions& options) {
  EvalSummary out;
  if (samples.empty()) return out;
  NoGradGuard no_grad;
  std::int64_t inter = 0, pred_sum = 0, target_sum = 0;
  std::vector<metrics::ImageRecord> records;
  for (const auto& batch : batches_of(identity_order(samples.size()), options.batch_size)) {
    const Tensor x = stack_images(samples, batch);
    const Tensor t = stack_targets(samples, batch);
    const Tensor logits = model.forward(x, false);
    const losses::LossValue loss = losses::bce_dice(logits, t);
    const double weight = static_cast<double>(batch.size()) / samples.size();
    out.loss += weight * loss.total.item();
    out.bce += weight * loss.bce.item();
    out.dice_loss += weight * loss.dice.item();
    const auto masks = logits_to_masks(logits, options.threshold);
    for (std::size_t k = 0; k < batch.size(); ++k) {
      const data::Sample& s = samples[batch[k]];
      for (std::size_t i = 0; i < masks[k].bits.size(); ++i) {
        inter += masks[k].bits[i] & s.union_mask.bits[i];
        pred_sum += masks[k].bits[i];
        target_sum += s.union_mask.bits[i];
      }
      records.push_back(metrics::evaluate_image(
          s.id, s.instances, metrics::connected_components(masks[k]), options.scales));
    }
  }
  out.dice = pred_sum + target_sum == 0
                 ? 1.0
                 : 2.0 * static_cast<double>(inter) / static_cast<double>(pred_sum + target_sum);
  try {
    const metrics::EvalReport report = metrics::evaluate_dataset(records, options.scales);
    out.miou_pairwise = report.miou_pairwise;
    out.miou_multiscale = report.miou_multiscale;
    out.evaluated_images = report.evaluated_images;
  } catch (const metrics::NoEvaluablePairs&) {
    // An untrained network often predicts nothing; its scores are zero.
  }
  return out;
}

TrainResult fit(model::Model& model, const std::vector<data::Sample>& train,
                const std::vector<data::Sample>& val, const TrainOptions& options,
                const TrainCallbacks& callbacks) {
  if (options.batch_size <= 0) throw std::invalid_argument("batch size must be positive");
  if (options.epochs < 0) throw std::invalid_argument("epochs must be non-negative");
  if (train.empty() && options.epochs > 0) throw std::invalid_argument("no training samples");
  metrics::validate_scales(options.scales);

  TrainResult result;
  result.best_loss = std::numeric_limits<double>::infinity();
  model.reseed_dropout(options.seed ^ 0x5bd1e9955bd1e995ULL);
  Adam adam(AdamOptions{.lr = options.lr});
  auto& params = model.parameters();
  std::int64_t step = 0;

  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    const auto order =
        data::split_indices(train.size(), train.size(), 0, 0,
                            options.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(epoch))
            .train;
    std::size_t seen = 0;
    bool step_limit = false;
    for (const auto& batch : batches_of(order, options.batch_size)) {
      if (options.max_steps >= 0 && step >= options.max_steps) {
        step_limit = true;
        break;
      }
      // Training-mode batchnorm updates its running statistics during the
      // forward pass; keep a copy so a failed step leaves no trace.
      std::vector<std::vector<double>> saved_buffers;
      for (const auto& b : model.buffers()) saved_buffers.push_back(*b.values);
      auto restore_buffers = [&] {
        auto buffers = model.buffers();
        for (std::size_t i = 0; i < buffers.size(); ++i) *buffers[i].values = saved_buffers[i];
      };
      zero_grads(params);
      const Tensor logits = model.forward(stack_images(train, batch), true);
      const losses::LossValue loss = losses::bce_dice(logits, stack_targets(train, batch));
      const double value = loss.total.item();
      if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << " step " << step + 1 << " (bce "
            << loss.bce.item() << ", dice " << loss.dice.item() << ")";
        restore_buffers();
        throw TrainingDiverged(msg.str(), epoch, step + 1);
      }
      loss.total.backward();
      std::string bad;
      if (!gradients_finite(params, &bad)) {
        restore_buffers();
        throw TrainingDiverged("non-finite gradient in " + bad + " at epoch " +
                                   std::to_string(epoch) + " step " + std::to_string(step + 1),
                               epoch, step + 1);
      }
      adam.step(params);
      ++step;
      result.step_losses.push_back(value);
      if (callbacks.on_step) callbacks.on_step(step, value);
      rec.train_loss += value * batch.size();
      rec.train_bce += loss.bce.item() * batch.size();
      rec.train_dice_loss += loss.dice.item() * batch.size();
      seen += batch.size();
    }
    if (seen > 0) {
      rec.train_loss /= seen;
      rec.train_bce /= seen;
      rec.train_dice_loss /= seen;
    }
    if (options.eval_train || options.stop_at_train_dice > 0) {
      rec.has_train_eval = true;
      rec.train_eval = evaluate(model, train, options);
    }
    if (!val.empty()) {
      rec.has_val = true;
      rec.val = evaluate(model, val, options);
    }
    const double criterion = rec.has_val ? rec.val.loss : rec.train_loss;
    if (criterion < result.best_loss) {
      result.best_loss = criterion;
      result.best_epoch = epoch;
      rec.best = true;
    }
    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.epochs.push_back(rec);
    if (callbacks.on_epoch) callbacks.on_epoch(rec);
    if (step_limit || (options.max_steps >= 0 && step >= options.max_steps)) break;
    if (options.stop_at_train_dice > 0 && rec.train_eval.dice >= options.stop_at_train_dice) break;
  }
  return result;
}

}  // namespace edgeattnet::train
