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

#ifndef EDGEATTNET_METRICS_H_
#define EDGEATTNET_METRICS_H_

#include <stdexcept>
#include <string>
#include <vector>

#include "edgeattnet/image.h"
#include "json.hpp"

namespace edgeattnet::metrics {

// One filament instance; a valid instance has at least one set pixel.
using InstanceMask = BinaryMask;
using MaskSet = std::vector<InstanceMask>;

// 8-connected components of `mask`, in raster order of their first pixel.
// Components with fewer than `min_area` pixels are dropped.
MaskSet connected_components(const BinaryMask& mask, int min_area = 10);

// |gt & pt| / |gt | pt| when the intersection is non-empty, else 0.
double iou_pairwise(const InstanceMask& gt, const InstanceMask& pt);

// Coarse occupancy grid at scale delta in (0, 1]: ceil(H * delta) x
// ceil(W * delta) cells, each set iff any of its source pixels is set.
// Pixel y falls in cell floor((y + 0.5) * delta).
BinaryMask downsample(const InstanceMask& mask, double delta);

// Cells set in both coarse grids divided by cells set in the ground-truth
// grid; 0 when the ground-truth grid is empty.
double scale_ratio(const InstanceMask& gt, const InstanceMask& pt, double delta);

// {1, 1/2, 1/4, 1/8, 1/16}.
std::vector<double> default_scales();
// Throws std::invalid_argument unless scales are non-empty, in (0, 1],
// strictly descending and start at 1.
void validate_scales(const std::vector<double>& scales);

// Mean of scale_ratio over `scales`.
double iou_multiscale(const InstanceMask& gt, const InstanceMask& pt,
                      const std::vector<double>& scales);

struct PairScore {
  int gt_index = 0;
  int pt_index = 0;
  double pairwise = 0.0;
  double multiscale = 0.0;
  bool operator==(const PairScore&) const = default;
};

struct ImageRecord {
  std::string image_id;
  double pairwise = 0.0;    // mean over retained pairs
  double multiscale = 0.0;  // mean over the same pairs
  int pair_count = 0;
  std::vector<PairScore> pairs;
  bool operator==(const ImageRecord&) const = default;
};

// Scores every (gt, pt) pair with a non-empty pixel intersection.
ImageRecord evaluate_image(const std::string& image_id, const MaskSet& gt,
                           const MaskSet& pt, const std::vector<double>& scales);

class NoEvaluablePairs : public std::runtime_error {
 public:
  NoEvaluablePairs() : std::runtime_error("no evaluable pairs") {}
};

struct EvalReport {
  std::vector<ImageRecord> per_image;
  double miou_pairwise = 0.0;
  double miou_multiscale = 0.0;
  int evaluated_images = 0;
  std::vector<double> scales;
  std::string config_hash;
  bool operator==(const EvalReport&) const = default;
};

// Dataset means over images with at least one pair. Throws NoEvaluablePairs
// when there are none.
EvalReport evaluate_dataset(std::vector<ImageRecord> records,
                            const std::vector<double>& scales);

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& json);
// One row per scored pair: image_id,gt_index,pt_index,iou_pairwise,iou_multiscale.
std::string pairs_csv(const EvalReport& report);

}  // namespace edgeattnet::metrics

#endif  // EDGEATTNET_METRICS_H_
