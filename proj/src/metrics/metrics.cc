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

#include "edgeattnet/metrics.h"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace edgeattnet::metrics {
namespace {

void require_same_size(const char* op, const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_size(b)) {
    throw std::invalid_argument(std::string(op) + ": mask sizes differ (" +
                                std::to_string(a.width) + "x" + std::to_string(a.height) +
                                " vs " + std::to_string(b.width) + "x" +
                                std::to_string(b.height) + ")");
  }
}

int grid_extent(int n, double delta) {
  return std::max(1, static_cast<int>(std::ceil(n * delta - 1e-9)));
}

}  // namespace

MaskSet connected_components(const BinaryMask& mask, int min_area) {
  const int w = mask.width;
  const int h = mask.height;
  std::vector<int> label(mask.bits.size(), -1);
  std::vector<std::size_t> stack;
  MaskSet out;
  for (std::size_t start = 0; start < mask.bits.size(); ++start) {
    if (!mask.bits[start] || label[start] >= 0) continue;
    std::vector<std::size_t> members;
    stack.push_back(start);
    label[start] = 1;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      members.push_back(i);
      const int x = static_cast<int>(i % w);
      const int y = static_cast<int>(i / w);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx;
          const int ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
          if (mask.bits[j] && label[j] < 0) {
            label[j] = 1;
            stack.push_back(j);
          }
        }
      }
    }
    if (static_cast<int>(members.size()) < min_area) continue;
    InstanceMask inst(w, h);
    for (std::size_t i : members) inst.bits[i] = 1;
    out.push_back(std::move(inst));
  }
  return out;
}

double iou_pairwise(const InstanceMask& gt, const InstanceMask& pt) {
  require_same_size("iou_pairwise", gt, pt);
  std::int64_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < gt.bits.size(); ++i) {
    const bool a = gt.bits[i] != 0;
    const bool b = pt.bits[i] != 0;
    inter += a && b;
    uni += a || b;
  }
  if (inter == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

BinaryMask downsample(const InstanceMask& mask, double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) {
    throw std::invalid_argument("downsample: scale must lie in (0, 1]");
  }
  if (delta == 1.0) return mask;
  const int gw = grid_extent(mask.width, delta);
  const int gh = grid_extent(mask.height, delta);
  BinaryMask grid(gw, gh);
  for (int y = 0; y < mask.height; ++y) {
    const int cy = std::min(gh - 1, static_cast<int>(std::floor((y + 0.5) * delta)));
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      const int cx = std::min(gw - 1, static_cast<int>(std::floor((x + 0.5) * delta)));
      grid.at(cx, cy) = 1;
    }
  }
  return grid;
}

double scale_ratio(const InstanceMask& gt, const InstanceMask& pt, double delta) {
  require_same_size("scale_ratio", gt, pt);
  const BinaryMask g = downsample(gt, delta);
  const BinaryMask p = downsample(pt, delta);
  std::int64_t both = 0, gt_cells = 0;
  for (std::size_t i = 0; i < g.bits.size(); ++i) {
    gt_cells += g.bits[i] != 0;
    both += g.bits[i] && p.bits[i];
  }
  if (gt_cells == 0) return 0.0;
  return static_cast<double>(both) / static_cast<double>(gt_cells);
}

std::vector<double> default_scales() { return {1.0, 0.5, 0.25, 0.125, 0.0625}; }

void validate_scales(const std::vector<double>& scales) {
  if (scales.empty()) throw std::invalid_argument("scale set must not be empty");
  if (scales.front() != 1.0) throw std::invalid_argument("scale set must start at 1");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!(scales[i] > 0.0 && scales[i] <= 1.0)) {
      throw std::invalid_argument("scales must lie in (0, 1]");
    }
    if (i > 0 && !(scales[i] < scales[i - 1])) {
      throw std::invalid_argument("scales must be strictly descending");
    }
  }
}

double iou_multiscale(const InstanceMask& gt, const InstanceMask& pt,
                      const std::vector<double>& scales) {
  if (scales.empty()) throw std::invalid_argument("iou_multiscale: empty scale set");
  double sum = 0.0;
  for (double d : scales) sum += scale_ratio(gt, pt, d);
  return sum / static_cast<double>(scales.size());
}

ImageRecord evaluate_image(const std::string& image_id, const MaskSet& gt,
                           const MaskSet& pt, const std::vector<double>& scales) {
  ImageRecord rec;
  rec.image_id = image_id;
  double sum_pair = 0.0, sum_multi = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    for (std::size_t j = 0; j < pt.size(); ++j) {
      const double iou = iou_pairwise(gt[i], pt[j]);
      if (iou == 0.0) continue;  // no pixel overlap
      PairScore s{static_cast<int>(i), static_cast<int>(j), iou,
                  iou_multiscale(gt[i], pt[j], scales)};
      sum_pair += s.pairwise;
      sum_multi += s.multiscale;
      rec.pairs.push_back(s);
    }
  }
  rec.pair_count = static_cast<int>(rec.pairs.size());
  if (rec.pair_count > 0) {
    rec.pairwise = sum_pair / rec.pair_count;
    rec.multiscale = sum_multi / rec.pair_count;
  }
  return rec;
}

EvalReport evaluate_dataset(std::vector<ImageRecord> records,
                            const std::vector<double>& scales) {
  EvalReport report;
  report.per_image = std::move(records);
  report.scales = scales;
  double sp = 0.0, sm = 0.0;
  for (const auto& r : report.per_image) {
    if (r.pair_count == 0) continue;
    sp += r.pairwise;
    sm += r.multiscale;
    ++report.evaluated_images;
  }
  if (report.evaluated_images == 0) throw NoEvaluablePairs();
  report.miou_pairwise = sp / report.evaluated_images;
  report.miou_multiscale = sm / report.evaluated_images;
  return report;
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json images = nlohmann::json::array();
  for (const auto& r : report.per_image) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : r.pairs) {
      pairs.push_back({{"gt", p.gt_index},
                       {"pt", p.pt_index},
                       {"iou_pairwise", p.pairwise},
                       {"iou_multiscale", p.multiscale}});
    }
    images.push_back({{"image_id", r.image_id},
                      {"iou_pairwise", r.pairwise},
                      {"iou_multiscale", r.multiscale},
                      {"pair_count", r.pair_count},
                      {"pairs", pairs}});
  }
  return {{"miou_pairwise", report.miou_pairwise},
          {"miou_multiscale", report.miou_multiscale},
          {"evaluated_images", report.evaluated_images},
          {"scales", report.scales},
          {"config_hash", report.config_hash},
          {"per_image", images}};
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport report;
  report.miou_pairwise = j.at("miou_pairwise").get<double>();
  report.miou_multiscale = j.at("miou_multiscale").get<double>();
  report.evaluated_images = j.at("evaluated_images").get<int>();
  report.scales = j.at("scales").get<std::vector<double>>();
  report.config_hash = j.value("config_hash", "");
  for (const auto& im : j.at("per_image")) {
    ImageRecord r;
    r.image_id = im.at("image_id").get<std::string>();
    r.pairwise = im.at("iou_pairwise").get<double>();
    r.multiscale = im.at("iou_multiscale").get<double>();
    r.pair_count = im.at("pair_count").get<int>();
    for (const auto& p : im.at("pairs")) {
      r.pairs.push_back({p.at("gt").get<int>(), p.at("pt").get<int>(),
                         p.at("iou_pairwise").get<double>(),
                         p.at("iou_multiscale").get<double>()});
    }
    report.per_image.push_back(std::move(r));
  }
  return report;
}

std::string pairs_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "image_id,gt_index,pt_index,iou_pairwise,iou_multiscale\n";
  char buf[96];
  for (const auto& r : report.per_image) {
    for (const auto& p : r.pairs) {
      std::snprintf(buf, sizeof(buf), ",%d,%d,%.17g,%.17g\n", p.gt_index, p.pt_index,
                    p.pairwise, p.multiscale);
      out << r.image_id << buf;
    }
  }
  return out.str();
}

}  // namespace edgeattnet::metrics
