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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <stdexcept>

#include "edgeattnet/data.h"
#include "edgeattnet/image_io.h"

namespace edgeattnet::data {
namespace {

void warn(LoadReport* report, const std::string& message) {
  if (report != nullptr) report->warnings.push_back(message);
}

// COCO ids are usually integers but some exporters write strings.
std::string id_string(const nlohmann::json& id) {
  if (id.is_string()) return id.get<std::string>();
  if (id.is_number_integer()) return std::to_string(id.get<std::int64_t>());
  throw DataError("image id must be an integer or a string");
}

bool valid_polygon(const nlohmann::json& poly) {
  if (!poly.is_array() || poly.size() < 6 || poly.size() % 2 != 0) return false;
  return std::all_of(poly.begin(), poly.end(), [](const nlohmann::json& v) {
    return v.is_number() && std::isfinite(v.get<double>());
  });
}

}  // namespace

double polygon_area(const Polygon& polygon) {
  const std::size_t n = polygon.size() / 2;
  double twice = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    twice += polygon[2 * i] * polygon[2 * j + 1] - polygon[2 * j] * polygon[2 * i + 1];
  }
  return std::abs(twice) / 2.0;
}

BinaryMask rasterize_polygon(const Polygon& polygon, int width, int height,
                             bool* degenerate) {
  if (polygon.size() < 6 || polygon.size() % 2 != 0) {
    throw std::invalid_argument("polygon needs at least 3 vertices given as x,y pairs");
  }
  if (width <= 0 || height <= 0) throw std::invalid_argument("polygon: empty image");
  const std::size_t n = polygon.size() / 2;
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = std::clamp(polygon[2 * i], -0.5, width - 0.5);
    ys[i] = std::clamp(polygon[2 * i + 1], -0.5, height - 0.5);
  }
  BinaryMask mask(width, height);
  Polygon clamped(polygon.size());
  for (std::size_t i = 0; i < n; ++i) {
    clamped[2 * i] = xs[i];
    clamped[2 * i + 1] = ys[i];
  }
  const bool flat = polygon_area(clamped) < 1e-12;
  if (degenerate != nullptr) *degenerate = flat;
  if (flat) return mask;

  std::vector<double> crossings;
  for (int y = 0; y < height; ++y) {
    crossings.clear();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      if ((ys[i] > y) != (ys[j] > y)) {
        crossings.push_back((xs[j] - xs[i]) * (y - ys[i]) / (ys[j] - ys[i]) + xs[i]);
      }
    }
    std::sort(crossings.begin(), crossings.end());
    for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
      // Centers x with crossings[k] <= x < crossings[k + 1].
      const int x0 = std::max(0, static_cast<int>(std::ceil(crossings[k])));
      const int x1 = std::min(width, static_cast<int>(std::ceil(crossings[k + 1])));
      for (int x = x0; x < x1; ++x) mask.at(x, y) = 1;
    }
  }
  return mask;
}

BinaryMask rasterize_record(const AnnotationRecord& record, bool* degenerate) {
  BinaryMask out(record.width, record.height);
  bool all_flat = true;
  for (const auto& poly : record.polygons) {
    bool flat = false;
    const BinaryMask m = rasterize_polygon(poly, record.width, record.height, &flat);
    all_flat = all_flat && flat;
    for (std::size_t i = 0; i < out.bits.size(); ++i) out.bits[i] |= m.bits[i];
  }
  if (degenerate != nullptr) *degenerate = all_flat;
  return out;
}

std::vector<AnnotationRecord> parse_annotations(const nlohmann::json& doc,
                                                LoadReport* report) {
  if (!doc.is_object() || !doc.contains("images") || !doc["images"].is_array()) {
    throw DataError("annotation document has no images array");
  }
  if (!doc.contains("annotations") || !doc["annotations"].is_array()) {
    throw DataError("annotation document has no annotations array");
  }
  struct ImageInfo {
    std::string file_name;
    int width = 0;
    int height = 0;
  };
  std::map<std::string, ImageInfo> images;
  for (const auto& img : doc["images"]) {
    try {
      ImageInfo info{img.at("file_name").get<std::string>(), img.at("width").get<int>(),
                     img.at("height").get<int>()};
      if (info.width <= 0 || info.height <= 0) throw DataError("non-positive size");
      images[id_string(img.at("id"))] = info;
    } catch (const std::exception& e) {
      warn(report, std::string("skipping image entry: ") + e.what());
    }
  }
  if (report != nullptr) {
    report->images = static_cast<int>(images.size());
    report->annotations = static_cast<int>(doc["annotations"].size());
  }
  if (doc["annotations"].empty()) warn(report, "annotation document has no annotations");

  std::vector<AnnotationRecord> records;
  int index = -1;
  for (const auto& ann : doc["annotations"]) {
    ++index;
    auto skip = [&](const std::string& why) {
      if (report != nullptr) ++report->skipped;
      warn(report, "annotation " + std::to_string(index) + ": " + why);
    };
    if (!ann.is_object() || !ann.contains("image_id")) {
      skip("missing image_id");
      continue;
    }
    std::string image_id;
    try {
      image_id = id_string(ann["image_id"]);
    } catch (const DataError& e) {
      skip(e.what());
      continue;
    }
    const auto it = images.find(image_id);
    if (it == images.end()) {
      skip("unknown image id " + image_id);
      continue;
    }
    const auto seg = ann.find("segmentation");
    if (seg == ann.end() || !seg->is_array()) {
      skip("segmentation is not a polygon list");
      continue;
    }
    AnnotationRecord rec;
    rec.image_id = image_id;
    rec.file_name = it->second.file_name;
    rec.width = it->second.width;
    rec.height = it->second.height;
    bool malformed = false;
    for (const auto& poly : *seg) {
      if (!valid_polygon(poly)) {
        malformed = true;
        break;
      }
      rec.polygons.push_back(poly.get<Polygon>());
    }
    if (malformed || rec.polygons.empty()) {
      skip("malformed polygon");
      continue;
    }
    if (const auto spine = ann.find("spine"); spine != ann.end() && spine->is_array()) {
      try {
        rec.spine = spine->get<std::vector<double>>();
      } catch (const nlohmann::json::exception&) {
        warn(report, "annotation " + std::to_string(index) + ": ignoring malformed spine");
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path,
                                               LoadReport* report) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open annotation file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return parse_annotations(doc, report);
}

BinaryMask mask_union(const MaskSet& masks) {
  if (masks.empty()) return BinaryMask();
  BinaryMask out(masks.front().width, masks.front().height);
  for (const auto& m : masks) {
    if (!m.same_size(out)) throw std::invalid_argument("mask_union: size mismatch");
    for (std::size_t i = 0; i < out.bits.size(); ++i) out.bits[i] |= m.bits[i];
  }
  return out;
}

std::vector<Sample> build_samples(const std::vector<AnnotationRecord>& records,
                                  const std::filesystem::path& image_dir,
                                  const BuildOptions& options, BuildReport* report) {
  BuildReport local;
  BuildReport& rep = report != nullptr ? *report : local;
  std::vector<std::string> order;
  std::map<std::string, std::vector<const AnnotationRecord*>> by_image;
  for (const auto& rec : records) {
    auto& group = by_image[rec.image_id];
    if (group.empty()) order.push_back(rec.image_id);
    group.push_back(&rec);
  }

  std::vector<Sample> samples;
  int full_scale = 1;
  for (const auto& id : order) {
    const auto& group = by_image[id];
    const AnnotationRecord& first = *group.front();
    GrayImage image;
    GrayImage unit;
    try {
      image = io::read_image(image_dir / first.file_name, &full_scale);
      unit = image;
      for (double& v : unit.pixels) v /= full_scale;
    } catch (const io::ImageIoError& e) {
      ++rep.skipped_images;
      rep.warnings.push_back("image " + id + ": " + e.what());
      continue;
    }
    if (image.width != first.width || image.height != first.height) {
      ++rep.skipped_images;
      rep.warnings.push_back("image " + id + ": size differs from annotation");
      continue;
    }
    if (options.preprocess) {
      try {
        image = preprocess::run_pipeline(image, options.pipeline).image;
      } catch (const preprocess::DiskNotFound& e) {
        ++rep.skipped_images;
        rep.warnings.push_back("image " + id + ": " + e.what());
        continue;
      }
    } else {
      image = std::move(unit);
    }
    Sample s;
    s.id = id;
    s.image = std::move(image);
    for (const AnnotationRecord* rec : group) {
      BinaryMask m = rasterize_record(*rec);
      if (m.count() == 0) {
        ++rep.dropped_instances;
        rep.warnings.push_back("image " + id + ": dropping empty instance");
        continue;
      }
      s.instances.push_back(std::move(m));
    }
    if (s.instances.empty()) {
      ++rep.skipped_images;
      rep.warnings.push_back("image " + id + ": no usable instances");
      continue;
    }
    s.union_mask = mask_union(s.instances);
    samples.push_back(std::move(s));
  }
  rep.samples = static_cast<int>(samples.size());
  return samples;
}

SplitIndices split_indices(std::size_t count, std::size_t n_train, std::size_t n_val,
                           std::size_t n_test, std::uint64_t seed) {
  if (n_train + n_val + n_test > count) {
    throw std::invalid_argument("split: requested " +
                                std::to_string(n_train + n_val + n_test) +
                                " samples but only " + std::to_string(count) + " exist");
  }
  std::vector<std::size_t> perm(count);
  for (std::size_t i = 0; i < count; ++i) perm[i] = i;
  std::mt19937_64 rng(seed);
  // Written out instead of std::shuffle so the permutation does not depend on
  // the standard library's distribution implementation.
  for (std::size_t i = count; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(perm[i - 1], perm[j]);
  }
  SplitIndices out;
  out.train.assign(perm.begin(), perm.begin() + n_train);
  out.val.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
  out.test.assign(perm.begin() + n_train + n_val, perm.begin() + n_train + n_val + n_test);
  return out;
}

}  // namespace edgeattnet::data
