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

#ifndef EDGEATTNET_DATA_H_
#define EDGEATTNET_DATA_H_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgeattnet/image.h"
#include "edgeattnet/metrics.h"
#include "edgeattnet/preprocess.h"
#include "json.hpp"

namespace edgeattnet::data {

using metrics::MaskSet;

// Flat x0, y0, x1, y1, ... vertex list in pixel coordinates.
using Polygon = std::vector<double>;

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One annotated object. Its mask is the union of its polygons.
struct AnnotationRecord {
  std::string image_id;
  std::string file_name;
  int width = 0;
  int height = 0;
  std::vector<Polygon> polygons;
  std::vector<double> spine;  // optional polyline, passed through untouched
};

// Shoelace area, always non-negative.
double polygon_area(const Polygon& polygon);

// Even-odd fill sampled at pixel centers; a center on a left or top edge is
// inside, on a right or bottom edge outside. Vertices are clamped to the
// image extent first. A zero-area polygon yields an empty mask and sets
// *degenerate. Throws std::invalid_argument for fewer than 3 vertices.
BinaryMask rasterize_polygon(const Polygon& polygon, int width, int height,
                             bool* degenerate = nullptr);

// Union of the record's polygons.
BinaryMask rasterize_record(const AnnotationRecord& record, bool* degenerate = nullptr);

struct LoadReport {
  int images = 0;
  int annotations = 0;
  int skipped = 0;
  std::vector<std::string> warnings;
};

// COCO-style document with images[] and annotations[] keyed by image id.
// Malformed annotations are skipped and counted. Throws DataError when the
// document itself is unusable.
std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path,
                                               LoadReport* report = nullptr);
std::vector<AnnotationRecord> parse_annotations(const nlohmann::json& doc,
                                                LoadReport* report = nullptr);

struct Sample {
  std::string id;
  GrayImage image;
  MaskSet instances;
  BinaryMask union_mask;
};

// Pixelwise OR; all masks must share one size.
BinaryMask mask_union(const MaskSet& masks);

struct BuildOptions {
  // Run the full disk pipeline on each image; otherwise images are assumed
  // preprocessed and are divided by the file format's full scale.
  bool preprocess = false;
  preprocess::PipelineOptions pipeline;
};

struct BuildReport {
  int samples = 0;
  int skipped_images = 0;
  int dropped_instances = 0;
  std::vector<std::string> warnings;
};

// One sample per image with at least one non-empty instance. Overlapping
// instances stay separate.
std::vector<Sample> build_samples(const std::vector<AnnotationRecord>& records,
                                  const std::filesystem::path& image_dir,
                                  const BuildOptions& options = {},
                                  BuildReport* report = nullptr);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

// Seeded Fisher-Yates permutation of 0..count-1, partitioned in order.
// Throws std::invalid_argument when the sizes exceed count.
SplitIndices split_indices(std::size_t count, std::size_t n_train, std::size_t n_val,
                           std::size_t n_test, std::uint64_t seed);

template <typename T>
struct Splits {
  std::vector<T> train;
  std::vector<T> val;
  std::vector<T> test;
};

template <typename T>
Splits<T> split(const std::vector<T>& items, std::size_t n_train, std::size_t n_val,
                std::size_t n_test, std::uint64_t seed) {
  const SplitIndices idx = split_indices(items.size(), n_train, n_val, n_test, seed);
  Splits<T> out;
  for (auto i : idx.train) out.train.push_back(items[i]);
  for (auto i : idx.val) out.val.push_back(items[i]);
  for (auto i : idx.test) out.test.push_back(items[i]);
  return out;
}

template <typename T>
struct Range {
  T lo;
  T hi;
  bool operator==(const Range&) const = default;
};

struct SyntheticConfig {
  int count = 64;
  int image_size = 64;
  Range<double> disk_radius{0.40, 0.46};      // fraction of image size
  Range<int> filaments{1, 3};
  Range<double> spine_length{0.35, 0.8};      // fraction of disk radius
  Range<double> curvature{-0.35, 0.35};       // control offset / spine length
  Range<double> spine_width{2.0, 4.0};        // pixels
  Range<int> barbs{1, 4};
  Range<double> barb_length{0.10, 0.20};      // fraction of disk radius
  Range<double> barb_angle{30.0, 70.0};       // degrees from the spine tangent
  double barb_width = 1.5;
  bool alternate_barb_sides = true;
  double limb_darkening = 0.5;
  double contrast = 0.3;                      // filament depth below the disk
  double noise_sigma = 0.02;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument for empty ranges or a contrast that could
  // push filament pixels below zero.
  void validate() const;
  bool operator==(const SyntheticConfig&) const = default;
};

nlohmann::json synthetic_to_json(const SyntheticConfig& config);
SyntheticConfig synthetic_from_json(const nlohmann::json& json);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Barb {
  Point start;
  Point end;
};

// Quadratic Bezier spine p0 -> p2 with control point p1.
struct FilamentGeometry {
  Point p0, p1, p2;
  double width = 0.0;
  std::vector<Barb> barbs;
};

Point bezier_point(const FilamentGeometry& f, double t);

struct SyntheticSample {
  std::string id;
  GrayImage image;       // rendered, with noise
  GrayImage clean;       // rendered, before noise
  GrayImage background;  // disk alone, before filaments and noise
  preprocess::DiskGeometry disk;
  std::vector<FilamentGeometry> filaments;
  MaskSet instances;     // one per filament, exactly its darkened pixels
};

std::vector<SyntheticSample> generate_synthetic(const SyntheticConfig& config);
Sample to_sample(const SyntheticSample& synthetic);

// Sample cache: images/<id>.png, masks/<id>_<k>.png and index.json.
struct IndexEntry {
  std::string id;
  std::string image;
  std::vector<std::string> instances;
};

void save_samples(const std::filesystem::path& dir, const std::vector<Sample>& samples,
                  const nlohmann::json& meta = nlohmann::json::object());
std::vector<IndexEntry> load_index(const std::filesystem::path& dir,
                                   nlohmann::json* meta = nullptr);
Sample load_sample(const std::filesystem::path& dir, const IndexEntry& entry);

}  // namespace edgeattnet::data

#endif  // EDGEATTNET_DATA_H_
