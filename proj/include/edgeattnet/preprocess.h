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

#ifndef EDGEATTNET_PREPROCESS_H_
#define EDGEATTNET_PREPROCESS_H_

#include <array>
#include <stdexcept>
#include <vector>

#include "edgeattnet/image.h"

namespace edgeattnet::preprocess {

// Disk center in pixel coordinates and radius in pixels.
struct DiskGeometry {
  double cx = 0.0;
  double cy = 0.0;
  double r = 0.0;
};

class DiskNotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Linear rescale of [min, max] to [0, 1]; a constant image maps to zeros.
GrayImage normalize(const GrayImage& img);

struct HoughOptions {
  double min_radius_fraction = 0.30;  // of min(width, height)
  double max_radius_fraction = 0.55;
  double edge_percentile = 0.90;      // Sobel magnitude threshold
  int smoothing_passes = 2;           // 3 x 3 Gaussian passes before Sobel
  // Fraction of the best circle's circumference that must carry edge pixels.
  double min_coverage = 0.6;
  // Larger images are box-downsampled by an integer factor before voting.
  int max_working_size = 512;
};

// Gradient-directed circle Hough transform for one bright disk on a dark
// background. Throws DiskNotFound when no circle collects enough votes.
DiskGeometry detect_disk(const GrayImage& img, const HoughOptions& options = {});

// Pixels whose center lies within r * (1 - shrink) of the disk center.
BinaryMask make_disk_mask(int width, int height, const DiskGeometry& geom,
                          double shrink = 0.01);

struct RadialProfile {
  std::vector<double> bin_edges;       // n_bins + 1 normalized radii in [0, 1]
  std::vector<double> mean_intensity;  // per bin, empty bins interpolated
  std::vector<double> smoothed;        // moving average of mean_intensity
};

struct FlattenOptions {
  int n_bins = 64;
  int smoothing_window = 5;
  double shrink = 0.01;
};

RadialProfile radial_profile(const GrayImage& img, const DiskGeometry& geom,
                             const FlattenOptions& options = {});

// Smoothed background at normalized radius d, linear between bin centers.
double background_at(const RadialProfile& profile, double d);

// Divides each on-disk pixel by the radial background and rescales the disk
// so its brightest pixel is 1. Off-disk pixels are returned unchanged.
GrayImage radial_flatten(const GrayImage& img, const DiskGeometry& geom,
                         const FlattenOptions& options = {});

// Normalized 3 x 3 sampled Gaussian, row-major.
std::array<double, 9> gaussian_kernel3(double sigma);
// 3 x 3 Gaussian smoothing with mirrored borders (edge pixel not repeated).
GrayImage gaussian_blur(const GrayImage& img, double sigma = 0.7);

struct ClaheOptions {
  double clip_limit = 2.0;  // multiple of the uniform bin height
  int tiles_x = 8;
  int tiles_y = 8;
  int bins = 256;
};

// Contrast-limited adaptive histogram equalization over the pixels selected
// by `mask`; unselected pixels are left untouched.
GrayImage clahe(const GrayImage& img, const BinaryMask& mask,
                const ClaheOptions& options = {});

struct PipelineOptions {
  HoughOptions hough;
  FlattenOptions flatten;
  double blur_sigma = 0.7;
  ClaheOptions clahe;
};

struct PipelineResult {
  GrayImage image;
  DiskGeometry disk;
  BinaryMask mask;
};

// normalize -> detect_disk -> mask -> radial_flatten -> gaussian_blur ->
// clahe -> zero everything off the disk.
PipelineResult run_pipeline(const GrayImage& img, const PipelineOptions& options = {});

}  // namespace edgeattnet::preprocess

#endif  // EDGEATTNET_PREPROCESS_H_
