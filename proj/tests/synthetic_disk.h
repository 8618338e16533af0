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

#ifndef EDGEATTNET_TESTS_SYNTHETIC_DISK_H_
#define EDGEATTNET_TESTS_SYNTHETIC_DISK_H_

// Test-side renderer of limb-darkened disks with known geometry.

#include <cmath>
#include <random>

#include "edgeattnet/image.h"

namespace edgeattnet::testing {

struct DiskScene {
  int size = 256;
  double cx = 128.0;
  double cy = 128.0;
  double r = 100.0;
  double limb = 0.5;  // I(d) = 1 - limb * d inside the disk
  double noise = 0.0;
};

inline GrayImage render_disk(const DiskScene& s, std::mt19937_64* rng = nullptr) {
  GrayImage img(s.size, s.size);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int y = 0; y < s.size; ++y) {
    for (int x = 0; x < s.size; ++x) {
      const double d = std::hypot(x - s.cx, y - s.cy) / s.r;
      double v = d <= 1.0 ? 1.0 - s.limb * d : 0.0;
      if (s.noise > 0.0 && rng != nullptr) v += s.noise * gauss(*rng);
      img.at(x, y) = v;
    }
  }
  return img;
}

inline DiskScene random_scene(std::mt19937_64& rng, double max_noise = 0.02) {
  DiskScene s;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  s.r = 80.0 + 35.0 * u(rng);
  s.cx = s.r + 1.0 + (s.size - 3.0 - 2.0 * s.r) * u(rng);
  s.cy = s.r + 1.0 + (s.size - 3.0 - 2.0 * s.r) * u(rng);
  s.limb = 0.2 + 0.5 * u(rng);
  s.noise = max_noise * u(rng);
  return s;
}

// Coefficient of variation over the pixels selected by `mask`.
inline double coefficient_of_variation(const GrayImage& img, const BinaryMask& mask) {
  double sum = 0.0, sum2 = 0.0;
  double n = 0.0;
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    if (!mask.bits[i]) continue;
    sum += img.pixels[i];
    sum2 += img.pixels[i] * img.pixels[i];
    n += 1.0;
  }
  const double mean = sum / n;
  const double var = std::max(0.0, sum2 / n - mean * mean);
  return std::sqrt(var) / mean;
}

}  // namespace edgeattnet::testing

#endif  // EDGEATTNET_TESTS_SYNTHETIC_DISK_H_
