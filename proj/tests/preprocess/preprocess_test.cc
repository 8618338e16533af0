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

#include "edgeattnet/preprocess.h"

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "synthetic_disk.h"

namespace edgeattnet::preprocess {
namespace {

using testing::coefficient_of_variation;
using testing::DiskScene;
using testing::render_disk;

TEST(NormalizeTest, LinearRescale) {
  GrayImage img(3, 1);
  img.pixels = {0.0, 127.5, 255.0};
  EXPECT_EQ(normalize(img).pixels, (std::vector<double>{0.0, 0.5, 1.0}));
}

TEST(NormalizeTest, ConstantImageMapsToZero) {
  const GrayImage out = normalize(GrayImage(4, 3, 7.0));
  for (double v : out.pixels) EXPECT_EQ(v, 0.0);
}

TEST(NormalizeTest, Idempotent) {
  std::mt19937_64 rng(1);
  GrayImage img(9, 7);
  for (double& v : img.pixels) v = std::uniform_real_distribution<double>(-3, 40)(rng);
  const GrayImage once = normalize(img);
  EXPECT_EQ(normalize(once), once);
}

TEST(DetectDiskTest, CenteredDisk) {
  DiskScene s;
  s.limb = 0.0;
  const auto g = detect_disk(render_disk(s));
  EXPECT_NEAR(g.cx, 128.0, 2.0);
  EXPECT_NEAR(g.cy, 128.0, 2.0);
  EXPECT_NEAR(g.r, 100.0, 2.0);
}

TEST(DetectDiskTest, ShiftedDisk) {
  DiskScene s;
  s.limb = 0.0;
  s.cx = 100.0;
  s.cy = 140.0;
  const auto g = detect_disk(render_disk(s));
  EXPECT_NEAR(g.cx, 100.0, 2.0);
  EXPECT_NEAR(g.cy, 140.0, 2.0);
  EXPECT_NEAR(g.r, 100.0, 2.0);
}

TEST(DetectDiskTest, LargeImageIsDownsampled) {
  DiskScene s;
  s.size = 1100;
  s.cx = 560.0;
  s.cy = 530.0;
  s.r = 480.0;
  const auto g = detect_disk(render_disk(s));
  EXPECT_NEAR(g.cx, 560.0, 4.0);
  EXPECT_NEAR(g.cy, 530.0, 4.0);
  EXPECT_NEAR(g.r, 480.0, 4.0);
}

TEST(DetectDiskTest, AllZeroImageHasNoDisk) {
  EXPECT_THROW(detect_disk(GrayImage(64, 64)), DiskNotFound);
}

TEST(DiskMaskTest, CenterInsideFarPixelOutside) {
  const DiskGeometry g{128, 128, 100};
  const auto mask = make_disk_mask(256, 256, g);
  EXPECT_EQ(mask.at(128, 128), 1);
  EXPECT_EQ(mask.at(128 + 150, 128), 0);
  EXPECT_EQ(make_disk_mask(400, 400, g).at(128 + 150, 128), 0);
}

TEST(DiskMaskTest, AreaMatchesAnalyticCircle) {
  const DiskGeometry g{128, 128, 100};
  const double expected = std::numbers::pi * std::pow(100 * 0.99, 2);
  EXPECT_NEAR(static_cast<double>(make_disk_mask(256, 256, g).count()), expected,
              0.02 * expected);
}

TEST(RadialFlattenTest, RemovesLinearLimbDarkening) {
  DiskScene s;
  const GrayImage img = render_disk(s);
  const DiskGeometry g{s.cx, s.cy, s.r};
  const auto mask = make_disk_mask(256, 256, g);
  const double before = coefficient_of_variation(img, mask);
  const double after = coefficient_of_variation(radial_flatten(img, g), mask);
  EXPECT_LE(after, 0.2 * before);
}

TEST(RadialFlattenTest, ConstantDiskStaysConstant) {
  DiskScene s;
  s.limb = 0.0;
  const DiskGeometry g{s.cx, s.cy, s.r};
  const GrayImage out = radial_flatten(render_disk(s), g);
  EXPECT_LT(coefficient_of_variation(out, make_disk_mask(256, 256, g)), 1e-6);
}

TEST(RadialFlattenTest, ReducesVariationForAnyMonotoneBackground) {
  for (double limb : {0.1, 0.3, 0.8}) {
    DiskScene s;
    s.limb = limb;
    const GrayImage img = render_disk(s);
    const DiskGeometry g{s.cx, s.cy, s.r};
    const auto mask = make_disk_mask(256, 256, g);
    EXPECT_LT(coefficient_of_variation(radial_flatten(img, g), mask),
              coefficient_of_variation(img, mask))
        << limb;
  }
}

TEST(RadialFlattenTest, OffDiskPixelsUnchanged) {
  DiskScene s;
  GrayImage img = render_disk(s);
  img.at(2, 2) = 0.3;
  const GrayImage out = radial_flatten(img, {s.cx, s.cy, s.r});
  EXPECT_EQ(out.at(2, 2), 0.3);
  EXPECT_EQ(out.at(255, 0), 0.0);
}

// Mean over the band of pixels within 6 px above and below a horizontal
// stripe, minus the mean over the stripe itself.
double stripe_contrast(const GrayImage& img, int y0, int y1, int x0, int x1) {
  double band = 0.0, stripe = 0.0;
  int nb = 0, ns = 0;
  for (int y = y0 - 6; y < y1 + 6; ++y) {
    for (int x = x0; x < x1; ++x) {
      if (y >= y0 && y < y1) {
        stripe += img.at(x, y);
        ++ns;
      } else {
        band += img.at(x, y);
        ++nb;
      }
    }
  }
  return band / nb - stripe / ns;
}

TEST(RadialFlattenTest, PreservesStripeContrast) {
  DiskScene s;
  GrayImage img = render_disk(s);
  const int y0 = 126, y1 = 130, x0 = 78, x1 = 178;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) img.at(x, y) -= 0.15;
  }
  const double before = stripe_contrast(img, y0, y1, x0, x1);
  const double after = stripe_contrast(radial_flatten(img, {s.cx, s.cy, s.r}), y0, y1, x0, x1);
  EXPECT_NEAR(after, before, 0.2 * before);
}

TEST(GaussianTest, KernelSumsToOne) {
  const auto k = gaussian_kernel3(0.7);
  double s = 0.0;
  for (double v : k) s += v;
  EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(GaussianTest, ConstantImageUnchanged) {
  const GrayImage out = gaussian_blur(GrayImage(6, 5, 0.37));
  for (double v : out.pixels) EXPECT_NEAR(v, 0.37, 1e-15);
}

TEST(GaussianTest, ImpulseResponseCenterWeight) {
  GrayImage img(5, 5);
  img.at(2, 2) = 1.0;
  const double s2 = 2 * 0.49;
  const double center = 1.0 / (1.0 + 4 * std::exp(-1.0 / s2) + 4 * std::exp(-2.0 / s2));
  const GrayImage out = gaussian_blur(img);
  EXPECT_NEAR(out.at(2, 2), center, 1e-15);
  EXPECT_NEAR(out.at(1, 2), center * std::exp(-1.0 / s2), 1e-15);
  EXPECT_NEAR(out.at(1, 1), center * std::exp(-2.0 / s2), 1e-15);
}

TEST(GaussianTest, MirroredBorder) {
  GrayImage img(3, 1);
  img.pixels = {1.0, 0.0, 0.0};
  const auto k = gaussian_kernel3(0.7);
  // Left neighbour of x = 0 mirrors to x = 1; rows mirror onto themselves.
  const double col_left = k[0] + k[3] + k[6];
  const double col_mid = k[1] + k[4] + k[7];
  const double col_right = k[2] + k[5] + k[8];
  EXPECT_NEAR(gaussian_blur(img).at(0, 0), col_mid, 1e-15);
  EXPECT_NEAR(gaussian_blur(img).at(1, 0), col_left, 1e-15);
  (void)col_right;
}

TEST(ClaheTest, ConstantRegionStaysWithinTwoBins) {
  GrayImage img(32, 32, 0.0);
  BinaryMask mask(32, 32);
  for (int y = 4; y < 28; ++y) {
    for (int x = 4; x < 28; ++x) {
      img.at(x, y) = 0.4321;
      mask.at(x, y) = 1;
    }
  }
  const GrayImage out = clahe(img, mask, {2.0, 4, 4, 256});
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    if (mask.bits[i]) {
      EXPECT_NEAR(out.pixels[i], 0.4321, 2.0 / 256);
    } else {
      EXPECT_EQ(out.pixels[i], 0.0);
    }
  }
}

TEST(ClaheTest, OutputStaysInUnitRange) {
  std::mt19937_64 rng(3);
  GrayImage img(40, 30);
  for (double& v : img.pixels) v = std::uniform_real_distribution<double>(0, 1)(rng);
  BinaryMask mask(40, 30);
  for (auto& b : mask.bits) b = 1;
  for (double v : clahe(img, mask).pixels) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

// Single-tile equalization computed directly from the definition: clip each
// bin at clip * n / bins, spread the excess evenly over all bins, and map a
// value through the piecewise-linear cumulative histogram.
double single_tile_oracle(const std::vector<double>& values, double v, double clip, int bins) {
  std::vector<double> h(bins, 0.0);
  for (double x : values) h[std::min(bins - 1, static_cast<int>(x * bins))] += 1.0;
  const double n = static_cast<double>(values.size());
  const double limit = clip * n / bins;
  double excess = 0.0;
  for (double& c : h) {
    excess += std::max(0.0, c - limit);
    c = std::min(c, limit);
  }
  for (double& c : h) c += excess / bins;
  const int b = std::min(bins - 1, static_cast<int>(v * bins));
  double below = 0.0;
  for (int i = 0; i < b; ++i) below += h[i];
  return (below + (v * bins - b) * h[b]) / n;
}

TEST(ClaheTest, LowContrastRampIsStretched) {
  GrayImage img(64, 64);
  BinaryMask mask(64, 64);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      img.at(x, y) = 0.4 + 0.2 * (y * 64 + x) / (64.0 * 64.0 - 1.0);
      mask.at(x, y) = 1;
    }
  }
  const GrayImage out = clahe(img, mask, {4.0, 1, 1, 256});
  const auto [lo, hi] = std::minmax_element(out.pixels.begin(), out.pixels.end());
  EXPECT_LE(*lo, 0.1);
  EXPECT_GE(*hi, 0.9);
  for (int i : {0, 1000, 2048, 4095}) {
    EXPECT_NEAR(out.pixels[i], single_tile_oracle(img.pixels, img.pixels[i], 4.0, 256), 1e-12);
  }
}

TEST(PipelineTest, OffDiskZeroOnDiskInRange) {
  std::mt19937_64 rng(5);
  DiskScene s;
  s.noise = 0.02;
  const auto result = run_pipeline(render_disk(s, &rng));
  for (std::size_t i = 0; i < result.image.pixels.size(); ++i) {
    if (result.mask.bits[i]) {
      EXPECT_GE(result.image.pixels[i], 0.0);
      EXPECT_LE(result.image.pixels[i], 1.0);
    } else {
      EXPECT_EQ(result.image.pixels[i], 0.0);
    }
  }
}

TEST(PipelineTest, FilamentsStayDarkest) {
  std::mt19937_64 rng(6);
  DiskScene s;
  s.noise = 0.01;
  GrayImage img = render_disk(s, &rng);
  BinaryMask filament(256, 256);
  for (int y = 100; y < 104; ++y) {
    for (int x = 90; x < 170; ++x) {
      img.at(x, y) *= 0.6;
      filament.at(x, y) = 1;
    }
  }
  for (int y = 150; y < 190; ++y) {
    for (int x = 150; x < 153; ++x) {
      img.at(x, y) *= 0.6;
      filament.at(x, y) = 1;
    }
  }
  const auto result = run_pipeline(img);
  double fil = 0.0, disk = 0.0;
  int nf = 0, nd = 0;
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    if (!result.mask.bits[i]) continue;
    if (filament.bits[i]) {
      fil += result.image.pixels[i];
      ++nf;
    } else {
      disk += result.image.pixels[i];
      ++nd;
    }
  }
  EXPECT_LT(fil / nf, disk / nd);
}

TEST(PipelineTest, Deterministic) {
  std::mt19937_64 rng(7);
  DiskScene s;
  s.noise = 0.02;
  const GrayImage img = render_disk(s, &rng);
  EXPECT_EQ(run_pipeline(img).image, run_pipeline(img).image);
}

TEST(PipelineTest, PropagatesDiskNotFound) {
  EXPECT_THROW(run_pipeline(GrayImage(64, 64, 0.5)), DiskNotFound);
}

}  // namespace
}  // namespace edgeattnet::preprocess
