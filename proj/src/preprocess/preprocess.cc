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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

namespace edgeattnet::preprocess {

GrayImage normalize(const GrayImage& img) {
  GrayImage out(img.width, img.height);
  if (img.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(img.pixels.begin(), img.pixels.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  if (range <= 0.0) return out;
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    out.pixels[i] = std::clamp((img.pixels[i] - lo) / range, 0.0, 1.0);
  }
  return out;
}

namespace {

GrayImage box_downsample(const GrayImage& img, int factor) {
  const int w = (img.width + factor - 1) / factor;
  const int h = (img.height + factor - 1) / factor;
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double sum = 0.0;
      int n = 0;
      for (int yy = y * factor; yy < std::min(img.height, (y + 1) * factor); ++yy) {
        for (int xx = x * factor; xx < std::min(img.width, (x + 1) * factor); ++xx) {
          sum += img.at(xx, yy);
          ++n;
        }
      }
      out.at(x, y) = sum / n;
    }
  }
  return out;
}

}  // namespace

DiskGeometry detect_disk(const GrayImage& input, const HoughOptions& options) {
  if (input.empty()) throw DiskNotFound("disk not found: empty image");
  const int factor =
      std::max(1, (std::max(input.width, input.height) + options.max_working_size - 1) /
                      options.max_working_size);
  // Smoothing first makes gradient directions accurate enough for voting
  // along them over a full disk radius.
  GrayImage img = factor > 1 ? box_downsample(input, factor) : input;
  for (int pass = 0; pass < options.smoothing_passes; ++pass) img = gaussian_blur(img, 1.0);
  const int w = img.width;
  const int h = img.height;
  auto px = [&](int x, int y) {
    return img.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1));
  };

  std::vector<double> gx(img.pixels.size()), gy(img.pixels.size()), mag(img.pixels.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      gx[i] = (px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1)) -
              (px(x - 1, y - 1) + 2 * px(x - 1, y) + px(x - 1, y + 1));
      gy[i] = (px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1)) -
              (px(x - 1, y - 1) + 2 * px(x, y - 1) + px(x + 1, y - 1));
      mag[i] = std::hypot(gx[i], gy[i]);
    }
  }
  std::vector<double> sorted = mag;
  const auto k = static_cast<std::size_t>(options.edge_percentile *
                                          static_cast<double>(sorted.size() - 1));
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
  const double threshold = sorted[k];

  const int min_side = std::min(w, h);
  const int r_lo = std::max(1, static_cast<int>(std::ceil(options.min_radius_fraction * min_side)));
  const int r_hi = static_cast<int>(std::floor(options.max_radius_fraction * min_side));
  if (r_hi < r_lo) throw DiskNotFound("disk not found: image too small");
  const int n_r = r_hi - r_lo + 1;
  const std::size_t plane = static_cast<std::size_t>(w) * h;
  // Votes are weighted by gradient magnitude so the faint radial gradient of
  // limb darkening inside the disk cannot outvote the limb itself.
  std::vector<float> acc(plane * n_r, 0.0f);

  std::vector<std::size_t> edges;
  for (std::size_t i = 0; i < mag.size(); ++i) {
    if (mag[i] > threshold && mag[i] > 0.0) edges.push_back(i);
  }
  if (edges.empty()) throw DiskNotFound("disk not found: no edge pixels");
  for (std::size_t i : edges) {
    const int x = static_cast<int>(i % w);
    const int y = static_cast<int>(i / w);
    // The gradient of a bright disk points inward, towards the center.
    const double ux = gx[i] / mag[i];
    const double uy = gy[i] / mag[i];
    for (int ri = 0; ri < n_r; ++ri) {
      const double r = r_lo + ri;
      const long cx = std::lround(x + r * ux);
      const long cy = std::lround(y + r * uy);
      if (cx < 0 || cy < 0 || cx >= w || cy >= h) continue;
      acc[ri * plane + static_cast<std::size_t>(cy) * w + cx] += static_cast<float>(mag[i]);
    }
  }

  const std::size_t best =
      static_cast<std::size_t>(std::max_element(acc.begin(), acc.end()) - acc.begin());
  const int best_r = static_cast<int>(best / plane) + r_lo;
  const int best_y = static_cast<int>((best % plane) / w);
  const int best_x = static_cast<int>(best % w);
  // Vote-weighted centroid of the 3 x 3 x 3 neighbourhood of the peak.
  double sw = 0.0, sx = 0.0, sy = 0.0, sr = 0.0;
  for (int dr = -1; dr <= 1; ++dr) {
    const int ri = best_r - r_lo + dr;
    if (ri < 0 || ri >= n_r) continue;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int x = best_x + dx;
        const int y = best_y + dy;
        if (x < 0 || y < 0 || x >= w || y >= h) continue;
        const double v = acc[ri * plane + static_cast<std::size_t>(y) * w + x];
        sw += v;
        sx += v * x;
        sy += v * y;
        sr += v * (r_lo + ri);
      }
    }
  }
  if (!(sw > 0.0)) throw DiskNotFound("disk not found: empty accumulator");
  const double fx = sx / sw, fy = sy / sw, fr = sr / sw;

  // Accept the circle only if edge pixels lie along most of it: count the
  // one-degree sectors holding an edge pixel within 1.5 px of the circle.
  std::vector<char> sector(360, 0);
  for (std::size_t i : edges) {
    const double dx = static_cast<double>(i % w) - fx;
    const double dy = static_cast<double>(i / w) - fy;
    if (std::abs(std::hypot(dx, dy) - fr) > 1.5) continue;
    const double deg = std::atan2(dy, dx) * 180.0 / std::numbers::pi + 180.0;
    sector[std::min(359, static_cast<int>(deg))] = 1;
  }
  const int covered = static_cast<int>(std::count(sector.begin(), sector.end(), 1));
  if (covered < options.min_coverage * 360.0) {
    throw DiskNotFound("disk not found: best circle is supported on " +
                       std::to_string(covered) + " of 360 degrees");
  }
  DiskGeometry g{fx, fy, fr};
  if (factor > 1) {
    g.cx = (g.cx + 0.5) * factor - 0.5;
    g.cy = (g.cy + 0.5) * factor - 0.5;
    g.r *= factor;
  }
  return g;
}

BinaryMask make_disk_mask(int width, int height, const DiskGeometry& geom, double shrink) {
  BinaryMask mask(width, height);
  const double limit = geom.r * (1.0 - shrink);
  const double limit2 = limit * limit;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double dx = x - geom.cx;
      const double dy = y - geom.cy;
      mask.at(x, y) = dx * dx + dy * dy <= limit2;
    }
  }
  return mask;
}

RadialProfile radial_profile(const GrayImage& img, const DiskGeometry& geom,
                             const FlattenOptions& options) {
  const int n = options.n_bins;
  if (n < 2) throw std::invalid_argument("radial_profile: need at least 2 bins");
  RadialProfile profile;
  profile.bin_edges.resize(n + 1);
  for (int i = 0; i <= n; ++i) profile.bin_edges[i] = static_cast<double>(i) / n;

  std::vector<double> sum(n, 0.0);
  std::vector<std::int64_t> count(n, 0);
  const BinaryMask mask = make_disk_mask(img.width, img.height, geom, options.shrink);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (!mask.at(x, y)) continue;
      const double d = std::hypot(x - geom.cx, y - geom.cy) / geom.r;
      const int b = std::min(n - 1, static_cast<int>(d * n));
      sum[b] += img.at(x, y);
      ++count[b];
    }
  }
  std::vector<int> filled;
  for (int b = 0; b < n; ++b) {
    if (count[b] > 0) filled.push_back(b);
  }
  if (filled.empty()) throw std::invalid_argument("radial_profile: disk contains no pixels");

  // Empty bins are interpolated linearly between the nearest filled
  // neighbours and held constant beyond the outermost ones.
  profile.mean_intensity.resize(n);
  std::size_t next = 0;
  for (int b = 0; b < n; ++b) {
    while (next < filled.size() && filled[next] < b) ++next;
    if (next < filled.size() && filled[next] == b) {
      profile.mean_intensity[b] = sum[b] / static_cast<double>(count[b]);
    } else if (next == 0) {
      const int f = filled.front();
      profile.mean_intensity[b] = sum[f] / static_cast<double>(count[f]);
    } else if (next == filled.size()) {
      const int f = filled.back();
      profile.mean_intensity[b] = sum[f] / static_cast<double>(count[f]);
    } else {
      const int l = filled[next - 1];
      const int r = filled[next];
      const double t = static_cast<double>(b - l) / (r - l);
      profile.mean_intensity[b] = (1 - t) * sum[l] / static_cast<double>(count[l]) +
                                  t * sum[r] / static_cast<double>(count[r]);
    }
  }

  // Centered moving average; the window shrinks symmetrically at both ends.
  const int half = options.smoothing_window / 2;
  profile.smoothed.resize(n);
  for (int b = 0; b < n; ++b) {
    const int k = std::min({half, b, n - 1 - b});
    double s = 0.0;
    for (int j = b - k; j <= b + k; ++j) s += profile.mean_intensity[j];
    profile.smoothed[b] = s / (2 * k + 1);
  }
  return profile;
}

double background_at(const RadialProfile& profile, double d) {
  const auto& s = profile.smoothed;
  const int n = static_cast<int>(s.size());
  if (n == 1) return s[0];
  const double pos = d * n - 0.5;  // fractional index between bin centers
  const int i = std::clamp(static_cast<int>(std::floor(pos)), 0, n - 2);
  const double t = pos - i;
  return s[i] + t * (s[i + 1] - s[i]);
}

GrayImage radial_flatten(const GrayImage& img, const DiskGeometry& geom,
                         const FlattenOptions& options) {
  const RadialProfile profile = radial_profile(img, geom, options);
  const BinaryMask mask = make_disk_mask(img.width, img.height, geom, options.shrink);
  GrayImage out = img;
  double peak = 0.0;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (!mask.at(x, y)) continue;
      const double d = std::hypot(x - geom.cx, y - geom.cy) / geom.r;
      const double bg = std::max(background_at(profile, d), 1e-6);
      out.at(x, y) = std::max(img.at(x, y), 0.0) / bg;
      peak = std::max(peak, out.at(x, y));
    }
  }
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    if (!mask.bits[i]) continue;
    out.pixels[i] = peak > 0.0 ? std::clamp(out.pixels[i] / peak, 0.0, 1.0) : 0.0;
  }
  return out;
}

std::array<double, 9> gaussian_kernel3(double sigma) {
  std::array<double, 9> k{};
  double total = 0.0;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      k[(dy + 1) * 3 + dx + 1] = v;
      total += v;
    }
  }
  for (double& v : k) v /= total;
  return k;
}

namespace {

int reflect101(int i, int n) {
  if (n == 1) return 0;
  if (i < 0) return -i;
  if (i >= n) return 2 * n - 2 - i;
  return i;
}

}  // namespace

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  const auto k = gaussian_kernel3(sigma);
  GrayImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double s = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          s += k[(dy + 1) * 3 + dx + 1] *
               img.at(reflect101(x + dx, img.width), reflect101(y + dy, img.height));
        }
      }
      out.at(x, y) = s;
    }
  }
  return out;
}

namespace {

// Clipped, redistributed histogram of one tile, stored as a cumulative table
// so the mapping is continuous and piecewise linear in the input value.
struct TileMapping {
  std::vector<double> cumulative;  // bins + 1 entries, normalized to [0, 1]

  double operator()(double v) const {
    if (cumulative.empty()) return v;
    const int bins = static_cast<int>(cumulative.size()) - 1;
    const double pos = std::clamp(v, 0.0, 1.0) * bins;
    const int b = std::min(bins - 1, static_cast<int>(pos));
    const double f = pos - b;
    return cumulative[b] + f * (cumulative[b + 1] - cumulative[b]);
  }
};

TileMapping build_mapping(const std::vector<double>& hist, double n, double clip_limit) {
  TileMapping m;
  if (n <= 0.0) return m;
  const int bins = static_cast<int>(hist.size());
  const double limit = clip_limit * n / bins;
  std::vector<double> h = hist;
  double excess = 0.0;
  for (double& c : h) {
    if (c > limit) {
      excess += c - limit;
      c = limit;
    }
  }
  const double share = excess / bins;
  m.cumulative.assign(bins + 1, 0.0);
  for (int b = 0; b < bins; ++b) m.cumulative[b + 1] = m.cumulative[b] + h[b] + share;
  const double total = m.cumulative[bins];
  for (double& c : m.cumulative) c /= total;
  return m;
}

}  // namespace

GrayImage clahe(const GrayImage& img, const BinaryMask& mask, const ClaheOptions& options) {
  if (mask.width != img.width || mask.height != img.height) {
    throw std::invalid_argument("clahe: mask size differs from image size");
  }
  const int tx = std::max(1, std::min(options.tiles_x, img.width));
  const int ty = std::max(1, std::min(options.tiles_y, img.height));
  const int bins = options.bins;
  auto tile_of = [](int p, int extent, int tiles) {
    return std::min(tiles - 1, static_cast<int>(static_cast<std::int64_t>(p) * tiles / extent));
  };
  std::vector<std::vector<double>> hist(static_cast<std::size_t>(tx) * ty,
                                        std::vector<double>(bins, 0.0));
  std::vector<double> counts(static_cast<std::size_t>(tx) * ty, 0.0);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (!mask.at(x, y)) continue;
      const std::size_t t = static_cast<std::size_t>(tile_of(y, img.height, ty)) * tx +
                            tile_of(x, img.width, tx);
      const double v = std::clamp(img.at(x, y), 0.0, 1.0);
      hist[t][std::min(bins - 1, static_cast<int>(v * bins))] += 1.0;
      counts[t] += 1.0;
    }
  }
  std::vector<TileMapping> maps(hist.size());
  for (std::size_t t = 0; t < hist.size(); ++t) {
    maps[t] = build_mapping(hist[t], counts[t], options.clip_limit);
  }

  // Bilinear blend between the mappings of the four nearest tile centers.
  auto coord = [](int p, int extent, int tiles, int& t0, int& t1, double& a) {
    const double g = (p + 0.5) * tiles / extent - 0.5;
    t0 = static_cast<int>(std::floor(g));
    a = g - t0;
    if (t0 < 0) {
      t0 = 0;
      a = 0.0;
    } else if (t0 >= tiles - 1) {
      t0 = tiles - 1;
      a = 0.0;
    }
    t1 = std::min(t0 + 1, tiles - 1);
  };
  GrayImage out = img;
  for (int y = 0; y < img.height; ++y) {
    int y0, y1;
    double ay;
    coord(y, img.height, ty, y0, y1, ay);
    for (int x = 0; x < img.width; ++x) {
      if (!mask.at(x, y)) continue;
      int x0, x1;
      double ax;
      coord(x, img.width, tx, x0, x1, ax);
      const double v = img.at(x, y);
      const double top = (1 - ax) * maps[y0 * tx + x0](v) + ax * maps[y0 * tx + x1](v);
      const double bottom = (1 - ax) * maps[y1 * tx + x0](v) + ax * maps[y1 * tx + x1](v);
      out.at(x, y) = std::clamp((1 - ay) * top + ay * bottom, 0.0, 1.0);
    }
  }
  return out;
}

PipelineResult run_pipeline(const GrayImage& img, const PipelineOptions& options) {
  PipelineResult result;
  const GrayImage normalized = normalize(img);
  result.disk = detect_disk(normalized, options.hough);
  result.mask = make_disk_mask(img.width, img.height, result.disk, options.flatten.shrink);
  GrayImage x = radial_flatten(normalized, result.disk, options.flatten);
  x = gaussian_blur(x, options.blur_sigma);
  x = clahe(x, result.mask, options.clahe);
  for (std::size_t i = 0; i < x.pixels.size(); ++i) {
    x.pixels[i] = result.mask.bits[i] ? std::clamp(x.pixels[i], 0.0, 1.0) : 0.0;
  }
  result.image = std::move(x);
  return result;
}

}  // namespace edgeattnet::preprocess
