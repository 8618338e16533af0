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
#include <cstdio>
#include <numbers>
#include <random>
#include <stdexcept>

#include "edgeattnet/data.h"

namespace edgeattnet::data {
namespace {

template <typename T>
void check_range(const Range<T>& r, const char* name, T min_allowed) {
  if (r.lo > r.hi) throw std::invalid_argument(std::string("synthetic: empty range ") + name);
  if (r.lo < min_allowed) {
    throw std::invalid_argument(std::string("synthetic: range ") + name + " below minimum");
  }
}

double uniform(std::mt19937_64& rng, const Range<double>& r) {
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

int uniform(std::mt19937_64& rng, const Range<int>& r) {
  return std::uniform_int_distribution<int>(r.lo, r.hi)(rng);
}

double dist(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

double segment_distance(Point p, Point a, Point b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

// Sets pixels of `mask` whose centers lie within `half_width` of the
// polyline and strictly inside `limit` pixels of the disk center.
void draw_polyline(BinaryMask& mask, const std::vector<Point>& line, double half_width,
                   Point center, double limit) {
  double x0 = line[0].x, x1 = line[0].x, y0 = line[0].y, y1 = line[0].y;
  for (const Point& p : line) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  const int xa = std::max(0, static_cast<int>(std::floor(x0 - half_width)));
  const int xb = std::min(mask.width - 1, static_cast<int>(std::ceil(x1 + half_width)));
  const int ya = std::max(0, static_cast<int>(std::floor(y0 - half_width)));
  const int yb = std::min(mask.height - 1, static_cast<int>(std::ceil(y1 + half_width)));
  for (int y = ya; y <= yb; ++y) {
    for (int x = xa; x <= xb; ++x) {
      const Point p{static_cast<double>(x), static_cast<double>(y)};
      if (dist(p, center) >= limit) continue;
      for (std::size_t i = 0; i + 1 < line.size(); ++i) {
        if (segment_distance(p, line[i], line[i + 1]) <= half_width) {
          mask.at(x, y) = 1;
          break;
        }
      }
    }
  }
}

constexpr int kSpineSegments = 64;

FilamentGeometry place_filament(std::mt19937_64& rng, const SyntheticConfig& cfg,
                                Point c, double r) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  FilamentGeometry f;
  for (int attempt = 0;; ++attempt) {
    const double rho = 0.75 * r * std::sqrt(unit(rng));
    const double alpha = 2 * std::numbers::pi * unit(rng);
    const double phi = 2 * std::numbers::pi * unit(rng);
    // Shrink the spine when placement keeps failing near the limb.
    const double length = uniform(rng, cfg.spine_length) * r * (attempt < 100 ? 1.0 : 0.5);
    const double bend = uniform(rng, cfg.curvature);
    f.p0 = {c.x + rho * std::cos(alpha), c.y + rho * std::sin(alpha)};
    f.p2 = {f.p0.x + length * std::cos(phi), f.p0.y + length * std::sin(phi)};
    f.p1 = {(f.p0.x + f.p2.x) / 2 - bend * length * std::sin(phi),
            (f.p0.y + f.p2.y) / 2 + bend * length * std::cos(phi)};
    // The curve stays inside the hull of its control points.
    if ((dist(f.p2, c) <= 0.75 * r && dist(f.p1, c) <= 0.8 * r) || attempt >= 400) break;
  }
  f.width = uniform(rng, cfg.spine_width);

  const int n_barbs = uniform(rng, cfg.barbs);
  std::vector<double> ts(n_barbs);
  for (double& t : ts) t = 0.15 + 0.7 * unit(rng);
  std::sort(ts.begin(), ts.end());
  for (int k = 0; k < n_barbs; ++k) {
    const double t = ts[k];
    const Point start = bezier_point(f, t);
    double tx = 2 * (1 - t) * (f.p1.x - f.p0.x) + 2 * t * (f.p2.x - f.p1.x);
    double ty = 2 * (1 - t) * (f.p1.y - f.p0.y) + 2 * t * (f.p2.y - f.p1.y);
    const double norm = std::hypot(tx, ty);
    tx /= norm;
    ty /= norm;
    const double side = cfg.alternate_barb_sides && k % 2 == 1 ? -1.0 : 1.0;
    const double theta = side * uniform(rng, cfg.barb_angle) * std::numbers::pi / 180.0;
    const double length = uniform(rng, cfg.barb_length) * r;
    const double bx = tx * std::cos(theta) - ty * std::sin(theta);
    const double by = tx * std::sin(theta) + ty * std::cos(theta);
    f.barbs.push_back({start, {start.x + length * bx, start.y + length * by}});
  }
  return f;
}

}  // namespace

void SyntheticConfig::validate() const {
  if (count < 0) throw std::invalid_argument("synthetic: negative count");
  if (image_size < 8) throw std::invalid_argument("synthetic: image size below 8");
  check_range(disk_radius, "disk_radius", 0.05);
  if (disk_radius.hi > 0.48) throw std::invalid_argument("synthetic: disk exceeds the image");
  check_range(filaments, "filaments", 1);
  check_range(spine_length, "spine_length", 0.0);
  check_range(curvature, "curvature", -1.0);
  check_range(spine_width, "spine_width", 0.5);
  check_range(barbs, "barbs", 0);
  check_range(barb_length, "barb_length", 0.0);
  check_range(barb_angle, "barb_angle", 0.0);
  if (barb_width <= 0) throw std::invalid_argument("synthetic: barb width must be positive");
  if (limb_darkening < 0 || limb_darkening >= 1) {
    throw std::invalid_argument("synthetic: limb darkening must lie in [0, 1)");
  }
  if (contrast <= 0 || contrast >= 1 - limb_darkening) {
    throw std::invalid_argument("synthetic: contrast must lie in (0, 1 - limb_darkening)");
  }
  if (noise_sigma < 0) throw std::invalid_argument("synthetic: negative noise");
}

nlohmann::json synthetic_to_json(const SyntheticConfig& c) {
  auto range = [](const auto& r) { return nlohmann::json::array({r.lo, r.hi}); };
  return {{"count", c.count},
          {"image_size", c.image_size},
          {"disk_radius", range(c.disk_radius)},
          {"filaments", range(c.filaments)},
          {"spine_length", range(c.spine_length)},
          {"curvature", range(c.curvature)},
          {"spine_width", range(c.spine_width)},
          {"barbs", range(c.barbs)},
          {"barb_length", range(c.barb_length)},
          {"barb_angle", range(c.barb_angle)},
          {"barb_width", c.barb_width},
          {"alternate_barb_sides", c.alternate_barb_sides},
          {"limb_darkening", c.limb_darkening},
          {"contrast", c.contrast},
          {"noise_sigma", c.noise_sigma},
          {"seed", c.seed}};
}

SyntheticConfig synthetic_from_json(const nlohmann::json& j) {
  SyntheticConfig c;
  auto range = [&](const char* key, auto& r) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 2) {
      throw std::invalid_argument(std::string("synthetic: ") + key + " must be [lo, hi]");
    }
    v[0].get_to(r.lo);
    v[1].get_to(r.hi);
  };
  auto scalar = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  scalar("count", c.count);
  scalar("image_size", c.image_size);
  range("disk_radius", c.disk_radius);
  range("filaments", c.filaments);
  range("spine_length", c.spine_length);
  range("curvature", c.curvature);
  range("spine_width", c.spine_width);
  range("barbs", c.barbs);
  range("barb_length", c.barb_length);
  range("barb_angle", c.barb_angle);
  scalar("barb_width", c.barb_width);
  scalar("alternate_barb_sides", c.alternate_barb_sides);
  scalar("limb_darkening", c.limb_darkening);
  scalar("contrast", c.contrast);
  scalar("noise_sigma", c.noise_sigma);
  scalar("seed", c.seed);
  c.validate();
  return c;
}

Point bezier_point(const FilamentGeometry& f, double t) {
  const double a = (1 - t) * (1 - t);
  const double b = 2 * (1 - t) * t;
  const double c = t * t;
  return {a * f.p0.x + b * f.p1.x + c * f.p2.x, a * f.p0.y + b * f.p1.y + c * f.p2.y};
}

std::vector<SyntheticSample> generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  const int n = cfg.image_size;
  std::vector<SyntheticSample> out;
  out.reserve(cfg.count);
  for (int index = 0; index < cfg.count; ++index) {
    // Each image has its own stream so any subset can be regenerated alone.
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed),
                      static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(index)};
    std::mt19937_64 rng(seq);
    SyntheticSample s;
    char id[32];
    std::snprintf(id, sizeof(id), "synth_%05d", index);
    s.id = id;

    const double r = uniform(rng, cfg.disk_radius) * n;
    const double slack = std::max(0.0, (n - 1) / 2.0 - r - 1.0);
    std::uniform_real_distribution<double> shift(-slack, slack);
    s.disk = {(n - 1) / 2.0 + shift(rng), (n - 1) / 2.0 + shift(rng), r};
    const Point center{s.disk.cx, s.disk.cy};

    s.background = GrayImage(n, n, 0.0);
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        const double d = dist({double(x), double(y)}, center) / r;
        if (d < 1.0) s.background.at(x, y) = 1.0 - cfg.limb_darkening * d;
      }
    }

    const int n_filaments = uniform(rng, cfg.filaments);
    for (int k = 0; k < n_filaments; ++k) {
      FilamentGeometry f = place_filament(rng, cfg, center, r);
      std::vector<Point> spine(kSpineSegments + 1);
      for (int i = 0; i <= kSpineSegments; ++i) {
        spine[i] = bezier_point(f, static_cast<double>(i) / kSpineSegments);
      }
      BinaryMask mask(n, n);
      draw_polyline(mask, spine, f.width / 2, center, r - 1.0);
      for (const Barb& b : f.barbs) {
        draw_polyline(mask, {b.start, b.end}, cfg.barb_width / 2, center, r - 1.0);
      }
      s.filaments.push_back(std::move(f));
      s.instances.push_back(std::move(mask));
    }

    s.clean = s.background;
    const BinaryMask all = mask_union(s.instances);
    for (std::size_t i = 0; i < all.bits.size(); ++i) {
      if (all.bits[i]) s.clean.pixels[i] -= cfg.contrast;
    }
    s.image = s.clean;
    if (cfg.noise_sigma > 0) {
      std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
      for (double& v : s.image.pixels) v = std::clamp(v + noise(rng), 0.0, 1.0);
    }
    out.push_back(std::move(s));
  }
  return out;
}

Sample to_sample(const SyntheticSample& synthetic) {
  Sample s;
  s.id = synthetic.id;
  s.image = synthetic.image;
  s.instances = synthetic.instances;
  s.union_mask = mask_union(s.instances);
  return s;
}

}  // namespace edgeattnet::data
