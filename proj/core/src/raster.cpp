// Copyright 2026 The bevmotion Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bevmotion/raster.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <string>
#include <thread>

#include "bevmotion/error.hpp"

namespace bevmotion
{
namespace
{

// 2^36 bits = 8 GiB of occupancy; anything larger is a configuration mistake.
constexpr std::size_t kMaxCells = std::size_t{1} << 36;

struct SweepTransform
{
  double cos_yaw = 1.0;
  double sin_yaw = 0.0;
  double tx = 0.0;
  double ty = 0.0;
  double dz = 0.0;
};

SweepTransform relative_transform(const SensorPose & sweep, const SensorPose & current)
{
  const double rel_yaw = normalize_angle(sweep.yaw - current.yaw);
  const Vec2 t = rotate(Vec2{sweep.x - current.x, sweep.y - current.y}, -current.yaw);
  return {std::cos(rel_yaw), std::sin(rel_yaw), t.x, t.y, sweep.z - current.z};
}

struct VoxelLocator
{
  double half_l;
  double half_w;
  double half_v;
  double dl;
  double dw;
  double dv;
  GridShape shape;

  // Returns the bit index or SIZE_MAX when the point is outside the tensor.
  std::size_t bit_for(double x, double y, double z, std::size_t sweep) const
  {
    if (!(x >= -half_l && x < half_l && y >= -half_w && y < half_w && z >= -half_v && z < half_v)) {
      return SIZE_MAX;
    }
    const auto row = static_cast<std::size_t>(std::floor((x + half_l) / dl));
    const auto col = static_cast<std::size_t>(std::floor((y + half_w) / dw));
    const auto slice = static_cast<std::size_t>(std::floor((z + half_v) / dv));
    if (row >= shape.rows || col >= shape.cols || slice >= shape.slices_per_sweep) {
      return SIZE_MAX;
    }
    const std::size_t channel = sweep * shape.slices_per_sweep + slice;
    return (row * shape.cols + col) * shape.channels + channel;
  }
};

template <bool Atomic>
void rasterize_range(
  const LidarSweep & sweep, std::size_t sweep_index, const SweepTransform & tf,
  const VoxelLocator & locator, std::size_t begin, std::size_t end, std::span<std::uint64_t> words)
{
  for (std::size_t i = begin; i < end; ++i) {
    const Point3 & p = sweep.points[i];
    const double gx = tf.cos_yaw * p.x - tf.sin_yaw * p.y + tf.tx;
    const double gy = tf.sin_yaw * p.x + tf.cos_yaw * p.y + tf.ty;
    const double gz = p.z + tf.dz;
    const std::size_t bit = locator.bit_for(gx, gy, gz, sweep_index);
    if (bit == SIZE_MAX) {
      continue;
    }
    const std::uint64_t mask = std::uint64_t{1} << (bit % 64);
    if constexpr (Atomic) {
      std::atomic_ref<std::uint64_t>(words[bit / 64]).fetch_or(mask, std::memory_order_relaxed);
    } else {
      words[bit / 64] |= mask;
    }
  }
}

bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2)
{
  const auto orient = [](Vec2 a, Vec2 b, Vec2 c) {
    const double v = cross(b - a, c - a);
    return (v > 0.0) - (v < 0.0);
  };
  const auto on_segment = [](Vec2 a, Vec2 b, Vec2 c) {
    return std::min(a.x, b.x) <= c.x && c.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= c.y &&
           c.y <= std::max(a.y, b.y);
  };
  const int o1 = orient(p1, p2, q1);
  const int o2 = orient(p1, p2, q2);
  const int o3 = orient(q1, q2, p1);
  const int o4 = orient(q1, q2, p2);
  if (o1 != o2 && o3 != o4) {
    return true;
  }
  return (o1 == 0 && on_segment(p1, p2, q1)) || (o2 == 0 && on_segment(p1, p2, q2)) ||
         (o3 == 0 && on_segment(q1, q2, p1)) || (o4 == 0 && on_segment(q1, q2, p2));
}

constexpr std::array<std::string_view, kMapChannels> kMapClassNames = {
  "driving_path", "crosswalk", "lane_boundary", "road_boundary",
  "intersection", "driveway",  "parking_lot",
};

}  // namespace

void GridConfig::validate() const
{
  const auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(length_m) || !positive(width_m) || !positive(height_m)) {
    throw ConfigError("GridConfig: extents must be positive and finite");
  }
  if (!positive(dl) || !positive(dw) || !positive(dv)) {
    throw ConfigError("GridConfig: resolutions must be positive and finite");
  }
  if (num_sweeps < 1) {
    throw ConfigError("GridConfig: num_sweeps must be >= 1");
  }
}

std::size_t cells_along(double extent, double resolution)
{
  const double q = extent / resolution;
  if (!std::isfinite(q) || q > 1e15) {
    throw ConfigError("GridConfig: cell count overflow");
  }
  const double r = std::round(q);
  if (std::abs(q - r) <= 1e-9 * std::max(1.0, r)) {
    return static_cast<std::size_t>(std::max(1.0, r));
  }
  return static_cast<std::size_t>(std::ceil(q));
}

GridShape grid_shape(const GridConfig & config)
{
  config.validate();
  GridShape s;
  s.rows = cells_along(config.length_m, config.dl);
  s.cols = cells_along(config.width_m, config.dw);
  s.slices_per_sweep = cells_along(config.height_m, config.dv);
  const auto sweeps = static_cast<std::size_t>(config.num_sweeps);
  if (s.slices_per_sweep > kMaxCells / sweeps) {
    throw ConfigError("GridConfig: channel count overflow");
  }
  s.channels = sweeps * s.slices_per_sweep;
  if (s.rows > kMaxCells / s.cols || s.rows * s.cols > kMaxCells / s.channels) {
    throw ConfigError("GridConfig: cell count overflow");
  }
  return s;
}

BevGrid::BevGrid(const GridConfig & config) : config_(config), shape_(grid_shape(config))
{
  words_.assign((shape_.cell_count() + 63) / 64, 0);
}

bool BevGrid::test(std::size_t row, std::size_t col, std::size_t channel) const
{
  const std::size_t bit = (row * shape_.cols + col) * shape_.channels + channel;
  return (words_[bit / 64] >> (bit % 64)) & 1U;
}

void BevGrid::set(std::size_t row, std::size_t col, std::size_t channel)
{
  const std::size_t bit = (row * shape_.cols + col) * shape_.channels + channel;
  words_[bit / 64] |= std::uint64_t{1} << (bit % 64);
}

std::optional<CellIndex> BevGrid::locate(Vec2 p) const
{
  const double half_l = 0.5 * config_.length_m;
  const double half_w = 0.5 * config_.width_m;
  if (!(p.x >= -half_l && p.x < half_l && p.y >= -half_w && p.y < half_w)) {
    return std::nullopt;
  }
  const auto row = static_cast<std::size_t>(std::floor((p.x + half_l) / config_.dl));
  const auto col = static_cast<std::size_t>(std::floor((p.y + half_w) / config_.dw));
  if (row >= shape_.rows || col >= shape_.cols) {
    return std::nullopt;
  }
  return CellIndex{row, col};
}

Vec2 BevGrid::cell_center(std::size_t row, std::size_t col) const
{
  return {
    -0.5 * config_.length_m + (static_cast<double>(row) + 0.5) * config_.dl,
    -0.5 * config_.width_m + (static_cast<double>(col) + 0.5) * config_.dw};
}

std::size_t BevGrid::popcount() const
{
  std::size_t n = 0;
  for (const std::uint64_t w : words_) {
    n += static_cast<std::size_t>(std::popcount(w));
  }
  return n;
}

BevGrid rasterize_sweeps(
  std::span<const LidarSweep> sweeps, const SensorPose & current_pose, const GridConfig & config,
  unsigned threads)
{
  if (sweeps.size() != static_cast<std::size_t>(config.num_sweeps)) {
    throw ArgumentError(
      "rasterize_sweeps: expected " + std::to_string(config.num_sweeps) + " sweeps, got " +
      std::to_string(sweeps.size()));
  }
  BevGrid grid(config);
  const VoxelLocator locator{
    0.5 * config.length_m, 0.5 * config.width_m, 0.5 * config.height_m, config.dl, config.dw,
    config.dv, grid.shape()};
  auto words = grid.mutable_words();
  threads = std::max(1U, threads);

  for (std::size_t s = 0; s < sweeps.size(); ++s) {
    const LidarSweep & sweep = sweeps[s];
    const SweepTransform tf = relative_transform(sweep.pose, current_pose);
    const std::size_t n = sweep.points.size();
    if (threads == 1 || n < 4096) {
      rasterize_range<false>(sweep, s, tf, locator, 0, n, words);
      continue;
    }
    std::vector<std::thread> workers;
    workers.reserve(threads);
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t begin = std::min(n, t * chunk);
      const std::size_t end = std::min(n, begin + chunk);
      workers.emplace_back([&, begin, end, s] {
        rasterize_range<true>(sweep, s, tf, locator, begin, end, words);
      });
    }
    for (auto & w : workers) {
      w.join();
    }
  }
  return grid;
}

std::string_view map_class_name(MapClass cls) { return kMapClassNames[static_cast<std::size_t>(cls)]; }

MapClass map_class_from_name(std::string_view name)
{
  for (std::size_t i = 0; i < kMapChannels; ++i) {
    if (kMapClassNames[i] == name) {
      return static_cast<MapClass>(i);
    }
  }
  throw InputError("unknown map element class '" + std::string(name) + "'");
}

std::size_t MapLayerSet::count(MapClass cls) const
{
  const auto & m = masks[static_cast<std::size_t>(cls)];
  return static_cast<std::size_t>(std::count(m.begin(), m.end(), std::uint8_t{1}));
}

bool polygon_is_simple(std::span<const Vec2> polygon)
{
  const std::size_t n = polygon.size();
  if (n < 3) {
    return false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a1 = polygon[i];
    const Vec2 a2 = polygon[(i + 1) % n];
    if (a1 == a2) {
      return false;
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      const Vec2 b1 = polygon[j];
      const Vec2 b2 = polygon[(j + 1) % n];
      if (adjacent) {
        // Adjacent edges may only share their common vertex: reject folding back.
        const Vec2 shared = (j == i + 1) ? a2 : a1;
        const Vec2 other_a = (j == i + 1) ? a1 : a2;
        const Vec2 other_b = (j == i + 1) ? b2 : b1;
        const Vec2 da = other_a - shared;
        const Vec2 db = other_b - shared;
        if (cross(da, db) == 0.0 && dot(da, db) > 0.0) {
          return false;
        }
        continue;
      }
      if (segments_intersect(a1, a2, b1, b2)) {
        return false;
      }
    }
  }
  return true;
}

bool point_in_polygon(Vec2 p, std::span<const Vec2> polygon)
{
  bool inside = false;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = polygon[i];
    const Vec2 b = polygon[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) {
        inside = !inside;
      }
    }
  }
  return inside;
}

double distance_to_segment(Vec2 p, Vec2 a, Vec2 b)
{
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) {
    return norm(p - a);
  }
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return norm(p - (a + t * ab));
}

MapLayerSet rasterize_map(
  std::span<const MapElement> elements, const SensorPose & current_pose, const GridConfig & config)
{
  const GridShape shape = grid_shape(config);
  MapLayerSet layers;
  layers.rows = shape.rows;
  layers.cols = shape.cols;
  for (auto & m : layers.masks) {
    m.assign(shape.rows * shape.cols, 0);
  }
  const Pose2 frame = current_pose.planar();
  const double half_l = 0.5 * config.length_m;
  const double half_w = 0.5 * config.width_m;

  for (const MapElement & element : elements) {
    std::vector<Vec2> local;
    local.reserve(element.points.size());
    for (const Vec2 & p : element.points) {
      local.push_back(frame.apply_inverse(p));
    }
    double margin = 0.0;
    if (element.geometry == MapGeometry::kPolygon) {
      if (!polygon_is_simple(local)) {
        throw InputError(
          "rasterize_map: " + std::string(map_class_name(element.cls)) +
          " polygon is not simple (self-intersecting or degenerate)");
      }
    } else {
      if (local.size() < 2 || !(element.stroke_width > 0.0)) {
        throw InputError("rasterize_map: polyline needs >= 2 points and positive stroke width");
      }
      margin = 0.5 * element.stroke_width;
    }
    double min_x = local.front().x;
    double max_x = min_x;
    double min_y = local.front().y;
    double max_y = min_y;
    for (const Vec2 & p : local) {
      min_x = std::min(min_x, p.x);
      max_x = std::max(max_x, p.x);
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
    }
    min_x -= margin;
    max_x += margin;
    min_y -= margin;
    max_y += margin;
    // Candidate rows/cols whose centers may fall in [min, max].
    const auto index_range = [](double lo, double hi, double half, double res, std::size_t n) {
      const double first = std::floor((lo + half) / res - 0.5);
      const double last = std::ceil((hi + half) / res - 0.5);
      const auto clamp = [n](double v) {
        return static_cast<std::size_t>(std::clamp(v, 0.0, static_cast<double>(n)));
      };
      return std::pair{clamp(first), clamp(last + 1.0)};
    };
    const auto [r0, r1] = index_range(min_x, max_x, half_l, config.dl, shape.rows);
    const auto [c0, c1] = index_range(min_y, max_y, half_w, config.dw, shape.cols);
    auto & mask = layers.masks[static_cast<std::size_t>(element.cls)];
    for (std::size_t r = r0; r < r1; ++r) {
      const double x = -half_l + (static_cast<double>(r) + 0.5) * config.dl;
      for (std::size_t c = c0; c < c1; ++c) {
        const Vec2 center{x, -half_w + (static_cast<double>(c) + 0.5) * config.dw};
        bool hit = false;
        if (element.geometry == MapGeometry::kPolygon) {
          hit = point_in_polygon(center, local);
        } else {
          for (std::size_t k = 0; k + 1 < local.size() && !hit; ++k) {
            hit = distance_to_segment(center, local[k], local[k + 1]) <= margin;
          }
        }
        if (hit) {
          mask[r * shape.cols + c] = 1;
        }
      }
    }
  }
  return layers;
}

FeatureGrid::FeatureGrid(
  std::size_t r, std::size_t c, std::size_t ch, double res, Vec2 o)
: rows(r), cols(c), channels(ch), resolution(res), origin(o), data(r * c * ch, 0.0)
{
  if (!(res > 0.0) || ch == 0) {
    throw ArgumentError("FeatureGrid: resolution must be positive and channels >= 1");
  }
}

Vec2 FeatureGrid::cell_center(std::size_t r, std::size_t c) const
{
  return {
    origin.x + (static_cast<double>(r) + 0.5) * resolution,
    origin.y + (static_cast<double>(c) + 0.5) * resolution};
}

double FeatureGrid::sample(Vec2 world, std::size_t channel) const
{
  const double u = (world.x - origin.x) / resolution - 0.5;
  const double v = (world.y - origin.y) / resolution - 0.5;
  const double fu = std::floor(u);
  const double fv = std::floor(v);
  const double wu = u - fu;
  const double wv = v - fv;
  const auto read = [&](double rr, double cc) {
    if (rr < 0.0 || cc < 0.0 || rr >= static_cast<double>(rows) || cc >= static_cast<double>(cols)) {
      return 0.0;
    }
    return at(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc), channel);
  };
  return (1.0 - wu) * ((1.0 - wv) * read(fu, fv) + wv * read(fu, fv + 1.0)) +
         wu * ((1.0 - wv) * read(fu + 1.0, fv) + wv * read(fu + 1.0, fv + 1.0));
}

FeatureGrid occupancy_density(const BevGrid & grid)
{
  const GridShape & s = grid.shape();
  const GridConfig & cfg = grid.config();
  if (cfg.dl != cfg.dw) {
    throw ArgumentError("occupancy_density: requires square cells (dl == dw)");
  }
  FeatureGrid out(s.rows, s.cols, 1, cfg.dl, Vec2{-0.5 * cfg.length_m, -0.5 * cfg.width_m});
  const double inv = 1.0 / static_cast<double>(s.channels);
  for (std::size_t r = 0; r < s.rows; ++r) {
    for (std::size_t c = 0; c < s.cols; ++c) {
      std::size_t n = 0;
      for (std::size_t ch = 0; ch < s.channels; ++ch) {
        n += grid.test(r, c, ch) ? 1 : 0;
      }
      out.at(r, c, 0) = static_cast<double>(n) * inv;
    }
  }
  return out;
}

Vec2 rroi_sample_location(
  Vec2 actor_center, double actor_heading, double crop_m, std::size_t out_cells, std::size_t i,
  std::size_t j)
{
  const double step = crop_m / static_cast<double>(out_cells);
  const double forward = 0.5 * crop_m - (static_cast<double>(i) + 0.5) * step;
  const double left = 0.5 * crop_m - (static_cast<double>(j) + 0.5) * step;
  const double c = std::cos(actor_heading);
  const double s = std::sin(actor_heading);
  return {actor_center.x + c * forward - s * left, actor_center.y + s * forward + c * left};
}

RroiPatch rroi_crop(
  const FeatureGrid & features, Vec2 actor_center, double actor_heading, double crop_m,
  std::size_t out_cells)
{
  if (!std::isfinite(actor_center.x) || !std::isfinite(actor_center.y) ||
      !std::isfinite(actor_heading)) {
    throw ArgumentError("rroi_crop: non-finite actor pose");
  }
  if (!(crop_m > 0.0) || out_cells == 0) {
    throw ArgumentError("rroi_crop: crop size and output cells must be positive");
  }
  RroiPatch patch;
  patch.cells = out_cells;
  patch.channels = features.channels;
  patch.resolution = crop_m / static_cast<double>(out_cells);
  patch.data.resize(out_cells * out_cells * features.channels);
  for (std::size_t i = 0; i < out_cells; ++i) {
    for (std::size_t j = 0; j < out_cells; ++j) {
      const Vec2 p = rroi_sample_location(actor_center, actor_heading, crop_m, out_cells, i, j);
      for (std::size_t ch = 0; ch < features.channels; ++ch) {
        patch.data[(i * out_cells + j) * features.channels + ch] = features.sample(p, ch);
      }
    }
  }
  return patch;
}

}  // namespace bevmotion
