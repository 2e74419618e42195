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

#ifndef BEVMOTION__RASTER_HPP_
#define BEVMOTION__RASTER_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "bevmotion/geometry.hpp"

namespace bevmotion
{

/**
 * @brief Extent and resolution of the bird's-eye-view input tensor.
 *
 * The grid is centered on the self-driving vehicle with x forward (rows) and y left
 * (columns). Every sweep contributes ceil(height / dv) vertical slices.
 */
struct GridConfig
{
  double length_m = 150.0;
  double width_m = 100.0;
  double height_m = 3.2;
  double dl = 0.16;
  double dw = 0.16;
  double dv = 0.2;
  std::int64_t num_sweeps = 10;

  /// Throws ConfigError on non-positive extents/resolutions or num_sweeps < 1.
  void validate() const;

  friend bool operator==(const GridConfig &, const GridConfig &) = default;
};

struct GridShape
{
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t channels = 0;
  std::size_t slices_per_sweep = 0;

  std::size_t cell_count() const { return rows * cols * channels; }
  friend bool operator==(const GridShape &, const GridShape &) = default;
};

/// ceil(extent / resolution), tolerant to representation error in the quotient
/// (100 / 0.16 is 625 cells, not 626).
std::size_t cells_along(double extent, double resolution);

/// (ceil(L/dl), ceil(W/dw), T * ceil(V/dv)). Throws ConfigError if the tensor would not fit
/// in memory-addressable bit counts.
GridShape grid_shape(const GridConfig & config);

struct Point3
{
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Sensor pose in the global frame: planar rigid transform plus sensor height.
struct SensorPose
{
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  double z = 0.0;

  Pose2 planar() const { return {x, y, yaw}; }
};

struct LidarSweep
{
  double timestamp = 0.0;
  std::vector<Point3> points;  // sensor frame
  SensorPose pose;
};

struct CellIndex
{
  std::size_t row = 0;
  std::size_t col = 0;
};

/**
 * @brief Bit-packed binary occupancy tensor (rows x cols x channels).
 *
 * Bit `(row * cols + col) * channels + channel` lives in 64-bit word `bit / 64` at
 * position `bit % 64` (least significant bit first). Channels are sweep-major with the
 * oldest sweep first.
 */
class BevGrid
{
public:
  explicit BevGrid(const GridConfig & config);

  const GridConfig & config() const { return config_; }
  const GridShape & shape() const { return shape_; }

  bool test(std::size_t row, std::size_t col, std::size_t channel) const;
  void set(std::size_t row, std::size_t col, std::size_t channel);

  /// Cell containing the grid-frame location, or nullopt when outside [-L/2, L/2) x [-W/2, W/2).
  std::optional<CellIndex> locate(Vec2 grid_xy) const;
  /// Grid-frame (SDV-frame) coordinates of a cell center.
  Vec2 cell_center(std::size_t row, std::size_t col) const;

  std::span<const std::uint64_t> words() const { return words_; }
  std::span<std::uint64_t> mutable_words() { return words_; }
  std::size_t popcount() const;

  friend bool operator==(const BevGrid & a, const BevGrid & b)
  {
    return a.config_ == b.config_ && a.words_ == b.words_;
  }

private:
  GridConfig config_;
  GridShape shape_;
  std::vector<std::uint64_t> words_;
};

/**
 * @brief Encodes T sweeps (oldest first, last = current) into the current SDV frame.
 *
 * Each sweep is moved into the current frame with one rigid transform derived from its
 * sensor pose. Points outside the planar extent or the height window [-V/2, V/2) around
 * the current sensor height are dropped. `threads > 1` splits the point loop; the result
 * is bit-identical to the sequential one.
 */
BevGrid rasterize_sweeps(
  std::span<const LidarSweep> sweeps, const SensorPose & current_pose, const GridConfig & config,
  unsigned threads = 1);

// Map layers --------------------------------------------------------------------------

enum class MapClass : int
{
  kDrivingPath = 0,
  kCrosswalk = 1,
  kLaneBoundary = 2,
  kRoadBoundary = 3,
  kIntersection = 4,
  kDriveway = 5,
  kParkingLot = 6,
};

inline constexpr std::size_t kMapChannels = 7;

std::string_view map_class_name(MapClass cls);
/// Throws InputError for unknown names.
MapClass map_class_from_name(std::string_view name);

enum class MapGeometry
{
  kPolygon,
  kPolyline,
};

/// One static map element in the global frame. Polylines carry a stroke width.
struct MapElement
{
  MapClass cls = MapClass::kDrivingPath;
  MapGeometry geometry = MapGeometry::kPolygon;
  std::vector<Vec2> points;
  double stroke_width = 0.0;
};

/// Seven binary masks over the rows x cols BEV plane, one per MapClass.
struct MapLayerSet
{
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::array<std::vector<std::uint8_t>, kMapChannels> masks;

  std::uint8_t at(MapClass cls, std::size_t row, std::size_t col) const
  {
    return masks[static_cast<std::size_t>(cls)][row * cols + col];
  }
  std::size_t count(MapClass cls) const;
};

/// True when no two non-adjacent edges intersect and no edges overlap.
bool polygon_is_simple(std::span<const Vec2> polygon);
/// Even-odd containment test.
bool point_in_polygon(Vec2 p, std::span<const Vec2> polygon);
double distance_to_segment(Vec2 p, Vec2 a, Vec2 b);

/// Cell-center rasterization of map elements into the current SDV frame. Throws InputError
/// for self-intersecting polygons or malformed elements.
MapLayerSet rasterize_map(
  std::span<const MapElement> elements, const SensorPose & current_pose, const GridConfig & config);

// Rotated region-of-interest crop ------------------------------------------------------

/**
 * @brief Real-valued multi-channel grid with its own placement in the world.
 *
 * Cell (r, c) covers [origin.x + r*res, origin.x + (r+1)*res) x [origin.y + c*res, ...);
 * its value is attached to the cell center. Storage is row-major, channel-minor.
 */
struct FeatureGrid
{
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t channels = 1;
  double resolution = 1.0;
  Vec2 origin;
  std::vector<double> data;

  FeatureGrid() = default;
  FeatureGrid(std::size_t rows, std::size_t cols, std::size_t channels, double resolution, Vec2 origin);

  double & at(std::size_t r, std::size_t c, std::size_t ch) { return data[(r * cols + c) * channels + ch]; }
  double at(std::size_t r, std::size_t c, std::size_t ch) const
  {
    return data[(r * cols + c) * channels + ch];
  }
  Vec2 cell_center(std::size_t r, std::size_t c) const;

  /// Bilinear sample at a world location; neighbors outside the grid read 0.
  double sample(Vec2 world, std::size_t channel) const;
};

/// Single-channel occupancy density of a BEV grid (fraction of set bits per cell), placed in
/// the SDV frame.
FeatureGrid occupancy_density(const BevGrid & grid);

/// Square crop of side out_cells, channel count of the source. Row 0 is the actor's front
/// edge, column 0 its left edge.
struct RroiPatch
{
  std::size_t cells = 0;
  std::size_t channels = 0;
  double resolution = 0.0;
  std::vector<double> data;

  double at(std::size_t i, std::size_t j, std::size_t ch) const
  {
    return data[(i * cells + j) * channels + ch];
  }
};

inline constexpr double kDefaultRroiCropM = 40.0;
inline constexpr std::size_t kDefaultRroiCells = 100;

/// Crops a crop_m x crop_m square centered on the actor and rotates it so the actor heading
/// points up (toward row 0). Bilinear sampling; outside-of-source reads 0.
RroiPatch rroi_crop(
  const FeatureGrid & features, Vec2 actor_center, double actor_heading,
  double crop_m = kDefaultRroiCropM, std::size_t out_cells = kDefaultRroiCells);

/// Location sampled by output cell (i, j) of rroi_crop.
Vec2 rroi_sample_location(
  Vec2 actor_center, double actor_heading, double crop_m, std::size_t out_cells, std::size_t i,
  std::size_t j);

}  // namespace bevmotion

#endif  // BEVMOTION__RASTER_HPP_
