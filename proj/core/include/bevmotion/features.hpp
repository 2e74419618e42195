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

#ifndef BEVMOTION__FEATURES_HPP_
#define BEVMOTION__FEATURES_HPP_

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "bevmotion/actor.hpp"
#include "bevmotion/geometry.hpp"
#include "bevmotion/raster.hpp"
#include "bevmotion/synth.hpp"

namespace bevmotion
{

/// Heading-invariant features come first; the trailing ones depend on the world heading.
inline constexpr std::size_t kNumInvariantFeatures = 12;
inline constexpr std::size_t kNumWorldFeatures = 4;
inline constexpr std::size_t kNumFeatures = kNumInvariantFeatures + kNumWorldFeatures;

inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
  "bias",          "speed",         "yaw_rate",       "yaw_rate_long",
  "speed_x_yaw",   "speed_sq",      "dist_to_intersection", "occ_mean",
  "occ_front_left", "occ_front_right", "occ_rear_left", "occ_rear_right",
  "vel_x",         "vel_y",         "sin_heading",    "cos_heading"};

struct FeatureVector
{
  std::array<double, kNumFeatures> values{};

  std::span<const double> invariant() const { return std::span(values).first(kNumInvariantFeatures); }
  double speed() const { return values[1]; }
  double yaw_rate() const { return values[2]; }
};

struct FeatureOptions
{
  /// Grid used for the occupancy statistics; coarser than the default input grid on purpose.
  GridConfig grid{96.0, 96.0, 3.2, 0.32, 0.32, 0.4, 2};
  double rroi_crop_m = kDefaultRroiCropM;
  std::size_t rroi_cells = 20;
  double intersection_cap_m = 50.0;
  std::size_t yaw_window = 3;  // frames spanned by the long yaw-rate estimate

  void validate() const;
  friend bool operator==(const FeatureOptions &, const FeatureOptions &) = default;
};

/// What the predictor sees of one actor: past poses (oldest first, last = current).
struct ObservedActor
{
  ActorClass cls = ActorClass::kVehicle;
  double length = 1.0;
  double width = 1.0;
  std::vector<Waypoint> history;

  const Waypoint & current() const { return history.back(); }
};

/// Per-frame inputs shared by every actor: occupancy density and intersection cells, both
/// in the SDV frame of the current pose.
struct SceneContext
{
  FeatureGrid occupancy;
  std::vector<Vec2> intersection_cells;
  SensorPose pose;
  double dt = 0.1;
};

SceneContext make_scene_context(
  const BevGrid & bev, const MapLayerSet * map, const SensorPose & pose, double dt);

/// Sweeps ending at `frame` plus the map, rasterized with `options.grid`.
SceneContext build_scene_context(
  const Scenario & scenario, std::size_t frame, std::span<const LidarSweep> sweeps,
  const FeatureOptions & options, unsigned threads = 1);

/// nullopt when fewer than two past poses are available.
std::optional<FeatureVector> extract_features(
  const ObservedActor & actor, const SceneContext & scene, const FeatureOptions & options);

/// Ground-truth history of `actor` up to `frame`.
ObservedActor observe(const Scenario & scenario, std::size_t actor, std::size_t frame);

/// Convenience form over a scenario: ground-truth history, occupancy from `bev`.
std::optional<FeatureVector> extract_features(
  const Scenario & scenario, std::size_t frame, std::size_t actor, const BevGrid & bev,
  const MapLayerSet & map, const FeatureOptions & options = {});

/// Rigidly moves a whole history about its current pose: heading rotated by `dyaw`, then the
/// track translated by `offset` (world frame).
ObservedActor jitter(const ObservedActor & actor, Vec2 offset, double dyaw);

}  // namespace bevmotion

#endif  // BEVMOTION__FEATURES_HPP_
