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

#ifndef BEVMOTION__SYNTH_HPP_
#define BEVMOTION__SYNTH_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "bevmotion/actor.hpp"
#include "bevmotion/geometry.hpp"
#include "bevmotion/losses.hpp"
#include "bevmotion/metrics.hpp"
#include "bevmotion/raster.hpp"
#include "bevmotion/rng.hpp"

namespace bevmotion
{

enum class Maneuver : int
{
  kStraight = 0,
  kLeftTurn = 1,
  kRightTurn = 2,
};

inline constexpr std::size_t kNumManeuvers = 3;

std::string_view maneuver_name(Maneuver m);
Maneuver maneuver_from_name(std::string_view name);

struct ActorTrack
{
  std::uint64_t id = 0;
  ActorClass cls = ActorClass::kVehicle;
  double length = 4.5;
  double width = 2.0;
  double height = 1.6;
  Maneuver maneuver = Maneuver::kStraight;
  double speed = 0.0;        // m/s, constant
  double turn_delta = 0.0;   // signed heading change over the prediction horizon
  std::vector<Waypoint> poses;  // one per frame

  OrientedBox box_at(std::size_t frame) const;
};

/// Deterministic synthetic scene: ground-truth tracks, SDV track and static map.
struct Scenario
{
  std::uint64_t seed = 0;
  double frame_rate = 10.0;
  std::size_t history_frames = 10;
  std::size_t future_frames = 30;
  double sensor_height = 1.8;
  std::vector<ActorTrack> actors;
  std::vector<MapElement> map;
  std::vector<Waypoint> sdv_track;  // one per frame

  std::size_t num_frames() const { return history_frames + future_frames; }
  std::size_t current_frame() const { return history_frames - 1; }
  double dt() const { return 1.0 / frame_rate; }
  double duration() const { return static_cast<double>(num_frames()) / frame_rate; }
  SensorPose sensor_pose(std::size_t frame) const;

  /// Future waypoints current_frame + 1 .. current_frame + future_frames.
  Trajectory future_of(const ActorTrack & actor) const;
  Waypoint current_of(const ActorTrack & actor) const { return actor.poses.at(current_frame()); }
  /// Ground-truth labels at the current frame.
  std::vector<LabeledActor> labels() const;
};

struct ClassProfile
{
  double speed_min = 5.0;
  double speed_max = 15.0;
  double length = 4.5;
  double width = 2.0;
  double height = 1.6;
};

/// Generation recipe. Counts are apportioned exactly from the ratios (largest remainder).
struct ScenarioSpec
{
  std::uint64_t seed = 0;
  std::size_t num_scenarios = 1;
  double frame_rate = 10.0;
  std::size_t history_frames = 10;
  std::size_t future_frames = 30;
  std::size_t num_actors = 12;
  std::array<double, kNumActorClasses> class_ratios = {1.0, 1.0 / 3.2, 1.0 / 15.0};
  std::array<double, kNumManeuvers> maneuver_mix = {1.0, 1.0, 1.0};  // straight, left, right
  std::array<ClassProfile, kNumActorClasses> classes = {
    ClassProfile{5.0, 15.0, 4.5, 2.0, 1.6}, ClassProfile{0.8, 1.8, 0.8, 0.8, 1.7},
    ClassProfile{3.0, 7.0, 1.8, 0.7, 1.5}};
  double turn_delta_min = 0.37 * kPi;  // must exceed pi/3 so turns land outside the straight bin
  double turn_delta_max = 0.5 * kPi;
  std::size_t turn_onset_frames = 5;  // turns start this many frames before the current frame
  double spawn_radius = 35.0;
  double sdv_speed = 5.0;
  double sensor_height = 1.8;
  bool include_map = true;

  // Sweep simulation.
  std::size_t points_per_actor = 64;
  std::size_t clutter_points = 200;
  double dropout = 0.0;
  double sensor_noise = 0.03;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Exact integer counts proportional to `weights` summing to `total` (largest remainder,
/// ties to the lower index).
std::vector<std::size_t> apportion(std::span<const double> weights, std::size_t total);

/// Scenario number `index` of a spec; its seed is derived from (spec.seed, index).
Scenario generate(const ScenarioSpec & spec, std::size_t index = 0);
std::uint64_t scenario_seed(const ScenarioSpec & spec, std::size_t index);

struct SweepSettings
{
  std::size_t points_per_actor = 64;
  std::size_t clutter_points = 200;
  double dropout = 0.0;
  double sensor_noise = 0.03;
  double clutter_radius = 50.0;
  std::uint64_t stream = static_cast<std::uint64_t>(RngStream::kSweep);

  static SweepSettings from_spec(const ScenarioSpec & spec);
};

/// Points on the sensor-facing sides of every actor box plus low clutter, in the sensor
/// frame of `frame`. Noise is uniform in [-sigma, sigma] along the box axes.
LidarSweep simulate_sweep(const Scenario & scenario, std::size_t frame, const SweepSettings & settings);

/// The T sweeps ending at `frame` (oldest first). Frames before 0 are clamped to 0.
std::vector<LidarSweep> simulate_sweeps(
  const Scenario & scenario, std::size_t frame, std::size_t num_sweeps, const SweepSettings & settings);

/// Future tracks with independent Laplace(0, b_AT(t)) / Laplace(0, b_CT(t)) noise applied
/// in each true waypoint's heading frame. One Trajectory per actor, actor order preserved.
std::vector<Trajectory> perturb_labels(
  const Scenario & scenario, const DiversitySchedule & schedule,
  std::uint64_t stream = static_cast<std::uint64_t>(RngStream::kLabelNoise));

/// Shifts a fraction of future tracks sideways by up to `magnitude` meters, ramping in
/// linearly with time. Positive magnitudes push to the left of each waypoint's heading.
void inject_lateral_outliers(
  std::vector<Trajectory> & futures, double fraction, double magnitude, std::uint64_t seed,
  std::uint64_t stream = static_cast<std::uint64_t>(RngStream::kLabelNoise) + 100);

}  // namespace bevmotion

#endif  // BEVMOTION__SYNTH_HPP_
