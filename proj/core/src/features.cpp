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

#include "bevmotion/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bevmotion/error.hpp"

namespace bevmotion
{

void FeatureOptions::validate() const
{
  grid.validate();
  if (grid.dl != grid.dw) {
    throw ConfigError("features.grid: occupancy statistics need square cells (dl == dw)");
  }
  if (!(rroi_crop_m > 0.0) || rroi_cells < 2) {
    throw ConfigError("features: rroi_crop_m must be positive and rroi_cells >= 2");
  }
  if (!(intersection_cap_m > 0.0)) {
    throw ConfigError("features: intersection_cap_m must be positive");
  }
  if (yaw_window < 1) {
    throw ConfigError("features: yaw_window must be >= 1");
  }
}

SceneContext make_scene_context(
  const BevGrid & bev, const MapLayerSet * map, const SensorPose & pose, double dt)
{
  SceneContext ctx;
  ctx.occupancy = occupancy_density(bev);
  ctx.pose = pose;
  ctx.dt = dt;
  if (map != nullptr) {
    for (std::size_t r = 0; r < map->rows; ++r) {
      for (std::size_t c = 0; c < map->cols; ++c) {
        if (map->at(MapClass::kIntersection, r, c) != 0) {
          ctx.intersection_cells.push_back(bev.cell_center(r, c));
        }
      }
    }
  }
  return ctx;
}

SceneContext build_scene_context(
  const Scenario & scenario, std::size_t frame, std::span<const LidarSweep> sweeps,
  const FeatureOptions & options, unsigned threads)
{
  const SensorPose pose = scenario.sensor_pose(frame);
  const BevGrid bev = rasterize_sweeps(sweeps, pose, options.grid, threads);
  const MapLayerSet map = rasterize_map(scenario.map, pose, options.grid);
  return make_scene_context(bev, &map, pose, scenario.dt());
}

std::optional<FeatureVector> extract_features(
  const ObservedActor & actor, const SceneContext & scene, const FeatureOptions & options)
{
  const auto & h = actor.history;
  if (h.size() < 2) {
    return std::nullopt;
  }
  const Waypoint & cur = h.back();
  const Waypoint & prev = h[h.size() - 2];
  const double dt = scene.dt;
  const Vec2 vel = (1.0 / dt) * (cur.position() - prev.position());
  const double speed = norm(vel);
  const double yaw_rate = normalize_angle(cur.heading - prev.heading) / dt;
  const std::size_t k = std::min(options.yaw_window, h.size() - 1);
  const double yaw_rate_long =
    normalize_angle(cur.heading - h[h.size() - 1 - k].heading) / (static_cast<double>(k) * dt);

  const Pose2 sdv = scene.pose.planar();
  const Vec2 local = sdv.apply_inverse(cur.position());
  double dist = options.intersection_cap_m;
  for (const Vec2 & c : scene.intersection_cells) {
    dist = std::min(dist, norm(c - local));
  }

  const RroiPatch patch = rroi_crop(
    scene.occupancy, local, normalize_angle(cur.heading - scene.pose.yaw), options.rroi_crop_m,
    options.rroi_cells);
  const std::size_t n = patch.cells;
  const std::size_t half = n / 2;
  std::array<double, 4> quadrant{};  // front-left, front-right, rear-left, rear-right
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = patch.at(i, j, 0);
      total += v;
      quadrant[(i < half ? 0 : 2) + (j < half ? 0 : 1)] += v;
    }
  }
  const double qcells = static_cast<double>(half * half);

  FeatureVector f;
  f.values = {1.0,
              speed,
              yaw_rate,
              yaw_rate_long,
              speed * yaw_rate,
              speed * speed,
              dist,
              total / static_cast<double>(n * n),
              quadrant[0] / qcells,
              quadrant[1] / qcells,
              quadrant[2] / qcells,
              quadrant[3] / qcells,
              vel.x,
              vel.y,
              std::sin(cur.heading),
              std::cos(cur.heading)};
  return f;
}

ObservedActor observe(const Scenario & scenario, std::size_t actor, std::size_t frame)
{
  const ActorTrack & a = scenario.actors.at(actor);
  if (frame >= a.poses.size()) {
    throw ArgumentError("observe: frame out of range");
  }
  ObservedActor o;
  o.cls = a.cls;
  o.length = a.length;
  o.width = a.width;
  o.history.assign(a.poses.begin(), a.poses.begin() + static_cast<std::ptrdiff_t>(frame + 1));
  return o;
}

std::optional<FeatureVector> extract_features(
  const Scenario & scenario, std::size_t frame, std::size_t actor, const BevGrid & bev,
  const MapLayerSet & map, const FeatureOptions & options)
{
  const SceneContext ctx = make_scene_context(bev, &map, scenario.sensor_pose(frame), scenario.dt());
  return extract_features(observe(scenario, actor, frame), ctx, options);
}

ObservedActor jitter(const ObservedActor & actor, Vec2 offset, double dyaw)
{
  ObservedActor out = actor;
  if (actor.history.empty()) {
    return out;
  }
  const Vec2 pivot = actor.current().position();
  for (Waypoint & w : out.history) {
    const Vec2 p = pivot + rotate(w.position() - pivot, dyaw) + offset;
    w = {p.x, p.y, normalize_angle(w.heading + dyaw)};
  }
  return out;
}

}  // namespace bevmotion
