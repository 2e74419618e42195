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

#include "bevmotion/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bevmotion/error.hpp"

namespace bevmotion
{
namespace
{

constexpr std::array<std::string_view, kNumManeuvers> kManeuverNames = {
  "straight", "left_turn", "right_turn"};

// Pose of a constant-speed actor at signed time offset `tau` from the current frame.
// Turning actors follow a constant-curvature arc that starts `onset` seconds before the
// current frame; before that they drive straight.
Waypoint kinematic_pose(
  Vec2 p0, double heading0, double speed, double yaw_rate, double onset, double tau)
{
  if (yaw_rate == 0.0) {
    return {p0.x + speed * tau * std::cos(heading0), p0.y + speed * tau * std::sin(heading0), heading0};
  }
  const double radius = speed / yaw_rate;
  const auto on_arc = [&](double t) {
    const double h = heading0 + yaw_rate * t;
    return Waypoint{
      p0.x + radius * (std::sin(h) - std::sin(heading0)),
      p0.y + radius * (std::cos(heading0) - std::cos(h)), h};
  };
  if (tau >= -onset) {
    Waypoint w = on_arc(tau);
    w.heading = normalize_angle(w.heading);
    return w;
  }
  const Waypoint start = on_arc(-onset);
  const double back = tau + onset;  // negative
  return {
    start.cx + speed * back * std::cos(start.heading),
    start.cy + speed * back * std::sin(start.heading), normalize_angle(start.heading)};
}

std::vector<MapElement> make_map(const ScenarioSpec & spec, std::uint64_t seed)
{
  CounterRng rng(seed, RngStream::kMapLayout);
  const Vec2 c{rng.uniform(-25.0, 25.0), rng.uniform(-25.0, 25.0)};
  const double half = 8.0;     // intersection half-size
  const double reach = 120.0;  // road arms
  std::vector<MapElement> map;
  const auto rect = [](double x0, double y0, double x1, double y1) {
    return std::vector<Vec2>{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
  };
  map.push_back({MapClass::kIntersection, MapGeometry::kPolygon,
                 rect(c.x - half, c.y - half, c.x + half, c.y + half), 0.0});
  // Two crossing roads: lane centers are driving paths, edges are road boundaries.
  for (const double off : {-half / 2.0, half / 2.0}) {
    map.push_back({MapClass::kDrivingPath, MapGeometry::kPolyline,
                   {{c.x - reach, c.y + off}, {c.x + reach, c.y + off}}, 3.5});
    map.push_back({MapClass::kDrivingPath, MapGeometry::kPolyline,
                   {{c.x + off, c.y - reach}, {c.x + off, c.y + reach}}, 3.5});
  }
  map.push_back({MapClass::kLaneBoundary, MapGeometry::kPolyline,
                 {{c.x - reach, c.y}, {c.x - half, c.y}}, 0.2});
  map.push_back({MapClass::kLaneBoundary, MapGeometry::kPolyline,
                 {{c.x + half, c.y}, {c.x + reach, c.y}}, 0.2});
  for (const double off : {-half, half}) {
    map.push_back({MapClass::kRoadBoundary, MapGeometry::kPolyline,
                   {{c.x + half, c.y + off}, {c.x + reach, c.y + off}}, 0.3});
    map.push_back({MapClass::kRoadBoundary, MapGeometry::kPolyline,
                   {{c.x - reach, c.y + off}, {c.x - half, c.y + off}}, 0.3});
  }
  map.push_back({MapClass::kCrosswalk, MapGeometry::kPolygon,
                 rect(c.x + half, c.y - half, c.x + half + 3.0, c.y + half), 0.0});
  map.push_back({MapClass::kCrosswalk, MapGeometry::kPolygon,
                 rect(c.x - half - 3.0, c.y - half, c.x - half, c.y + half), 0.0});
  map.push_back({MapClass::kDriveway, MapGeometry::kPolygon,
                 rect(c.x + 20.0, c.y + half, c.x + 24.0, c.y + half + 10.0), 0.0});
  map.push_back({MapClass::kParkingLot, MapGeometry::kPolygon,
                 rect(c.x + 14.0, c.y + half + 10.0, c.x + 34.0, c.y + half + 30.0), 0.0});
  (void)spec;
  return map;
}

}  // namespace

std::string_view maneuver_name(Maneuver m) { return kManeuverNames[static_cast<std::size_t>(m)]; }

Maneuver maneuver_from_name(std::string_view name)
{
  for (std::size_t i = 0; i < kNumManeuvers; ++i) {
    if (kManeuverNames[i] == name) {
      return static_cast<Maneuver>(i);
    }
  }
  throw InputError("unknown maneuver '" + std::string(name) + "'");
}

OrientedBox ActorTrack::box_at(std::size_t frame) const
{
  const Waypoint & w = poses.at(frame);
  return OrientedBox({w.cx, w.cy}, length, width, w.heading);
}

SensorPose Scenario::sensor_pose(std::size_t frame) const
{
  const Waypoint & w = sdv_track.at(frame);
  return {w.cx, w.cy, w.heading, sensor_height};
}

Trajectory Scenario::future_of(const ActorTrack & actor) const
{
  Trajectory t;
  t.horizon_dt = dt();
  const std::size_t c = current_frame();
  t.waypoints.assign(actor.poses.begin() + static_cast<std::ptrdiff_t>(c + 1),
                     actor.poses.begin() + static_cast<std::ptrdiff_t>(c + 1 + future_frames));
  return t;
}

std::vector<LabeledActor> Scenario::labels() const
{
  std::vector<LabeledActor> out;
  out.reserve(actors.size());
  for (const ActorTrack & a : actors) {
    out.push_back({a.box_at(current_frame()), a.cls, future_of(a)});
  }
  return out;
}

void ScenarioSpec::validate() const
{
  const auto fail = [](const std::string & field, const std::string & why) {
    throw ConfigError("scenario spec field '" + field + "': " + why);
  };
  if (!(frame_rate > 0.0) || !std::isfinite(frame_rate)) {
    fail("frame_rate", "must be positive");
  }
  if (history_frames < 2) {
    fail("history_frames", "must be >= 2 (velocity needs two past poses)");
  }
  if (future_frames < 1) {
    fail("future_frames", "must be >= 1");
  }
  if (num_scenarios < 1) {
    fail("num_scenarios", "must be >= 1");
  }
  double class_total = 0.0;
  for (std::size_t i = 0; i < kNumActorClasses; ++i) {
    const std::string name = "class_ratios." + std::string(actor_class_name(kAllActorClasses[i]));
    if (!(class_ratios[i] >= 0.0) || !std::isfinite(class_ratios[i])) {
      fail(name, "must be finite and >= 0");
    }
    class_total += class_ratios[i];
  }
  if (!(class_total > 0.0)) {
    fail("class_ratios", "at least one class ratio must be positive");
  }
  double maneuver_total = 0.0;
  for (std::size_t i = 0; i < kNumManeuvers; ++i) {
    if (!(maneuver_mix[i] >= 0.0) || !std::isfinite(maneuver_mix[i])) {
      fail("maneuver_mix." + std::string(kManeuverNames[i]), "must be finite and >= 0");
    }
    maneuver_total += maneuver_mix[i];
  }
  if (!(maneuver_total > 0.0)) {
    fail("maneuver_mix", "at least one maneuver weight must be positive");
  }
  if (!(turn_delta_min > kPi / 3.0) || !(turn_delta_max >= turn_delta_min) ||
      !(turn_delta_max <= kPi / 2.0 + 1e-12)) {
    fail("turn_delta_min", "turn range must satisfy pi/3 < min <= max <= pi/2");
  }
  if (turn_onset_frames + 1 > history_frames) {
    fail("turn_onset_frames", "must be smaller than history_frames");
  }
  if (!(spawn_radius > 0.0)) {
    fail("spawn_radius", "must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    fail("dropout", "must lie in [0, 1)");
  }
  if (!(sensor_noise >= 0.0)) {
    fail("sensor_noise", "must be >= 0");
  }
  const double horizon_s = static_cast<double>(future_frames) / frame_rate;
  for (std::size_t i = 0; i < kNumActorClasses; ++i) {
    const ClassProfile & p = classes[i];
    const std::string name = "classes." + std::string(actor_class_name(kAllActorClasses[i]));
    if (!(p.length > 0.0 && p.width > 0.0 && p.height > 0.0)) {
      fail(name, "box extents must be positive");
    }
    if (!(p.speed_min >= 0.0 && p.speed_max >= p.speed_min)) {
      fail(name + ".speed_min", "speed range must satisfy 0 <= min <= max");
    }
    const bool has_turns = maneuver_mix[1] > 0.0 || maneuver_mix[2] > 0.0;
    if (class_ratios[i] > 0.0 && has_turns) {
      // Tightest turn: slowest actor, largest heading change.
      const double radius = p.speed_min * horizon_s / turn_delta_max;
      if (radius < p.length) {
        fail(name + ".speed_min", "turn radius " + std::to_string(radius) +
                                    " m is smaller than the box length");
      }
    }
  }
}

std::vector<std::size_t> apportion(std::span<const double> weights, std::size_t total)
{
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::size_t> counts(weights.size(), 0);
  if (!(sum > 0.0) || total == 0) {
    return counts;
  }
  std::vector<double> remainders(weights.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = static_cast<double>(total) * weights[i] / sum;
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    remainders[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return remainders[a] > remainders[b];
  });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) {
    ++counts[order[k % order.size()]];
  }
  return counts;
}

std::uint64_t scenario_seed(const ScenarioSpec & spec, std::size_t index)
{
  return CounterRng(spec.seed, RngStream::kScenarioSeeds).at(index);
}

Scenario generate(const ScenarioSpec & spec, std::size_t index)
{
  spec.validate();
  Scenario sc;
  sc.seed = scenario_seed(spec, index);
  sc.frame_rate = spec.frame_rate;
  sc.history_frames = spec.history_frames;
  sc.future_frames = spec.future_frames;
  sc.sensor_height = spec.sensor_height;
  const std::size_t frames = sc.num_frames();
  const std::size_t current = sc.current_frame();
  const double dt = sc.dt();
  const double horizon_s = static_cast<double>(spec.future_frames) * dt;

  sc.sdv_track.reserve(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    const double tau = (static_cast<double>(f) - static_cast<double>(current)) * dt;
    sc.sdv_track.push_back({spec.sdv_speed * tau, 0.0, 0.0});
  }
  if (spec.include_map) {
    sc.map = make_map(spec, sc.seed);
  }

  const auto class_counts = apportion(spec.class_ratios, spec.num_actors);
  std::uint64_t next_id = 0;
  std::vector<Vec2> placed;
  std::vector<double> placed_radius;
  for (std::size_t ci = 0; ci < kNumActorClasses; ++ci) {
    const ActorClass cls = kAllActorClasses[ci];
    const ClassProfile & profile = spec.classes[ci];
    const auto maneuver_counts = apportion(spec.maneuver_mix, class_counts[ci]);
    for (std::size_t mi = 0; mi < kNumManeuvers; ++mi) {
      for (std::size_t k = 0; k < maneuver_counts[mi]; ++k) {
        ActorTrack a;
        a.id = next_id++;
        a.cls = cls;
        a.length = profile.length;
        a.width = profile.width;
        a.height = profile.height;
        a.maneuver = static_cast<Maneuver>(mi);
        CounterRng rng(sc.seed, RngStream::kActorSetup, a.id);
        a.speed = rng.uniform(profile.speed_min, profile.speed_max);
        const double heading0 = normalize_angle(rng.uniform(-kPi, kPi));
        const double radius = 0.5 * std::hypot(a.length, a.width);
        Vec2 p0;
        // Rejection sampling for non-overlapping spawn positions; after 64 tries accept.
        for (int attempt = 0; attempt < 64; ++attempt) {
          const double r = spec.spawn_radius * std::sqrt(rng.uniform(0.04, 1.0));
          const double phi = rng.uniform(-kPi, kPi);
          p0 = {r * std::cos(phi), r * std::sin(phi)};
          bool clear = true;
          for (std::size_t q = 0; q < placed.size() && clear; ++q) {
            clear = norm(p0 - placed[q]) > radius + placed_radius[q] + 1.0;
          }
          if (clear) {
            break;
          }
        }
        placed.push_back(p0);
        placed_radius.push_back(radius);

        double yaw_rate = 0.0;
        if (a.maneuver != Maneuver::kStraight) {
          const double magnitude = rng.uniform(spec.turn_delta_min, spec.turn_delta_max);
          a.turn_delta = a.maneuver == Maneuver::kLeftTurn ? magnitude : -magnitude;
          yaw_rate = a.turn_delta / horizon_s;
          if (a.speed > 0.0 && a.speed / std::abs(yaw_rate) < a.length) {
            throw ConfigError("scenario spec: generated turn radius smaller than box length");
          }
        }
        const double onset = static_cast<double>(spec.turn_onset_frames) * dt;
        a.poses.reserve(frames);
        for (std::size_t f = 0; f < frames; ++f) {
          const double tau = (static_cast<double>(f) - static_cast<double>(current)) * dt;
          a.poses.push_back(kinematic_pose(p0, heading0, a.speed, yaw_rate, onset, tau));
        }
        sc.actors.push_back(std::move(a));
      }
    }
  }
  return sc;
}

SweepSettings SweepSettings::from_spec(const ScenarioSpec & spec)
{
  SweepSettings s;
  s.points_per_actor = spec.points_per_actor;
  s.clutter_points = spec.clutter_points;
  s.dropout = spec.dropout;
  s.sensor_noise = spec.sensor_noise;
  return s;
}

LidarSweep simulate_sweep(const Scenario & scenario, std::size_t frame, const SweepSettings & settings)
{
  if (frame >= scenario.num_frames()) {
    throw ArgumentError("simulate_sweep: frame out of range");
  }
  LidarSweep sweep;
  sweep.pose = scenario.sensor_pose(frame);
  sweep.timestamp = static_cast<double>(frame) * scenario.dt();
  const Pose2 sensor = sweep.pose.planar();
  const double sigma = settings.sensor_noise;

  for (const ActorTrack & actor : scenario.actors) {
    CounterRng rng(scenario.seed, settings.stream, frame, actor.id);
    const OrientedBox box = actor.box_at(frame);
    const auto corners = box_corners(box);
    // Sides whose outward normal faces the sensor.
    std::array<double, 4> lengths{};
    double visible = 0.0;
    for (std::size_t e = 0; e < 4; ++e) {
      const Vec2 a = corners[e];
      const Vec2 b = corners[(e + 1) % 4];
      const Vec2 outward{(b - a).y, -(b - a).x};  // CCW polygon: right normal points out
      const Vec2 mid = 0.5 * (a + b);
      if (dot(outward, Vec2{sensor.x, sensor.y} - mid) > 0.0) {
        lengths[e] = norm(b - a);
        visible += lengths[e];
      }
    }
    if (visible == 0.0) {
      for (std::size_t e = 0; e < 4; ++e) {
        lengths[e] = norm(corners[(e + 1) % 4] - corners[e]);
        visible += lengths[e];
      }
    }
    const double c = std::cos(box.heading);
    const double s = std::sin(box.heading);
    for (std::size_t k = 0; k < settings.points_per_actor; ++k) {
      double u = rng.uniform() * visible;
      std::size_t e = 0;
      while (e < 3 && (lengths[e] == 0.0 || u >= lengths[e])) {
        u -= lengths[e];
        ++e;
      }
      const Vec2 a = corners[e];
      const Vec2 b = corners[(e + 1) % 4];
      const double frac = lengths[e] > 0.0 ? std::clamp(u / lengths[e], 0.0, 1.0) : 0.0;
      Vec2 p = a + frac * (b - a);
      const double n_long = rng.uniform(-sigma, sigma);
      const double n_lat = rng.uniform(-sigma, sigma);
      p = p + Vec2{c * n_long - s * n_lat, s * n_long + c * n_lat};
      const double z = rng.uniform(0.2, actor.height);
      const bool dropped = rng.uniform() < settings.dropout;
      if (dropped) {
        continue;
      }
      const Vec2 local = sensor.apply_inverse(p);
      sweep.points.push_back({local.x, local.y, z - scenario.sensor_height});
    }
  }
  CounterRng clutter(scenario.seed, settings.stream, frame, ~std::uint64_t{0});
  for (std::size_t k = 0; k < settings.clutter_points; ++k) {
    const double r = settings.clutter_radius * std::sqrt(clutter.uniform());
    const double phi = clutter.uniform(-kPi, kPi);
    const double z = clutter.uniform(0.2, 0.5);
    const bool dropped = clutter.uniform() < settings.dropout;
    if (dropped) {
      continue;
    }
    sweep.points.push_back({r * std::cos(phi), r * std::sin(phi), z - scenario.sensor_height});
  }
  return sweep;
}

std::vector<LidarSweep> simulate_sweeps(
  const Scenario & scenario, std::size_t frame, std::size_t num_sweeps, const SweepSettings & settings)
{
  std::vector<LidarSweep> sweeps;
  sweeps.reserve(num_sweeps);
  for (std::size_t k = 0; k < num_sweeps; ++k) {
    const std::size_t back = num_sweeps - 1 - k;
    const std::size_t f = frame >= back ? frame - back : 0;
    sweeps.push_back(simulate_sweep(scenario, f, settings));
  }
  return sweeps;
}

std::vector<Trajectory> perturb_labels(
  const Scenario & scenario, const DiversitySchedule & schedule, std::uint64_t stream)
{
  schedule.validate(false);
  std::vector<Trajectory> out;
  out.reserve(scenario.actors.size());
  for (const ActorTrack & actor : scenario.actors) {
    Trajectory t = scenario.future_of(actor);
    CounterRng rng(scenario.seed, stream, actor.id);
    for (std::size_t h = 0; h < t.waypoints.size(); ++h) {
      const double time = static_cast<double>(h + 1) * t.horizon_dt;
      const double e_at = rng.laplace(diversity_at(schedule, time, Axis::kAlongTrack));
      const double e_ct = rng.laplace(diversity_at(schedule, time, Axis::kCrossTrack));
      Waypoint & w = t.waypoints[h];
      const double c = std::cos(w.heading);
      const double s = std::sin(w.heading);
      w.cx += e_at * c - e_ct * s;
      w.cy += e_at * s + e_ct * c;
    }
    out.push_back(std::move(t));
  }
  return out;
}

void inject_lateral_outliers(
  std::vector<Trajectory> & futures, double fraction, double magnitude, std::uint64_t seed,
  std::uint64_t stream)
{
  for (std::size_t i = 0; i < futures.size(); ++i) {
    CounterRng rng(seed, stream, i);
    if (!(rng.uniform() < fraction)) {
      continue;
    }
    Trajectory & t = futures[i];
    const double n = static_cast<double>(t.waypoints.size());
    for (std::size_t h = 0; h < t.waypoints.size(); ++h) {
      Waypoint & w = t.waypoints[h];
      const double off = magnitude * static_cast<double>(h + 1) / n;
      w.cx += -off * std::sin(w.heading);
      w.cy += off * std::cos(w.heading);
    }
  }
}

}  // namespace bevmotion
