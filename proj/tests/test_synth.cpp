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

#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "bevmotion/error.hpp"
#include "bevmotion/losses.hpp"
#include "bevmotion/synth.hpp"

namespace bevmotion
{
namespace
{

ScenarioSpec single_class_spec(Maneuver maneuver, std::size_t actors)
{
  ScenarioSpec spec;
  spec.seed = 17;
  spec.num_actors = actors;
  spec.class_ratios = {1.0, 0.0, 0.0};
  spec.maneuver_mix = {0.0, 0.0, 0.0};
  spec.maneuver_mix[static_cast<std::size_t>(maneuver)] = 1.0;
  return spec;
}

TEST(Generate, ConstantSpeedStraightLine)
{
  ScenarioSpec spec = single_class_spec(Maneuver::kStraight, 5);
  spec.classes[0].speed_min = spec.classes[0].speed_max = 10.0;
  const Scenario scn = generate(spec, 0);
  ASSERT_EQ(scn.actors.size(), 5u);
  for (const ActorTrack & a : scn.actors) {
    ASSERT_EQ(a.poses.size(), scn.num_frames());
    for (std::size_t f = 1; f < a.poses.size(); ++f) {
      const double step = std::hypot(
        a.poses[f].cx - a.poses[f - 1].cx, a.poses[f].cy - a.poses[f - 1].cy);
      EXPECT_NEAR(step, 1.0, 1e-9);
      EXPECT_NEAR(a.poses[f].heading, a.poses[0].heading, 1e-12);
    }
  }
}

TEST(Generate, DeterministicPerIndex)
{
  ScenarioSpec spec;
  spec.seed = 3;
  const Scenario a = generate(spec, 4);
  const Scenario b = generate(spec, 4);
  const Scenario c = generate(spec, 5);
  ASSERT_EQ(a.actors.size(), b.actors.size());
  for (std::size_t i = 0; i < a.actors.size(); ++i) {
    for (std::size_t f = 0; f < a.num_frames(); ++f) {
      EXPECT_EQ(a.actors[i].poses[f].cx, b.actors[i].poses[f].cx);
      EXPECT_EQ(a.actors[i].poses[f].cy, b.actors[i].poses[f].cy);
    }
  }
  EXPECT_NE(a.seed, c.seed);
  EXPECT_NE(a.actors[0].poses[0].cx, c.actors[0].poses[0].cx);
}

TEST(Generate, TurnsLandInDesignedModeBin)
{
  const std::pair<Maneuver, int> cases[] = {
    {Maneuver::kStraight, 1}, {Maneuver::kLeftTurn, 2}, {Maneuver::kRightTurn, 0}};
  for (const auto & [maneuver, bin] : cases) {
    const ScenarioSpec spec = single_class_spec(maneuver, 20);
    for (std::size_t s = 0; s < 5; ++s) {
      const Scenario scn = generate(spec, s);
      for (const ActorTrack & a : scn.actors) {
        EXPECT_EQ(assign_mode(scn.current_of(a), scn.future_of(a), 3).mode_index, bin)
          << maneuver_name(maneuver);
        const double delta =
          normalize_angle(scn.future_of(a).waypoints.back().heading - scn.current_of(a).heading);
        EXPECT_NEAR(delta, a.turn_delta, 1e-9);
      }
    }
  }
}

TEST(Generate, ClassCountsFollowRatios)
{
  ScenarioSpec spec;
  spec.num_actors = 43;
  spec.class_ratios = {3.2, 1.0, 0.5};
  const auto expected = apportion(spec.class_ratios, spec.num_actors);
  EXPECT_EQ(std::accumulate(expected.begin(), expected.end(), std::size_t{0}), 43u);
  const Scenario scn = generate(spec, 0);
  std::array<std::size_t, kNumActorClasses> counts{};
  for (const ActorTrack & a : scn.actors) {
    ++counts[class_index(a.cls)];
  }
  for (std::size_t c = 0; c < kNumActorClasses; ++c) {
    EXPECT_EQ(counts[c], expected[c]);
  }
}

TEST(Apportion, LargestRemainder)
{
  const std::vector<double> w{1.0, 1.0, 1.0};
  EXPECT_EQ(apportion(w, 10), (std::vector<std::size_t>{4, 3, 3}));
  const std::vector<double> z{0.0, 2.0};
  EXPECT_EQ(apportion(z, 5), (std::vector<std::size_t>{0, 5}));
}

TEST(Generate, InfeasibleSpecsAreRejected)
{
  ScenarioSpec spec = single_class_spec(Maneuver::kLeftTurn, 3);
  spec.classes[0].speed_min = 0.1;
  EXPECT_THROW(generate(spec, 0), ConfigError);
  ScenarioSpec zero;
  zero.class_ratios = {0.0, 0.0, 0.0};
  EXPECT_THROW(zero.validate(), ConfigError);
  ScenarioSpec shallow;
  shallow.turn_delta_min = kPi / 4.0;
  EXPECT_THROW(shallow.validate(), ConfigError);
  ScenarioSpec history;
  history.history_frames = 1;
  EXPECT_THROW(history.validate(), ConfigError);
}

bool inside_dilated(const OrientedBox & box, Vec2 p, double margin)
{
  const double c = std::cos(box.heading), s = std::sin(box.heading);
  const Vec2 d{p.x - box.center.x, p.y - box.center.y};
  const double lon = c * d.x + s * d.y;
  const double lat = -s * d.x + c * d.y;
  return std::abs(lon) <= box.length / 2 + margin + 1e-9 && std::abs(lat) <= box.width / 2 + margin + 1e-9;
}

TEST(SimulateSweep, ActorPointsLieOnDilatedBoxes)
{
  ScenarioSpec spec;
  spec.seed = 11;
  spec.num_actors = 15;
  const Scenario scn = generate(spec, 2);
  SweepSettings settings = SweepSettings::from_spec(spec);
  settings.clutter_points = 0;
  settings.sensor_noise = 0.05;
  for (std::size_t f = 0; f < scn.num_frames(); f += 7) {
    const LidarSweep sweep = simulate_sweep(scn, f, settings);
    EXPECT_EQ(sweep.points.size(), scn.actors.size() * settings.points_per_actor);
    const Pose2 sensor = sweep.pose.planar();
    for (const Point3 & p : sweep.points) {
      const Vec2 g = sensor.apply({p.x, p.y});
      bool hit = false;
      for (const ActorTrack & a : scn.actors) {
        hit = hit || inside_dilated(a.box_at(f), g, std::sqrt(2.0) * settings.sensor_noise);
      }
      EXPECT_TRUE(hit);
    }
  }
}

TEST(SimulateSweep, CountsAndDropout)
{
  ScenarioSpec spec;
  spec.num_actors = 6;
  const Scenario scn = generate(spec, 0);
  SweepSettings settings = SweepSettings::from_spec(spec);
  const LidarSweep full = simulate_sweep(scn, 3, settings);
  EXPECT_EQ(full.points.size(), 6 * settings.points_per_actor + settings.clutter_points);
  EXPECT_DOUBLE_EQ(full.timestamp, 0.3);
  settings.dropout = 0.5;
  const LidarSweep half = simulate_sweep(scn, 3, settings);
  EXPECT_LT(half.points.size(), full.points.size());
  EXPECT_GT(half.points.size(), full.points.size() / 4);
  EXPECT_THROW(simulate_sweep(scn, scn.num_frames(), settings), ArgumentError);

  const auto sweeps = simulate_sweeps(scn, 1, 4, settings);
  ASSERT_EQ(sweeps.size(), 4u);
  EXPECT_EQ(sweeps[0].timestamp, 0.0);
  EXPECT_EQ(sweeps[1].timestamp, 0.0);
  EXPECT_DOUBLE_EQ(sweeps[3].timestamp, 0.1);
}

TEST(PerturbLabels, ZeroScheduleIsIdentity)
{
  ScenarioSpec spec;
  const Scenario scn = generate(spec, 1);
  const auto futures = perturb_labels(scn, {0.0, 0.0, 0.0, 0.0});
  for (std::size_t i = 0; i < scn.actors.size(); ++i) {
    const Trajectory truth = scn.future_of(scn.actors[i]);
    for (std::size_t h = 0; h < truth.size(); ++h) {
      EXPECT_EQ(futures[i].waypoints[h].cx, truth.waypoints[h].cx);
      EXPECT_EQ(futures[i].waypoints[h].cy, truth.waypoints[h].cy);
    }
  }
}

TEST(PerturbLabels, ErrorsMatchScheduleScale)
{
  // Mean absolute deviation of Laplace(0, b) is b; along/cross errors should be uncorrelated.
  ScenarioSpec spec = single_class_spec(Maneuver::kStraight, 500);
  spec.spawn_radius = 200.0;
  const DiversitySchedule schedule{0.2, 0.3, 0.1, 0.05};
  const std::size_t probe[] = {0, 14, 29};
  for (const std::size_t h : probe) {
    double sum_at = 0, sum_ct = 0, sum_prod = 0, sum_sq_at = 0, sum_sq_ct = 0;
    std::size_t n = 0;
    for (std::size_t s = 0; s < 100; ++s) {
      const Scenario scn = generate(spec, s);
      const auto noisy = perturb_labels(scn, schedule);
      for (std::size_t i = 0; i < scn.actors.size(); ++i) {
        const Waypoint t = scn.future_of(scn.actors[i]).waypoints[h];
        const Waypoint p = noisy[i].waypoints[h];
        const AtCtError e = decompose_at_ct(p, t);
        sum_at += std::abs(e.at);
        sum_ct += std::abs(e.ct);
        sum_prod += e.at * e.ct;
        sum_sq_at += e.at * e.at;
        sum_sq_ct += e.ct * e.ct;
        ++n;
      }
    }
    const double time = static_cast<double>(h + 1) * 0.1;
    const double nn = static_cast<double>(n);
    EXPECT_NEAR(sum_at / nn, diversity_at(schedule, time, Axis::kAlongTrack),
                0.02 * diversity_at(schedule, time, Axis::kAlongTrack)) << h;
    EXPECT_NEAR(sum_ct / nn, diversity_at(schedule, time, Axis::kCrossTrack),
                0.02 * diversity_at(schedule, time, Axis::kCrossTrack)) << h;
    EXPECT_LT(std::abs(sum_prod / std::sqrt(sum_sq_at * sum_sq_ct)), 0.03);
  }
}

TEST(InjectOutliers, FractionAndShape)
{
  std::vector<Trajectory> futures(4000);
  for (auto & t : futures) {
    t.horizon_dt = 0.1;
    for (int h = 0; h < 10; ++h) {
      t.waypoints.push_back({static_cast<double>(h), 0.0, 0.0});
    }
  }
  auto shifted = futures;
  inject_lateral_outliers(shifted, 0.25, 2.0, 5);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < futures.size(); ++i) {
    const double off = shifted[i].waypoints.back().cy;
    if (off != 0.0) {
      ++hits;
      EXPECT_DOUBLE_EQ(off, 2.0);
      EXPECT_DOUBLE_EQ(shifted[i].waypoints[4].cy, 1.0);
    }
    EXPECT_EQ(shifted[i].waypoints.back().cx, 9.0);
  }
  EXPECT_NEAR(static_cast<double>(hits) / 4000.0, 0.25, 0.03);
}

}  // namespace
}  // namespace bevmotion
