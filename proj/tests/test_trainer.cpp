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
#include "bevmotion/features.hpp"
#include "bevmotion/trainer.hpp"
#include "scenes.hpp"

namespace bevmotion
{
namespace
{

using testing::make_scenes;
using testing::vehicle_spec;

TEST(Features, KinematicsFromHistory)
{
  ScenarioSpec spec = vehicle_spec(2, 6, {1.0, 0.0, 0.0});
  spec.classes[0].speed_min = spec.classes[0].speed_max = 10.0;
  const Scenario scn = generate(spec, 0);
  const FeatureOptions options;
  const auto sweeps = simulate_sweeps(scn, scn.current_frame(), options.grid.num_sweeps,
                                      SweepSettings::from_spec(spec));
  const SceneContext ctx = build_scene_context(scn, scn.current_frame(), sweeps, options);
  for (std::size_t i = 0; i < scn.actors.size(); ++i) {
    const auto f = extract_features(observe(scn, i, scn.current_frame()), ctx, options);
    ASSERT_TRUE(f);
    EXPECT_EQ(f->values[0], 1.0);
    EXPECT_NEAR(f->speed(), 10.0, 1e-9);
    EXPECT_NEAR(f->yaw_rate(), 0.0, 1e-9);
    EXPECT_GE(f->values[6], 0.0);
    EXPECT_LE(f->values[6], options.intersection_cap_m);
  }
  ObservedActor lone = observe(scn, 0, scn.current_frame());
  lone.history.resize(1);
  EXPECT_FALSE(extract_features(lone, ctx, options));
}

TEST(Features, TurningActorsShowYawRate)
{
  const ScenarioSpec spec = vehicle_spec(4, 6, {0.0, 1.0, 0.0});
  const Scenario scn = generate(spec, 0);
  const FeatureOptions options;
  const auto sweeps = simulate_sweeps(scn, scn.current_frame(), options.grid.num_sweeps,
                                      SweepSettings::from_spec(spec));
  const SceneContext ctx = build_scene_context(scn, scn.current_frame(), sweeps, options);
  for (std::size_t i = 0; i < scn.actors.size(); ++i) {
    const auto f = extract_features(observe(scn, i, scn.current_frame()), ctx, options);
    const double horizon = static_cast<double>(scn.future_frames) * scn.dt();
    EXPECT_NEAR(f->yaw_rate(), scn.actors[i].turn_delta / horizon, 1e-6);
  }
}

TEST(Features, InvariantBlockIgnoresHeadingWithEmptyScene)
{
  // With no occupancy and no map, the invariant features depend only on the track shape.
  FeatureOptions options;
  const BevGrid empty(options.grid);
  const SceneContext ctx = make_scene_context(empty, nullptr, {}, 0.1);
  ObservedActor actor;
  for (int k = 0; k < 10; ++k) {
    const double th = 0.02 * k;
    actor.history.push_back({std::sin(th) * 20.0, 20.0 - std::cos(th) * 20.0, th});
  }
  const auto a = extract_features(actor, ctx, options);
  const auto b = extract_features(jitter(actor, {0.0, 0.0}, 0.9), ctx, options);
  ASSERT_TRUE(a && b);
  for (std::size_t k = 0; k < kNumInvariantFeatures; ++k) {
    if (kFeatureNames[k].starts_with("occ") || kFeatureNames[k] == "dist_to_intersection") {
      continue;
    }
    EXPECT_NEAR(a->values[k], b->values[k], 1e-9) << kFeatureNames[k];
  }
}

class TrainerTest : public ::testing::Test
{
protected:
  static void SetUpTestSuite()
  {
    FeatureOptions options;
    const auto scenes = make_scenes(vehicle_spec(7, 15, {1.0, 1.0, 1.0}), 12, 0, options.grid.num_sweeps);
    DatasetOptions d;
    d.features = options;
    dataset_ = new std::vector<Sample>(build_dataset(scenes, d));
  }
  static void TearDownTestSuite() { delete dataset_; }

  static TrainConfig base_config(std::size_t iterations)
  {
    TrainConfig c;
    c.iterations = iterations;
    c.warmup_iterations = iterations;
    c.learning_rate = 0.05;
    return c;
  }

  static std::vector<Sample> * dataset_;
};

std::vector<Sample> * TrainerTest::dataset_ = nullptr;

TEST_F(TrainerTest, DatasetCoversEveryActor)
{
  EXPECT_EQ(dataset_->size(), 12u * 15u);
  for (const Sample & s : *dataset_) {
    EXPECT_EQ(s.target.size(), 30u);
  }
}

TEST_F(TrainerTest, SmoothL1FitsCleanStraightTracks)
{
  FeatureOptions options;
  const auto scenes = make_scenes(vehicle_spec(9, 20, {1.0, 0.0, 0.0}), 10, 0, options.grid.num_sweeps);
  DatasetOptions d;
  d.features = options;
  const auto data = build_dataset(scenes, d);
  TrainConfig c = base_config(1500);
  c.profile = LossProfile::kSmoothL1;
  c.stage_mode = StageMode::kFirstOnly;
  const TrainResult r = train(data, c);
  const auto errors = prediction_errors(predict_samples(r.model, data, true), 29);
  ASSERT_TRUE(errors);
  EXPECT_LT(errors->highest_probability.de_cm, 5.0);
}

TEST_F(TrainerTest, LossDecreasesOverWindows)
{
  TrainConfig c = base_config(600);
  c.learning_rate = 0.02;
  const TrainResult r = train(*dataset_, c);
  ASSERT_EQ(r.loss_curve.size(), 600u);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t w = 0; w < 6; ++w) {
    const double mean =
      std::accumulate(r.loss_curve.begin() + 100 * w, r.loss_curve.begin() + 100 * (w + 1), 0.0) / 100.0;
    EXPECT_LE(mean, prev) << "window " << w;
    prev = mean;
  }
}

template <typename F>
void for_each_vehicle_parameter(PredictionModel & m, F && f)
{
  ClassHead & h = m.heads[class_index(ActorClass::kVehicle)];
  for (double & v : h.stage1.data) {
    f(v);
  }
  for (Matrix & s : h.stage2) {
    for (double & v : s.data) {
      f(v);
    }
  }
}

TEST_F(TrainerTest, AnalyticGradientMatchesFiniteDifferences)
{
  for (const LossProfile profile : {LossProfile::kKlLaplace, LossProfile::kSmoothL1}) {
    TrainConfig c = base_config(40);
    c.profile = profile;
    // A short run moves the parameters away from their initial symmetric values.
    PredictionModel model = train(*dataset_, c).model;
    std::vector<std::size_t> idx(20);
    std::iota(idx.begin(), idx.end(), 0);
    PredictionModel grad = model;
    for_each_vehicle_parameter(grad, [](double & v) { v = 0.0; });
    batch_loss(model, *dataset_, idx, true, c, &grad);

    std::vector<double * > params;
    for_each_vehicle_parameter(model, [&](double & v) { params.push_back(&v); });
    std::vector<double> analytic;
    for_each_vehicle_parameter(grad, [&](double & v) { analytic.push_back(v); });
    ASSERT_EQ(params.size(), analytic.size());

    double dot = 0, na = 0, nf = 0;
    for (std::size_t k = 0; k < params.size(); k += 5) {
      double & p = *params[k];
      const double saved = p;
      const double h = 1e-6 * std::max(1.0, std::abs(saved));
      p = saved + h;
      const double up = batch_loss(model, *dataset_, idx, true, c);
      p = saved - h;
      const double down = batch_loss(model, *dataset_, idx, true, c);
      p = saved;
      const double fd = (up - down) / (2 * h);
      dot += fd * analytic[k];
      na += analytic[k] * analytic[k];
      nf += fd * fd;
    }
    EXPECT_GT(dot / std::sqrt(na * nf), 0.999) << loss_profile_name(profile);
  }
}

TEST_F(TrainerTest, DivergenceIsReported)
{
  TrainConfig c = base_config(50);
  c.learning_rate = 1e4;
  try {
    train(*dataset_, c);
    FAIL();
  } catch (const RuntimeFailure & e) {
    EXPECT_NE(std::string(e.what()).find("learning_rate"), std::string::npos);
  }
}

TEST_F(TrainerTest, TrainingIsReproducible)
{
  TrainConfig c = base_config(60);
  c.batch_size = 64;
  c.learning_rate = 0.01;
  c.seed = 4;
  const std::string a = model_to_json(train(*dataset_, c).model);
  const std::string b = model_to_json(train(*dataset_, c).model);
  EXPECT_EQ(a, b);
  c.seed = 5;
  EXPECT_NE(model_to_json(train(*dataset_, c).model), a);
}

TEST_F(TrainerTest, ModelJsonRoundTrip)
{
  const PredictionModel model = train(*dataset_, base_config(30)).model;
  const std::string text = model_to_json(model);
  const PredictionModel back = model_from_json(text);
  EXPECT_EQ(model_to_json(back), text);
  const auto p = predict_samples(model, *dataset_, true);
  const auto q = predict_samples(back, *dataset_, true);
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t m = 0; m < p[i].prediction.modes.size(); ++m) {
      const auto & a = p[i].prediction.modes[m];
      const auto & b = q[i].prediction.modes[m];
      EXPECT_EQ(a.probability, b.probability);
      EXPECT_EQ(a.trajectory.waypoints.back().cx, b.trajectory.waypoints.back().cx);
      EXPECT_EQ(a.distribution.b_ct.back(), b.distribution.b_ct.back());
    }
  }
  EXPECT_THROW(model_from_json("{}"), InputError);
  EXPECT_THROW(model_from_json("not json"), InputError);
}

TEST_F(TrainerTest, PredictionsAreWellFormed)
{
  const PredictionModel model = train(*dataset_, base_config(30)).model;
  for (const PredictionPair & p : predict_samples(model, *dataset_, true)) {
    ASSERT_EQ(p.prediction.modes.size(), 3u);
    EXPECT_NO_THROW(p.prediction.validate());
    for (const auto & m : p.prediction.modes) {
      EXPECT_EQ(m.trajectory.size(), 30u);
      for (const double b : m.distribution.b_at) {
        EXPECT_GT(b, 0.0);
      }
    }
  }
}

TEST(TrainConfigValidation, RejectsBadValues)
{
  TrainConfig c;
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.schedule_scales = {};
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.num_modes = {3, 0, 1};
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(stage_mode_from_name("three_stage"), ConfigError);
  EXPECT_THROW(train({}, TrainConfig{}), ArgumentError);
}

TEST(LossCurveCsv, HeaderAndRows)
{
  const std::vector<double> curve{3.0, 2.5};
  const std::string csv = loss_curve_csv(curve);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_EQ(csv.rfind("iteration,loss", 0), 0u);
}

}  // namespace
}  // namespace bevmotion
