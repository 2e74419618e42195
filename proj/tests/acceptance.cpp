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

// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bevmotion/evaluation.hpp"
#include "bevmotion/losses.hpp"
#include "bevmotion/metrics.hpp"
#include "bevmotion/raster.hpp"
#include "bevmotion/report.hpp"
#include "gradient_check.hpp"
#include "oracles.hpp"
#include "scenes.hpp"

namespace fs = std::filesystem;
using namespace bevmotion;  // NOLINT

namespace
{

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome
{
  bool pass = false;
  std::string detail;
};

std::string fmt(const char * f, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

// Every evaluation report produced along the way; A8 checks min-over-M on all of them.
std::vector<EvalReport> g_reports;

Outcome a1_gradients()
{
  const auto t0 = Clock::now();
  const auto stats = testing::run_gradient_checks(1000, 20260418);
  const double t = seconds_since(t0);
  int failures = 0;
  std::string first;
  for (const auto & s : stats) {
    failures += s.failures;
    if (s.failures > 0 && first.empty()) {
      first = s.op + ": " + s.first_failure;
    }
  }
  return {failures == 0 && t < 10.0,
          fmt("%zu ops x 1000 draws, %d failures, %.2f s %s", stats.size(), failures, t, first.c_str())};
}

Outcome a2_laplace_kl()
{
  const double v0 = laplace_kl(0.0, 1.0, 1.0).value;
  const double v1 = laplace_kl(1.0, 1.0, 1.0).value;
  const double v2 = laplace_kl(0.0, 2.0, 1.0).value;
  const bool ok = std::abs(v0) <= 1e-12 && std::abs(v1 - std::exp(-1.0)) <= 1e-12 &&
                  std::abs(v2 - (std::log(2.0) - 0.5)) <= 1e-12;
  return {ok, fmt("kl(0,1,1)=%.3g kl(1,1,1)-1/e=%.3g kl(0,2,1)-(ln2-1/2)=%.3g", v0, v1 - std::exp(-1.0),
                  v2 - (std::log(2.0) - 0.5))};
}

Outcome a3_rotated_iou()
{
  const auto t0 = Clock::now();
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> centre(-2.0, 2.0), size(0.5, 5.0), angle(-kPi, kPi);
  double worst = 0.0;
  int overlapping = 0;
  for (int i = 0; i < 100; ++i) {
    const OrientedBox a({centre(gen), centre(gen)}, size(gen), size(gen), angle(gen));
    const OrientedBox b({centre(gen), centre(gen)}, size(gen), size(gen), angle(gen));
    const double exact = rotated_iou(a, b);
    overlapping += exact > 0.0 ? 1 : 0;
    worst = std::max(worst, std::abs(exact - testing::monte_carlo_iou(a, b, 1000, gen)));
  }
  const double t = seconds_since(t0);
  return {worst <= 2e-3 && t < 60.0,
          fmt("max |iou - mc| = %.2e over 100 pairs (%d overlapping), %.1f s", worst, overlapping, t)};
}

Outcome a4_average_precision()
{
  std::mt19937_64 gen(41);
  std::uniform_int_distribution<int> count(1, 20), extra(0, 5), coarse(0, 9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    std::vector<ScoredOutcome> outcomes(static_cast<std::size_t>(count(gen)));
    std::size_t tps = 0;
    for (auto & o : outcomes) {
      o.score = u(gen) < 0.3 ? coarse(gen) / 10.0 : u(gen);
      o.true_positive = u(gen) < 0.6;
      tps += o.true_positive ? 1 : 0;
    }
    const std::size_t labels = std::max<std::size_t>(1, tps + static_cast<std::size_t>(extra(gen)));
    worst = std::max(worst, std::abs(*average_precision(outcomes, labels) - testing::brute_force_ap(outcomes, labels)));
  }
  return {worst <= 1e-12, fmt("max |ap - oracle| = %.2e over 100 instances", worst)};
}

std::vector<Sample> dataset_of(std::span<const SceneInput> scenes, const FeatureOptions & features)
{
  DatasetOptions d;
  d.features = features;
  return build_dataset(scenes, d);
}

double vehicle_metric(const EvalReport & r, bool cross_track)
{
  const auto & e = r.classes[class_index(ActorClass::kVehicle)].errors;
  if (!e) {
    return std::nan("");
  }
  return cross_track ? e->highest_probability.ct_cm : e->highest_probability.de_cm;
}

Outcome a5_second_stage()
{
  const auto t0 = Clock::now();
  const FeatureOptions features;
  const ScenarioSpec spec = testing::vehicle_spec(7, 20, {1.0, 2.0, 2.0});
  const auto train_scenes = testing::make_scenes(spec, 40, 0, features.grid.num_sweeps);
  const auto test_scenes = testing::make_scenes(spec, 50, 1000, features.grid.num_sweeps);
  const auto data = dataset_of(train_scenes, features);
  double de[2] = {0.0, 0.0};
  for (const StageMode mode : {StageMode::kFirstOnly, StageMode::kTwoStage}) {
    TrainConfig c;
    c.learning_rate = 0.05;
    c.iterations = 1000;
    c.warmup_iterations = c.iterations;
    c.stage_mode = mode;
    c.features = features;
    const auto model = train(data, c).model;
    g_reports.push_back(evaluate(model, test_scenes, EvalOptions{}));
    de[mode == StageMode::kTwoStage ? 1 : 0] = vehicle_metric(g_reports.back(), false);
  }
  const double t = seconds_since(t0);
  return {de[1] < de[0] && t < 300.0,
          fmt("DE@3s first_only %.1f cm, two_stage %.1f cm, %.0f s", de[0], de[1], t)};
}

Outcome a6_uncertainty_loss()
{
  const auto t0 = Clock::now();
  const FeatureOptions features;
  const ScenarioSpec spec = testing::vehicle_spec(7, 20, {1.0, 0.0, 0.0});
  auto train_scenes = testing::make_scenes(spec, 40, 0, features.grid.num_sweeps);
  for (SceneInput & s : train_scenes) {
    apply_label_noise(s, DiversitySchedule{});
    apply_label_outliers(s, 0.2, 1.5);
  }
  const auto test_scenes = testing::make_scenes(spec, 50, 1000, features.grid.num_sweeps);
  const auto data = dataset_of(train_scenes, features);
  double ct[2] = {0.0, 0.0};
  for (const LossProfile profile : {LossProfile::kSmoothL1, LossProfile::kKlLaplace}) {
    TrainConfig c;
    c.learning_rate = 0.02;
    c.iterations = 2000;
    c.warmup_iterations = c.iterations;
    c.diversity_delay = c.iterations / 2;
    c.stage_mode = StageMode::kFirstOnly;
    c.profile = profile;
    c.features = features;
    const auto model = train(data, c).model;
    g_reports.push_back(evaluate(model, test_scenes, EvalOptions{}));
    ct[profile == LossProfile::kKlLaplace ? 1 : 0] = vehicle_metric(g_reports.back(), true);
  }
  const double t = seconds_since(t0);
  const double gain = 1.0 - ct[1] / ct[0];
  return {gain >= 0.03 && t < 300.0,
          fmt("CT@3s smooth_l1 %.2f cm, kl_laplace %.2f cm (%.1f%% lower), %.0f s", ct[0], ct[1], 100 * gain, t)};
}

Outcome a7_calibration()
{
  const auto t0 = Clock::now();
  const FeatureOptions features;
  const ScenarioSpec spec = testing::vehicle_spec(7, 40, {1.0, 0.0, 0.0});
  const DiversitySchedule noise;
  auto train_scenes = testing::make_scenes(spec, 40, 0, features.grid.num_sweeps);
  for (SceneInput & s : train_scenes) {
    apply_label_noise(s, noise);
  }
  const auto data = dataset_of(train_scenes, features);
  TrainConfig c;
  c.learning_rate = 0.02;
  c.iterations = 2000;
  c.warmup_iterations = c.iterations;
  c.diversity_delay = c.iterations / 2;
  c.stage_mode = StageMode::kFirstOnly;
  c.profile = LossProfile::kKlLaplace;
  c.schedule = noise;
  c.schedule_scales = {1.0, 0.5, 0.25, 0.1};
  c.features = features;
  const TrainResult result = train(data, c);

  auto test_scenes = testing::make_scenes(spec, 250, 1000, features.grid.num_sweeps);
  for (SceneInput & s : test_scenes) {
    apply_label_noise(s, noise);
  }
  const auto pairs = predict_samples(result.model, dataset_of(test_scenes, features), true);

  std::string detail;
  bool ok = true;
  for (const std::size_t h : {9u, 19u, 29u}) {
    const double time = static_cast<double>(h + 1) * 0.1;
    for (const Axis axis : {Axis::kAlongTrack, Axis::kCrossTrack}) {
      std::vector<double> rel;
      rel.reserve(pairs.size());
      for (const PredictionPair & p : pairs) {
        const auto & d = p.prediction.modes[0].distribution;
        const double b = axis == Axis::kAlongTrack ? d.b_at[h] : d.b_ct[h];
        rel.push_back(std::abs(b / diversity_at(noise, time, axis) - 1.0));
      }
      std::nth_element(rel.begin(), rel.begin() + static_cast<std::ptrdiff_t>(rel.size() / 2), rel.end());
      const double median = rel[rel.size() / 2];
      ok = ok && median < 0.10;
      detail += fmt("%s@%.0fs %.3f ", axis == Axis::kAlongTrack ? "at" : "ct", time, median);
    }
  }
  const double gap = max_calibration_gap(reliability_diagram(pairs, 29, default_calibration_levels()));
  ok = ok && gap < 0.03 && pairs.size() >= 10000;
  return {ok, fmt("median rel err %sgap %.4f at n=%zu (scale %.2f), %.0f s", detail.c_str(), gap, pairs.size(),
                  result.selected_scale, seconds_since(t0))};
}

Outcome a8_modes()
{
  const ScenarioSpec spec;
  std::size_t actors = 0, wrong = 0;
  for (std::size_t i = 0; i < 200; ++i) {
    ScenarioSpec s = spec;
    s.seed = 100 + i;
    s.num_actors = 20;
    const Scenario scn = generate(s, i);
    for (const ActorTrack & a : scn.actors) {
      const int designed = a.maneuver == Maneuver::kStraight ? 1 : a.maneuver == Maneuver::kLeftTurn ? 2 : 0;
      wrong += assign_mode(scn.current_of(a), scn.future_of(a), 3).mode_index == designed ? 0 : 1;
      ++actors;
    }
  }
  std::size_t checked = 0, violations = 0;
  for (const EvalReport & r : g_reports) {
    for (const ClassReport & c : r.classes) {
      if (c.errors) {
        ++checked;
        violations += c.errors->min_over_m.de_cm <= c.errors->highest_probability.de_cm ? 0 : 1;
      }
    }
  }
  return {wrong == 0 && violations == 0 && checked > 0,
          fmt("%zu/%zu actors in designed bin; min_over_M <= highest_prob in %zu/%zu class reports",
              actors - wrong, actors, checked - violations, checked)};
}

Outcome a9_rasterizer()
{
  const GridConfig cfg;
  const GridShape shape = grid_shape(cfg);
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> x(-80.0, 80.0), y(-55.0, 55.0), z(-2.0, 2.0);
  std::vector<LidarSweep> sweeps(cfg.num_sweeps);
  for (std::size_t k = 0; k < sweeps.size(); ++k) {
    sweeps[k].pose = {0.5 * static_cast<double>(k), 0.1 * static_cast<double>(k), 0.002 * static_cast<double>(k), 1.8};
    sweeps[k].timestamp = 0.1 * static_cast<double>(k);
    for (int i = 0; i < 10000; ++i) {
      sweeps[k].points.push_back({x(gen), y(gen), z(gen)});
    }
  }
  const SensorPose current = sweeps.back().pose;
  double best = 1e300;
  BevGrid reference(cfg);
  for (int rep = 0; rep < 5; ++rep) {
    const auto t0 = Clock::now();
    BevGrid g = rasterize_sweeps(sweeps, current, cfg, 1);
    best = std::min(best, seconds_since(t0));
    if (rep == 0) {
      reference = std::move(g);
    }
  }
  bool identical = true;
  for (const unsigned threads : {2u, 3u, 8u}) {
    identical = identical && rasterize_sweeps(sweeps, current, cfg, threads) == reference;
  }
  auto shuffled = sweeps;
  for (int rep = 0; rep < 3; ++rep) {
    for (auto & s : shuffled) {
      std::shuffle(s.points.begin(), s.points.end(), gen);
    }
    identical = identical && rasterize_sweeps(shuffled, current, cfg, 1 + rep) == reference;
  }
  const bool shape_ok = shape.rows == 938 && shape.cols == 625 && shape.channels == 160;
  return {shape_ok && identical && best < 0.25,
          fmt("shape (%zu, %zu, %zu); 100k points in %.1f ms; %s across threads/orders", shape.rows, shape.cols,
              shape.channels, 1e3 * best, identical ? "bit-exact" : "MISMATCH")};
}

int run_cli(const fs::path & dir, const std::string & args)
{
  const std::string cmd =
    "cd '" + dir.string() + "' && '" BEVMOTION_CLI "' " + args + " > /dev/null 2> stderr.txt";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path & p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome a10_determinism()
{
  const fs::path root = fs::temp_directory_path() / "bevmotion_acceptance_a10";
  fs::remove_all(root);
  const char * spec = R"({"seed": 11, "num_scenarios": 4, "num_actors": 12})";
  const char * config =
    "seed = 3\n[data]\nscenarios = \"scenes\"\n[train]\niterations = 100\nbatch_size = 64\n"
    "[output]\nmodel = \"model.json\"\nloss_curve = \"loss.csv\"\n";
  std::string failure;
  for (const char * run : {"a", "b"}) {
    const fs::path dir = root / run;
    fs::create_directories(dir);
    std::ofstream(dir / "spec.json") << spec;
    std::ofstream(dir / "train.toml") << config;
    for (const std::string args :
         {"generate --spec spec.json --out scenes", "rasterize --scenario scenes/scene_00002.json --out grid.bvg",
          "train train.toml --threads 2", "eval --model model.json --scenarios scenes --out report.csv",
          "calibrate --model model.json --scenarios scenes --out calibration"}) {
      if (run_cli(dir, args) != 0 && failure.empty()) {
        failure = "'" + args + "' failed: " + slurp(dir / "stderr.txt");
      }
    }
  }
  std::size_t compared = 0, differing = 0;
  for (const auto & entry : fs::recursive_directory_iterator(root / "a")) {
    const fs::path rel = fs::relative(entry.path(), root / "a");
    const std::string name = rel.filename().string();
    if (!entry.is_regular_file() || name.find("manifest") != std::string::npos || name == "stderr.txt") {
      continue;
    }
    ++compared;
    differing += slurp(entry.path()) == slurp(root / "b" / rel) ? 0 : 1;
  }
  fs::remove_all(root);
  if (!failure.empty()) {
    return {false, failure};
  }
  return {differing == 0 && compared >= 10,
          fmt("%zu artifacts compared, %zu differ", compared, differing)};
}

}  // namespace

int main()
{
  const std::vector<std::pair<const char *, std::function<Outcome()>>> criteria = {
    {"A1", a1_gradients},  {"A2", a2_laplace_kl},        {"A3", a3_rotated_iou}, {"A4", a4_average_precision},
    {"A5", a5_second_stage}, {"A6", a6_uncertainty_loss}, {"A7", a7_calibration}, {"A8", a8_modes},
    {"A9", a9_rasterizer}, {"A10", a10_determinism}};
  int failed = 0;
  for (const auto & [id, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception & e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %s %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
