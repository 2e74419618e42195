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

#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <regex>
#include <thread>

#include <json.hpp>

#include "bevmotion/error.hpp"
#include "bevmotion/evaluation.hpp"
#include "bevmotion/grid_io.hpp"
#include "bevmotion/report.hpp"
#include "bevmotion/scenario_io.hpp"
#include "bevmotion/toml_lite.hpp"
#include "bevmotion/trainer.hpp"

#ifndef BEVMOTION_VERSION
#define BEVMOTION_VERSION "0.0.0"
#endif

namespace bevmotion::cli
{

namespace
{

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Manifest
{
  std::string command;
  std::string config_text;
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  Clock::time_point start = Clock::now();
};

std::string hex64(std::uint64_t v)
{
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, v);
  return buf;
}

void write_manifest(const fs::path & path, const Manifest & m)
{
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["config_hash"] = "fnv1a64:" + hex64(fnv1a64(m.config_text));
  j["seed"] = m.seed;
  j["version"] = BEVMOTION_VERSION;
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  j["duration_s"] = std::chrono::duration<double>(Clock::now() - m.start).count();
  write_text_file(path, j.dump(2) + "\n");
}

fs::path manifest_path(const CommonOptions & common, const fs::path & fallback)
{
  return common.manifest.empty() ? fallback : fs::path(common.manifest);
}

// Runs body(i) for i in [0, n) on up to `threads` workers. Results must be written to
// per-index slots so the outcome does not depend on scheduling.
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body body)
{
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      body(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto & t : pool) {
    t.join();
  }
  for (const auto & e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
}

std::string scene_stem(std::size_t index)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%05zu", index);
  return buf;
}

fs::path resolve(const fs::path & base, const std::string & p)
{
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

// Scene sources ----------------------------------------------------------------------

struct DataSection
{
  std::string spec;
  std::string scenarios;
  std::size_t first_scene = 0;
  std::size_t num_scenes = 0;  // 0: all
  bool label_noise = false;
  DiversitySchedule noise;
  double outlier_fraction = 0.0;
  double outlier_magnitude = 0.0;
};

DataSection read_data_section(const TomlDocument & doc)
{
  DataSection d;
  d.spec = doc.get_string("data.spec", "");
  d.scenarios = doc.get_string("data.scenarios", "");
  d.first_scene = doc.get_uint("data.first_scene", 0);
  d.num_scenes = doc.get_uint("data.num_scenes", 0);
  d.label_noise = doc.get_bool("labels.noise", false);
  d.noise.alpha_at = doc.get_double("labels.alpha_at", d.noise.alpha_at);
  d.noise.beta_at = doc.get_double("labels.beta_at", d.noise.beta_at);
  d.noise.alpha_ct = doc.get_double("labels.alpha_ct", d.noise.alpha_ct);
  d.noise.beta_ct = doc.get_double("labels.beta_ct", d.noise.beta_ct);
  d.outlier_fraction = doc.get_double("labels.outlier_fraction", 0.0);
  d.outlier_magnitude = doc.get_double("labels.outlier_magnitude", 0.0);
  d.noise.validate(false);
  if (!(d.outlier_fraction >= 0.0 && d.outlier_fraction <= 1.0)) {
    throw ConfigError("config key 'labels.outlier_fraction': must lie in [0, 1]");
  }
  return d;
}

std::vector<LidarSweep> sweeps_from_pts(
  const Scenario & scenario, const std::vector<FrameSweep> & pts, std::size_t frame,
  std::size_t num_sweeps, const fs::path & where)
{
  std::vector<LidarSweep> sweeps;
  for (std::size_t k = 0; k < num_sweeps; ++k) {
    const std::size_t back = num_sweeps - 1 - k;
    const std::size_t f = frame >= back ? frame - back : 0;
    const auto it = std::find_if(pts.begin(), pts.end(), [&](const FrameSweep & s) { return s.frame == f; });
    if (it == pts.end()) {
      throw InputError(where.string() + ": no sweep for frame " + std::to_string(f));
    }
    LidarSweep sweep;
    sweep.timestamp = static_cast<double>(f) * scenario.dt();
    sweep.pose = scenario.sensor_pose(f);
    sweep.points = it->points;
    sweeps.push_back(std::move(sweep));
  }
  return sweeps;
}

fs::path pts_sidecar(const fs::path & scenario_path)
{
  fs::path p = scenario_path;
  p.replace_extension(".pts");
  return p;
}

std::vector<fs::path> list_scene_files(const fs::path & dir)
{
  if (!fs::is_directory(dir)) {
    throw InputError(dir.string() + ": not a scenario directory");
  }
  static const std::regex pattern(R"(scene_\d+\.json)");
  std::vector<fs::path> files;
  for (const auto & entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && std::regex_match(entry.path().filename().string(), pattern)) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw InputError(dir.string() + ": no scene_*.json files");
  }
  return files;
}

std::vector<SceneInput> load_scenes(
  const DataSection & data, const fs::path & base, std::size_t num_sweeps, unsigned threads,
  Manifest & manifest)
{
  if (data.spec.empty() == data.scenarios.empty()) {
    throw ConfigError("config: exactly one of 'data.spec' and 'data.scenarios' must be set");
  }
  std::vector<SceneInput> scenes;
  if (!data.spec.empty()) {
    const fs::path spec_path = resolve(base, data.spec);
    const ScenarioSpec spec = read_scenario_spec(spec_path);
    manifest.inputs.push_back(spec_path.string());
    const std::size_t n = data.num_scenes != 0 ? data.num_scenes : spec.num_scenarios;
    const SweepSettings settings = SweepSettings::from_spec(spec);
    scenes.resize(n);
    parallel_for(n, threads, [&](std::size_t i) {
      scenes[i] = simulate_scene(generate(spec, data.first_scene + i), num_sweeps, settings);
    });
  } else {
    const fs::path dir = resolve(base, data.scenarios);
    std::vector<fs::path> files = list_scene_files(dir);
    manifest.inputs.push_back(dir.string());
    if (data.first_scene >= files.size()) {
      throw ConfigError("config key 'data.first_scene': beyond the available scenes");
    }
    files.erase(files.begin(), files.begin() + static_cast<std::ptrdiff_t>(data.first_scene));
    if (data.num_scenes != 0 && data.num_scenes < files.size()) {
      files.resize(data.num_scenes);
    }
    scenes.resize(files.size());
    parallel_for(files.size(), threads, [&](std::size_t i) {
      SceneInput scene;
      scene.scenario = read_scenario(files[i]);
      const fs::path pts_path = pts_sidecar(files[i]);
      scene.sweeps = sweeps_from_pts(
        scene.scenario, read_pts(pts_path), scene.scenario.current_frame(), num_sweeps, pts_path);
      scenes[i] = std::move(scene);
    });
  }
  for (SceneInput & scene : scenes) {
    if (data.label_noise) {
      apply_label_noise(scene, data.noise);
    }
    if (data.outlier_fraction > 0.0) {
      apply_label_outliers(scene, data.outlier_fraction, data.outlier_magnitude);
    }
  }
  return scenes;
}

TomlDocument load_config(const std::string & path)
{
  if (path.empty()) {
    return TomlDocument::parse("");
  }
  return TomlDocument::parse(read_text_file(path));
}

fs::path config_base(const std::string & path)
{
  return path.empty() ? fs::current_path() : fs::path(path).parent_path();
}

PoseCorruption read_pose_corruption(const TomlDocument & doc)
{
  PoseCorruption c;
  c.position_sigma = doc.get_double("corruption.position_sigma", 0.0);
  c.heading_sigma = doc.get_double("corruption.heading_sigma", 0.0);
  return c;
}

std::vector<std::size_t> as_counts(const std::vector<double> & values, const char * key)
{
  std::vector<std::size_t> out;
  for (double v : values) {
    if (!(v >= 1.0) || v != std::floor(v)) {
      throw ConfigError(std::string("config key '") + key + "': entries must be positive integers");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

GridConfig read_grid(const std::string & path, std::string & canonical)
{
  GridConfig g;
  if (path.empty()) {
    canonical.clear();
    return g;
  }
  const TomlDocument doc = TomlDocument::parse(read_text_file(path));
  g.length_m = doc.get_double("grid.length_m", g.length_m);
  g.width_m = doc.get_double("grid.width_m", g.width_m);
  g.height_m = doc.get_double("grid.height_m", g.height_m);
  g.dl = doc.get_double("grid.dl", g.dl);
  g.dw = doc.get_double("grid.dw", g.dw);
  g.dv = doc.get_double("grid.dv", g.dv);
  g.num_sweeps = doc.get_int("grid.num_sweeps", g.num_sweeps);
  doc.reject_unused();
  g.validate();
  canonical = canonical_toml(doc);
  return g;
}

struct EvalSetup
{
  PredictionModel model;
  std::vector<SceneInput> scenes;
  bevmotion::EvalOptions options;
};

EvalSetup prepare_eval(
  const std::string & model_path, const std::string & config_path, const std::string & scenarios,
  const CommonOptions & common, Manifest & manifest)
{
  EvalSetup setup;
  setup.model = model_from_json(read_text_file(model_path));
  manifest.inputs.push_back(model_path);

  const TomlDocument doc = load_config(config_path);
  DataSection data = read_data_section(doc);
  if (!scenarios.empty()) {
    data.scenarios = scenarios;
    data.spec.clear();
  }
  bevmotion::EvalOptions & eo = setup.options;
  eo.target_recall = doc.get_double("eval.target_recall", eo.target_recall);
  eo.horizon_s = doc.get_double("eval.horizon_s", eo.horizon_s);
  eo.corruption.pose = read_pose_corruption(doc);
  eo.corruption.miss_rate = doc.get_double("corruption.miss_rate", 0.0);
  eo.corruption.false_positives_per_scene = doc.get_double("corruption.false_positives_per_scene", 0.0);
  eo.corruption.score_noise = doc.get_double("corruption.score_noise", 0.0);
  manifest.seed = common.seed.value_or(doc.get_uint("seed", 0));
  eo.seed = manifest.seed;
  eo.threads = common.threads;
  doc.reject_unused();
  eo.validate();
  manifest.config_text = canonical_toml(doc) + "scenarios=" + scenarios + "\n";

  const fs::path base = scenarios.empty() ? config_base(config_path) : fs::current_path();
  setup.scenes = load_scenes(
    data, base, static_cast<std::size_t>(setup.model.features.grid.num_sweeps), common.threads,
    manifest);
  return setup;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

int cmd_generate(const GenerateOptions & opts, const CommonOptions & common)
{
  Manifest manifest;
  manifest.command = "generate";
  const std::string text = read_text_file(opts.spec);
  ScenarioSpec spec = scenario_spec_from_json(text);
  if (common.seed) {
    spec.seed = *common.seed;
  }
  manifest.seed = spec.seed;
  manifest.config_text = nlohmann::json::parse(text).dump();
  manifest.inputs.push_back(opts.spec);

  const fs::path out(opts.out_dir);
  fs::create_directories(out);
  const SweepSettings settings = SweepSettings::from_spec(spec);
  parallel_for(spec.num_scenarios, common.threads, [&](std::size_t i) {
    const Scenario scenario = generate(spec, i);
    write_scenario(out / (scene_stem(i) + ".json"), scenario);
    std::vector<FrameSweep> sweeps;
    for (std::size_t f = 0; f < scenario.num_frames(); ++f) {
      sweeps.push_back({f, simulate_sweep(scenario, f, settings).points});
    }
    write_pts(out / (scene_stem(i) + ".pts"), sweeps);
  });
  for (std::size_t i = 0; i < spec.num_scenarios; ++i) {
    manifest.outputs.push_back((out / (scene_stem(i) + ".json")).string());
    manifest.outputs.push_back((out / (scene_stem(i) + ".pts")).string());
  }
  write_manifest(manifest_path(common, out / "manifest.json"), manifest);
  std::cerr << "generated " << spec.num_scenarios << " scenario(s) in " << out.string() << "\n";
  return kExitOk;
}

int cmd_rasterize(const RasterizeOptions & opts, const CommonOptions & common)
{
  Manifest manifest;
  manifest.command = "rasterize";
  std::string grid_text;
  const GridConfig grid = read_grid(opts.grid, grid_text);
  const Scenario scenario = read_scenario(opts.scenario);
  manifest.seed = common.seed.value_or(scenario.seed);
  manifest.inputs.push_back(opts.scenario);

  const std::int64_t frame = opts.frame.value_or(static_cast<std::int64_t>(scenario.current_frame()));
  if (frame < 0 || frame >= static_cast<std::int64_t>(scenario.num_frames())) {
    throw ConfigError(
      "frame " + std::to_string(frame) + " out of range [0, " + std::to_string(scenario.num_frames()) + ")");
  }
  const fs::path pts_path = opts.points.empty() ? pts_sidecar(opts.scenario) : fs::path(opts.points);
  manifest.inputs.push_back(pts_path.string());
  const auto f = static_cast<std::size_t>(frame);
  const auto sweeps = sweeps_from_pts(
    scenario, read_pts(pts_path), f, static_cast<std::size_t>(grid.num_sweeps), pts_path);
  const BevGrid bev = rasterize_sweeps(sweeps, scenario.sensor_pose(f), grid, common.threads);
  manifest.config_text = grid_text + "frame=" + std::to_string(frame) + "\n";

  if (opts.out == "-") {
    write_bvg(std::cout, bev);
    std::cout.flush();
    if (!common.manifest.empty()) {
      manifest.outputs.push_back("-");
      write_manifest(common.manifest, manifest);
    }
  } else {
    write_bvg(fs::path(opts.out), bev);
    manifest.outputs.push_back(opts.out);
    write_manifest(manifest_path(common, opts.out + ".manifest.json"), manifest);
  }
  const GridShape s = bev.shape();
  std::cerr << "grid " << s.rows << " x " << s.cols << " x " << s.channels << ", " << bev.popcount()
            << " occupied bits\n";
  return kExitOk;
}

int cmd_train(const TrainOptions & opts, const CommonOptions & common)
{
  Manifest manifest;
  manifest.command = "train";
  manifest.inputs.push_back(opts.config);
  const TomlDocument doc = TomlDocument::parse(read_text_file(opts.config));
  const fs::path base = config_base(opts.config);

  TrainConfig cfg;
  cfg.learning_rate = doc.get_double("train.learning_rate", cfg.learning_rate);
  cfg.iterations = doc.get_uint("train.iterations", cfg.iterations);
  cfg.batch_size = doc.get_uint("train.batch_size", cfg.batch_size);
  cfg.profile = loss_profile_from_name(doc.get_string("train.profile", "kl_laplace"));
  cfg.stage_mode = stage_mode_from_name(doc.get_string("train.stage_mode", "two_stage"));
  cfg.warmup_iterations = doc.get_uint("train.warmup_iterations", cfg.warmup_iterations);
  cfg.diversity_delay = doc.get_uint("train.diversity_delay", cfg.diversity_delay);
  cfg.schedule_scales = doc.get_double_array("train.schedule_scales", cfg.schedule_scales);
  cfg.validation_fraction = doc.get_double("train.validation_fraction", cfg.validation_fraction);
  cfg.initial_diversity = doc.get_double("train.initial_diversity", cfg.initial_diversity);
  cfg.divergence_threshold = doc.get_double("train.divergence_threshold", cfg.divergence_threshold);
  const auto modes = as_counts(
    doc.get_double_array("train.num_modes", {3.0, 1.0, 1.0}), "train.num_modes");
  if (modes.size() != kNumActorClasses) {
    throw ConfigError("config key 'train.num_modes': expected one entry per class (3)");
  }
  for (std::size_t c = 0; c < kNumActorClasses; ++c) {
    cfg.num_modes[c] = static_cast<int>(modes[c]);
  }
  cfg.schedule.alpha_at = doc.get_double("schedule.alpha_at", cfg.schedule.alpha_at);
  cfg.schedule.beta_at = doc.get_double("schedule.beta_at", cfg.schedule.beta_at);
  cfg.schedule.alpha_ct = doc.get_double("schedule.alpha_ct", cfg.schedule.alpha_ct);
  cfg.schedule.beta_ct = doc.get_double("schedule.beta_ct", cfg.schedule.beta_ct);
  cfg.weights.lambda_decay = doc.get_double("weights.lambda_decay", cfg.weights.lambda_decay);
  cfg.weights.gamma_focal = doc.get_double("weights.gamma_focal", cfg.weights.gamma_focal);
  const PoseCorruption corruption = read_pose_corruption(doc);
  const DataSection data = read_data_section(doc);
  const fs::path model_path = resolve(base, doc.get_string("output.model", "model.json"));
  const fs::path curve_path = resolve(base, doc.get_string("output.loss_curve", "loss.csv"));
  manifest.seed = common.seed.value_or(doc.get_uint("seed", 0));
  cfg.seed = manifest.seed;
  doc.reject_unused();
  cfg.validate();
  corruption.validate();
  manifest.config_text = canonical_toml(doc);

  const auto scenes = load_scenes(
    data, base, static_cast<std::size_t>(cfg.features.grid.num_sweeps), common.threads, manifest);
  DatasetOptions dopt;
  dopt.features = cfg.features;
  dopt.corruption = corruption;
  dopt.seed = cfg.seed;
  dopt.threads = common.threads;
  const auto dataset = build_dataset(scenes, dopt);
  const TrainResult result = train(dataset, cfg);

  write_text_file(model_path, model_to_json(result.model));
  write_text_file(curve_path, loss_curve_csv(result.loss_curve));
  manifest.outputs = {model_path.string(), curve_path.string()};
  write_manifest(manifest_path(common, model_path.string() + ".manifest.json"), manifest);
  std::cerr << "trained on " << dataset.size() << " actors, loss " << result.loss_curve.front()
            << " -> " << result.loss_curve.back() << ", schedule scale " << result.selected_scale << "\n";
  return kExitOk;
}

int cmd_eval(const EvalOptions & opts, const CommonOptions & common)
{
  Manifest manifest;
  manifest.command = "eval";
  EvalSetup setup = prepare_eval(opts.model, opts.config, opts.scenarios, common, manifest);
  const EvalReport report = evaluate(setup.model, setup.scenes, setup.options);
  const std::string csv = report_csv(report);
  if (opts.out == "-") {
    std::cout << csv;
    std::cout.flush();
    if (!common.manifest.empty()) {
      manifest.outputs.push_back("-");
      write_manifest(common.manifest, manifest);
    }
  } else {
    write_text_file(opts.out, csv);
    manifest.outputs.push_back(opts.out);
    write_manifest(manifest_path(common, opts.out + ".manifest.json"), manifest);
  }
  std::cerr << report_table(report);
  return kExitOk;
}

int cmd_calibrate(const CalibrateOptions & opts, const CommonOptions & common)
{
  Manifest manifest;
  manifest.command = "calibrate";
  EvalSetup setup = prepare_eval(opts.model, opts.config, opts.scenarios, common, manifest);
  const EvalReport report = evaluate(setup.model, setup.scenes, setup.options);
  const fs::path out(opts.out_dir);
  fs::create_directories(out);
  const auto levels = default_calibration_levels();
  for (const ClassReport & cr : report.classes) {
    const std::string name(actor_class_name(cr.cls));
    if (cr.pairs.empty()) {
      std::cerr << name << ": no true positives, skipped\n";
      continue;
    }
    const ReliabilityCurves curves = reliability_diagram(cr.pairs, report.horizon_index, levels);
    for (const Axis axis : {Axis::kAlongTrack, Axis::kCrossTrack}) {
      const auto & curve = axis == Axis::kAlongTrack ? curves.along_track : curves.cross_track;
      const std::string stem = "calibration_" + name + "_" + std::string(axis_name(axis));
      write_text_file(out / (stem + ".csv"), calibration_csv(cr.cls, axis, curve, cr.pairs.size()));
      write_text_file(
        out / (stem + ".svg"), reliability_svg(name + " " + std::string(axis_name(axis)), curve));
      manifest.outputs.push_back((out / (stem + ".csv")).string());
      manifest.outputs.push_back((out / (stem + ".svg")).string());
    }
    std::cerr << name << ": " << cr.pairs.size() << " actors, max calibration gap "
              << max_calibration_gap(curves) << "\n";
  }
  write_manifest(manifest_path(common, out / "manifest.json"), manifest);
  return kExitOk;
}

}  // namespace bevmotion::cli
