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

#include "bevmotion/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bevmotion/error.hpp"
#include "bevmotion/rng.hpp"

namespace bevmotion
{
namespace
{

using Json = nlohmann::ordered_json;

constexpr std::array<std::string_view, 2> kStageModeNames = {"first_only", "two_stage"};
constexpr std::size_t kOutputsPerHorizon = 6;
// First-stage offsets enter the second stage in units of this many meters.
constexpr double kOffsetScale = 10.0;

// Position outputs are expressed in units of (1 + t) meters so that one gradient step moves
// near and far waypoints by comparable amounts.
double position_unit(std::size_t h, double dt) { return 1.0 + static_cast<double>(h + 1) * dt; }

// Diversity pre-activations use a larger unit as well; otherwise b-hat lags far behind the
// shrinking errors and slows the location fit, whose gradient scales with 1 / b-hat.
constexpr double kDiversityUnit = 3.0;

std::size_t stage2_horizon(std::size_t j, std::size_t horizon)
{
  const std::size_t k = ((j + 1) * horizon + 1) / 3;
  return std::max<std::size_t>(k, 1) - 1;
}

struct Workspace
{
  std::array<double, kNumFeatures> x1{};
  std::vector<double> y1;
  std::vector<WaypointPrediction> p1;
  std::vector<WaypointPrediction> g1;
  std::array<double, kStage2Inputs> x2{};
  std::vector<std::vector<double>> y2;
  std::vector<std::vector<WaypointPrediction>> modes;
  std::vector<double> logits;
  std::vector<double> dy1;
  std::vector<double> dy2;
  std::array<double, kStage2Inputs> dx2{};
};

void matvec(const Matrix & w, std::span<const double> x, std::vector<double> & y)
{
  y.assign(w.rows, 0.0);
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double * row = &w.data[r * w.cols];
    double acc = 0.0;
    for (std::size_t c = 0; c < w.cols; ++c) {
      acc += row[c] * x[c];
    }
    y[r] = acc;
  }
}

// w_grad += scale * dy x^T
void outer_add(Matrix & w_grad, std::span<const double> dy, std::span<const double> x, double scale)
{
  for (std::size_t r = 0; r < w_grad.rows; ++r) {
    const double d = dy[r] * scale;
    if (d == 0.0) {
      continue;
    }
    double * row = &w_grad.data[r * w_grad.cols];
    for (std::size_t c = 0; c < w_grad.cols; ++c) {
      row[c] += d * x[c];
    }
  }
}

// Forward pass for one actor. Fills first-stage predictions always and second-stage modes
// when `two_stage`.
void forward(
  const ClassHead & head, const FeatureVector & f, const Waypoint & anchor, std::size_t horizon,
  double dt, bool two_stage, Workspace & ws)
{
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    ws.x1[i] = (f.values[i] - head.feature_mean[i]) / head.feature_scale[i];
  }
  matvec(head.stage1, ws.x1, ws.y1);
  ws.p1.resize(horizon);
  for (std::size_t h = 0; h < horizon; ++h) {
    const double * y = &ws.y1[h * kOutputsPerHorizon];
    const double u = position_unit(h, dt);
    ws.p1[h] = {anchor.cx + u * y[0], anchor.cy + u * y[1], y[2], y[3],
                kDiversityUnit * y[4], kDiversityUnit * y[5]};
  }
  if (!two_stage) {
    return;
  }
  const double c = std::cos(anchor.heading);
  const double s = std::sin(anchor.heading);
  std::copy_n(ws.x1.begin(), kNumInvariantFeatures, ws.x2.begin());
  for (std::size_t j = 0; j < 3; ++j) {
    const std::size_t k = stage2_horizon(j, horizon);
    const double u = position_unit(k, dt);
    const double ox = u * ws.y1[k * kOutputsPerHorizon];
    const double oy = u * ws.y1[k * kOutputsPerHorizon + 1];
    ws.x2[kNumInvariantFeatures + 2 * j] = (c * ox + s * oy) / kOffsetScale;
    ws.x2[kNumInvariantFeatures + 2 * j + 1] = (-s * ox + c * oy) / kOffsetScale;
  }
  const std::size_t m_count = head.stage2.size();
  ws.y2.resize(m_count);
  ws.modes.resize(m_count);
  ws.logits.resize(m_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    matvec(head.stage2[m], ws.x2, ws.y2[m]);
    auto & mode = ws.modes[m];
    mode.resize(horizon);
    for (std::size_t h = 0; h < horizon; ++h) {
      const double * y = &ws.y2[m][h * kOutputsPerHorizon];
      const double u = position_unit(h, dt);
      mode[h] = {anchor.cx + u * (c * y[0] - s * y[1]), anchor.cy + u * (s * y[0] + c * y[1]),
                 s * y[3] + c * y[2],             c * y[3] - s * y[2],
                 kDiversityUnit * y[4],           kDiversityUnit * y[5]};
    }
    ws.logits[m] = ws.y2[m][horizon * kOutputsPerHorizon];
  }
}

// Loss of one sample; accumulates scaled parameter gradients into `grad` when given.
double sample_loss(
  const ClassHead & head, const Sample & sample, bool clean, std::size_t horizon, double dt,
  const TrainConfig & config, const DiversitySchedule & schedule, ClassHead * grad, double scale,
  Workspace & ws)
{
  const FeatureVector & f = clean ? sample.clean_features : sample.noisy_features;
  const Waypoint & anchor = clean ? sample.clean_anchor : sample.noisy_anchor;
  const bool two_stage = config.stage_mode == StageMode::kTwoStage;
  forward(head, f, anchor, horizon, dt, two_stage, ws);

  ws.g1.resize(horizon);
  std::span<WaypointPrediction> g1_span;
  if (grad != nullptr) {
    g1_span = ws.g1;
  }
  double loss = trajectory_loss(
    ws.p1, sample.target.waypoints, 1, dt, config.profile, schedule, config.weights, g1_span);
  if (grad != nullptr) {
    ws.dy1.assign(horizon * kOutputsPerHorizon, 0.0);
    for (std::size_t h = 0; h < horizon; ++h) {
      const WaypointPrediction & g = ws.g1[h];
      double * d = &ws.dy1[h * kOutputsPerHorizon];
      const double u = position_unit(h, dt);
      d[0] = u * g.cx;
      d[1] = u * g.cy;
      d[2] = g.sin_heading;
      d[3] = g.cos_heading;
      d[4] = kDiversityUnit * g.raw_b_at;
      d[5] = kDiversityUnit * g.raw_b_ct;
    }
  }
  if (two_stage) {
    const MultimodalLossResult r = multimodal_loss(
      ws.modes, ws.logits, sample.current_truth, sample.target, config.profile, schedule,
      config.weights);
    loss += r.value;
    if (grad != nullptr) {
      const double c = std::cos(anchor.heading);
      const double s = std::sin(anchor.heading);
      ws.dx2.fill(0.0);
      for (std::size_t m = 0; m < head.stage2.size(); ++m) {
        ws.dy2.assign(horizon * kOutputsPerHorizon + 1, 0.0);
        const auto & gm = r.grad_modes[m];
        for (std::size_t h = 0; h < horizon && h < gm.size(); ++h) {
          const WaypointPrediction & g = gm[h];
          double * d = &ws.dy2[h * kOutputsPerHorizon];
          const double u = position_unit(h, dt);
          d[0] = u * (c * g.cx + s * g.cy);
          d[1] = u * (-s * g.cx + c * g.cy);
          d[2] = c * g.sin_heading - s * g.cos_heading;
          d[3] = s * g.sin_heading + c * g.cos_heading;
          d[4] = kDiversityUnit * g.raw_b_at;
          d[5] = kDiversityUnit * g.raw_b_ct;
        }
        ws.dy2[horizon * kOutputsPerHorizon] = r.grad_mode_params[m];
        outer_add(grad->stage2[m], ws.dy2, ws.x2, scale);
        const Matrix & w = head.stage2[m];
        for (std::size_t row = 0; row < w.rows; ++row) {
          const double d = ws.dy2[row];
          if (d == 0.0) {
            continue;
          }
          for (std::size_t col = kNumInvariantFeatures; col < kStage2Inputs; ++col) {
            ws.dx2[col] += w.at(row, col) * d;
          }
        }
      }
      // Second-stage gradients flow back into the first-stage offsets it consumed.
      for (std::size_t j = 0; j < 3; ++j) {
        const std::size_t k = stage2_horizon(j, horizon);
        const double u = position_unit(k, dt) / kOffsetScale;
        const double da = ws.dx2[kNumInvariantFeatures + 2 * j] * u;
        const double dl = ws.dx2[kNumInvariantFeatures + 2 * j + 1] * u;
        ws.dy1[k * kOutputsPerHorizon] += c * da - s * dl;
        ws.dy1[k * kOutputsPerHorizon + 1] += s * da + c * dl;
      }
    }
  }
  if (grad != nullptr) {
    outer_add(grad->stage1, ws.dy1, ws.x1, scale);
  }
  return loss;
}

PredictionModel zero_like(const PredictionModel & model)
{
  PredictionModel g = model;
  for (ClassHead & h : g.heads) {
    std::fill(h.stage1.data.begin(), h.stage1.data.end(), 0.0);
    for (Matrix & m : h.stage2) {
      std::fill(m.data.begin(), m.data.end(), 0.0);
    }
  }
  return g;
}

// Zeroes the gradient rows of every diversity output.
void freeze_diversity(PredictionModel & grad, std::size_t horizon)
{
  const auto clear_rows = [horizon](Matrix & m) {
    for (std::size_t h = 0; h < horizon; ++h) {
      for (std::size_t r = h * kOutputsPerHorizon + 4; r < (h + 1) * kOutputsPerHorizon; ++r) {
        std::fill_n(m.data.begin() + static_cast<std::ptrdiff_t>(r * m.cols), m.cols, 0.0);
      }
    }
  };
  for (ClassHead & h : grad.heads) {
    clear_rows(h.stage1);
    for (Matrix & m : h.stage2) {
      clear_rows(m);
    }
  }
}

void axpy(PredictionModel & model, const PredictionModel & grad, double step)
{
  for (std::size_t c = 0; c < kNumActorClasses; ++c) {
    auto & h = model.heads[c];
    const auto & g = grad.heads[c];
    for (std::size_t i = 0; i < h.stage1.data.size(); ++i) {
      h.stage1.data[i] -= step * g.stage1.data[i];
    }
    for (std::size_t m = 0; m < h.stage2.size(); ++m) {
      for (std::size_t i = 0; i < h.stage2[m].data.size(); ++i) {
        h.stage2[m].data[i] -= step * g.stage2[m].data[i];
      }
    }
  }
}

PredictionModel initialize_on(
  std::span<const Sample> dataset, std::span<const std::size_t> indices, const TrainConfig & config)
{
  if (indices.empty()) {
    throw ArgumentError("train: empty dataset");
  }
  PredictionModel model;
  const Sample & first = dataset[indices.front()];
  model.horizon = first.target.size();
  model.horizon_dt = first.target.horizon_dt;
  model.stage_mode = config.stage_mode;
  model.profile = config.profile;
  model.schedule = config.schedule;
  model.features = config.features;
  const std::size_t horizon = model.horizon;
  const double raw_b = softplus_inverse(config.initial_diversity) / kDiversityUnit;

  for (std::size_t ci = 0; ci < kNumActorClasses; ++ci) {
    ClassHead & head = model.heads[ci];
    head.num_modes = config.num_modes[ci];
    std::array<double, kNumFeatures> sum{};
    std::array<double, kNumFeatures> sq{};
    std::size_t n = 0;
    for (const std::size_t i : indices) {
      const Sample & s = dataset[i];
      if (class_index(s.cls) != ci) {
        continue;
      }
      ++n;
      for (std::size_t k = 0; k < kNumFeatures; ++k) {
        sum[k] += s.clean_features.values[k];
        sq[k] += s.clean_features.values[k] * s.clean_features.values[k];
      }
    }
    head.num_samples = n;
    for (std::size_t k = 0; k < kNumFeatures; ++k) {
      head.feature_mean[k] = 0.0;
      head.feature_scale[k] = 1.0;
      if (k == 0 || n == 0) {
        continue;  // bias stays 1
      }
      const double mean = sum[k] / static_cast<double>(n);
      const double var = std::max(0.0, sq[k] / static_cast<double>(n) - mean * mean);
      head.feature_mean[k] = mean;
      head.feature_scale[k] = std::sqrt(var) > 1e-9 ? std::sqrt(var) : 1.0;
    }
    head.stage1 = Matrix(horizon * kOutputsPerHorizon, kNumFeatures);
    for (std::size_t h = 0; h < horizon; ++h) {
      head.stage1.at(h * kOutputsPerHorizon + 3, 0) = 1.0;
      head.stage1.at(h * kOutputsPerHorizon + 4, 0) = raw_b;
      head.stage1.at(h * kOutputsPerHorizon + 5, 0) = raw_b;
    }
    head.stage2.clear();
    if (config.stage_mode == StageMode::kTwoStage) {
      for (int m = 0; m < head.num_modes; ++m) {
        Matrix w(horizon * kOutputsPerHorizon + 1, kStage2Inputs);
        for (std::size_t h = 0; h < horizon; ++h) {
          w.at(h * kOutputsPerHorizon + 3, 0) = 1.0;
          w.at(h * kOutputsPerHorizon + 4, 0) = raw_b;
          w.at(h * kOutputsPerHorizon + 5, 0) = raw_b;
        }
        head.stage2.push_back(std::move(w));
      }
    }
  }
  return model;
}

double loss_on(
  const PredictionModel & model, std::span<const Sample> dataset, std::span<const std::size_t> indices,
  bool clean, const TrainConfig & config, PredictionModel * grad, Workspace & ws)
{
  if (indices.empty()) {
    return 0.0;
  }
  TrainConfig effective = config;
  effective.stage_mode = model.stage_mode;
  effective.profile = model.profile;
  const double scale = 1.0 / static_cast<double>(indices.size());
  double total = 0.0;
  for (const std::size_t i : indices) {
    const Sample & s = dataset[i];
    if (s.target.size() != model.horizon) {
      throw ArgumentError("train: samples disagree on the prediction horizon");
    }
    const std::size_t ci = class_index(s.cls);
    total += sample_loss(
      model.heads[ci], s, clean, model.horizon, model.horizon_dt, effective, model.schedule,
      grad != nullptr ? &grad->heads[ci] : nullptr, scale, ws);
  }
  return total * scale;
}

struct RunOutput
{
  PredictionModel model;
  std::vector<double> curve;
};

RunOutput run_descent(
  std::span<const Sample> dataset, std::span<const std::size_t> indices, const TrainConfig & config,
  const DiversitySchedule & schedule)
{
  RunOutput out{initialize_on(dataset, indices, config), {}};
  out.model.schedule = schedule;
  PredictionModel grad = zero_like(out.model);
  Workspace ws;
  std::vector<std::size_t> batch;
  const bool full = config.batch_size == 0 || config.batch_size >= indices.size();
  out.curve.reserve(config.iterations);
  for (std::size_t it = 0; it < config.iterations; ++it) {
    std::span<const std::size_t> active = indices;
    if (!full) {
      CounterRng rng(config.seed, RngStream::kTraining, it);
      batch.resize(config.batch_size);
      for (std::size_t& b : batch) {
        b = indices[rng.uniform_index(indices.size())];
      }
      active = batch;
    }
    grad = zero_like(out.model);
    const bool clean = it < config.warmup_iterations;
    const double loss = loss_on(out.model, dataset, active, clean, config, &grad, ws);
    if (!std::isfinite(loss) || loss > config.divergence_threshold) {
      std::ostringstream msg;
      msg << "training diverged at iteration " << it << " (loss " << loss
          << "); lower learning_rate (currently " << config.learning_rate << ")";
      throw RuntimeFailure(msg.str());
    }
    out.curve.push_back(loss);
    if (it < config.diversity_delay) {
      freeze_diversity(grad, out.model.horizon);
    }
    axpy(out.model, grad, config.learning_rate);
  }
  return out;
}

Waypoint to_waypoint(const WaypointPrediction & p)
{
  return {p.cx, p.cy, std::atan2(p.sin_heading, p.cos_heading)};
}

PredictedMode to_mode(std::span<const WaypointPrediction> preds, double dt, double probability)
{
  PredictedMode mode;
  mode.trajectory.horizon_dt = dt;
  mode.probability = probability;
  for (const WaypointPrediction & p : preds) {
    mode.trajectory.waypoints.push_back(to_waypoint(p));
    mode.distribution.b_at.push_back(softplus(p.raw_b_at).value);
    mode.distribution.b_ct.push_back(softplus(p.raw_b_ct).value);
  }
  return mode;
}

Json matrix_json(const Matrix & m)
{
  return Json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

Matrix matrix_from(const Json & j, std::size_t rows, std::size_t cols, const std::string & where)
{
  Matrix m;
  try {
    m.rows = j.at("rows").get<std::size_t>();
    m.cols = j.at("cols").get<std::size_t>();
    m.data = j.at("data").get<std::vector<double>>();
  } catch (const nlohmann::json::exception & e) {
    throw InputError("model: malformed matrix at " + where + ": " + e.what());
  }
  if (m.rows != rows || m.cols != cols || m.data.size() != rows * cols) {
    throw InputError("model: matrix at " + where + " has the wrong shape");
  }
  return m;
}

}  // namespace

std::string_view stage_mode_name(StageMode mode) { return kStageModeNames[static_cast<std::size_t>(mode)]; }

StageMode stage_mode_from_name(std::string_view name)
{
  for (std::size_t i = 0; i < kStageModeNames.size(); ++i) {
    if (kStageModeNames[i] == name) {
      return static_cast<StageMode>(i);
    }
  }
  throw ConfigError(
    "unknown stage mode '" + std::string(name) + "' (valid: first_only, two_stage)");
}

void PoseCorruption::validate() const
{
  if (!(position_sigma >= 0.0) || !(heading_sigma >= 0.0)) {
    throw ConfigError("corruption: sigmas must be >= 0");
  }
}

Trajectory SceneInput::future(std::size_t actor) const
{
  if (!label_futures.empty()) {
    return label_futures.at(actor);
  }
  return scenario.future_of(scenario.actors.at(actor));
}

SceneInput simulate_scene(Scenario scenario, std::size_t num_sweeps, const SweepSettings & settings)
{
  SceneInput scene;
  scene.sweeps = simulate_sweeps(scenario, scenario.current_frame(), num_sweeps, settings);
  scene.scenario = std::move(scenario);
  return scene;
}

void apply_label_noise(SceneInput & scene, const DiversitySchedule & schedule)
{
  scene.label_futures = perturb_labels(scene.scenario, schedule);
}

void apply_label_outliers(SceneInput & scene, double fraction, double magnitude)
{
  if (scene.label_futures.empty()) {
    for (const ActorTrack & a : scene.scenario.actors) {
      scene.label_futures.push_back(scene.scenario.future_of(a));
    }
  }
  inject_lateral_outliers(scene.label_futures, fraction, magnitude, scene.scenario.seed);
}

ObservedActor corrupt_history(
  const ObservedActor & actor, const PoseCorruption & corruption, std::uint64_t seed,
  std::uint64_t scene_seed, std::uint64_t actor_id)
{
  if (corruption.is_identity()) {
    return actor;
  }
  CounterRng rng(seed, RngStream::kDetectionCorruption, scene_seed, actor_id);
  const double dx = corruption.position_sigma * rng.normal();
  const double dy = corruption.position_sigma * rng.normal();
  const double dyaw = corruption.heading_sigma * rng.normal();
  return jitter(actor, {dx, dy}, dyaw);
}

std::vector<Sample> build_dataset(std::span<const SceneInput> scenes, const DatasetOptions & options)
{
  options.features.validate();
  options.corruption.validate();
  std::vector<std::vector<Sample>> per_scene(scenes.size());
  const auto work = [&](std::size_t si) {
    const SceneInput & scene = scenes[si];
    const Scenario & sc = scene.scenario;
    const std::size_t frame = sc.current_frame();
    const SceneContext ctx = build_scene_context(sc, frame, scene.sweeps, options.features);
    for (std::size_t a = 0; a < sc.actors.size(); ++a) {
      const ObservedActor clean = observe(sc, a, frame);
      const ObservedActor noisy =
        corrupt_history(clean, options.corruption, options.seed, sc.seed, sc.actors[a].id);
      const auto fc = extract_features(clean, ctx, options.features);
      const auto fn = extract_features(noisy, ctx, options.features);
      if (!fc || !fn) {
        continue;
      }
      Sample s;
      s.scene = si;
      s.actor = a;
      s.cls = sc.actors[a].cls;
      s.clean_features = *fc;
      s.noisy_features = *fn;
      s.clean_anchor = clean.current();
      s.noisy_anchor = noisy.current();
      s.current_truth = sc.current_of(sc.actors[a]);
      s.target = scene.future(a);
      per_scene[si].push_back(std::move(s));
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(scenes.size())));
  if (threads <= 1) {
    for (std::size_t i = 0; i < scenes.size(); ++i) {
      work(i);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = next++; i < scenes.size(); i = next++) {
            work(i);
          }
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (std::thread & th : pool) {
      th.join();
    }
    for (const auto & e : errors) {
      if (e) {
        std::rethrow_exception(e);
      }
    }
  }
  std::vector<Sample> out;
  for (auto & v : per_scene) {
    std::move(v.begin(), v.end(), std::back_inserter(out));
  }
  return out;
}

void TrainConfig::validate() const
{
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("train.learning_rate must be positive");
  }
  if (iterations < 1) {
    throw ConfigError("train.iterations must be >= 1");
  }
  schedule.validate(true);
  weights.validate();
  if (schedule_scales.empty()) {
    throw ConfigError("train.schedule_scales must not be empty");
  }
  for (const double s : schedule_scales) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw ConfigError("train.schedule_scales entries must be positive");
    }
  }
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("train.validation_fraction must lie in (0, 1)");
  }
  for (const int m : num_modes) {
    if (m < 1 || m > 16) {
      throw ConfigError("train.num_modes entries must lie in [1, 16]");
    }
  }
  if (!(initial_diversity > kSoftplusFloor)) {
    throw ConfigError("train.initial_diversity must exceed the softplus floor");
  }
  if (!(divergence_threshold > 0.0)) {
    throw ConfigError("train.divergence_threshold must be positive");
  }
}

MultimodalPrediction PredictionModel::predict(
  ActorClass cls, const FeatureVector & features, const Waypoint & anchor) const
{
  const ClassHead & head = heads[class_index(cls)];
  const bool two_stage = stage_mode == StageMode::kTwoStage && !head.stage2.empty();
  Workspace ws;
  forward(head, features, anchor, horizon, horizon_dt, two_stage, ws);
  MultimodalPrediction out;
  if (!two_stage) {
    out.modes.push_back(to_mode(ws.p1, horizon_dt, 1.0));
    return out;
  }
  const std::vector<double> probs = softmax(ws.logits);
  for (std::size_t m = 0; m < ws.modes.size(); ++m) {
    out.modes.push_back(to_mode(ws.modes[m], horizon_dt, probs[m]));
  }
  return out;
}

PredictionModel initialize_model(std::span<const Sample> dataset, const TrainConfig & config)
{
  std::vector<std::size_t> all(dataset.size());
  std::iota(all.begin(), all.end(), 0);
  return initialize_on(dataset, all, config);
}

double batch_loss(
  const PredictionModel & model, std::span<const Sample> dataset, std::span<const std::size_t> indices,
  bool clean, const TrainConfig & config, PredictionModel * grad)
{
  Workspace ws;
  return loss_on(model, dataset, indices, clean, config, grad, ws);
}

std::vector<PredictionPair> predict_samples(
  const PredictionModel & model, std::span<const Sample> dataset, bool clean)
{
  std::vector<PredictionPair> out;
  out.reserve(dataset.size());
  for (const Sample & s : dataset) {
    out.push_back(
      {model.predict(s.cls, clean ? s.clean_features : s.noisy_features,
                     clean ? s.clean_anchor : s.noisy_anchor),
       s.target});
  }
  return out;
}

TrainResult train(std::span<const Sample> dataset, const TrainConfig & config)
{
  config.validate();
  if (dataset.empty()) {
    throw ArgumentError("train: empty dataset");
  }
  std::vector<std::size_t> all(dataset.size());
  std::iota(all.begin(), all.end(), 0);
  TrainResult result;
  if (config.schedule_scales.size() == 1 || !is_uncertainty_profile(config.profile)) {
    const double scale = config.schedule_scales.front();
    RunOutput run = run_descent(dataset, all, config, config.schedule.scaled(scale));
    result.model = std::move(run.model);
    result.loss_curve = std::move(run.curve);
    result.selected_scale = scale;
    return result;
  }

  // Hold out the last scenes for choosing the schedule scale by calibration.
  std::size_t num_scenes = 0;
  for (const Sample & s : dataset) {
    num_scenes = std::max(num_scenes, s.scene + 1);
  }
  const auto held_out = static_cast<std::size_t>(
    std::max(1.0, std::round(config.validation_fraction * static_cast<double>(num_scenes))));
  if (held_out >= num_scenes) {
    throw ArgumentError("train: schedule selection needs at least two scenes");
  }
  const std::size_t first_val = num_scenes - held_out;
  std::vector<std::size_t> train_idx;
  std::vector<Sample> validation;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset[i].scene < first_val) {
      train_idx.push_back(i);
    } else {
      validation.push_back(dataset[i]);
    }
  }
  if (train_idx.empty() || validation.empty()) {
    throw ArgumentError("train: schedule selection split left an empty side");
  }
  const bool clean_eval = config.iterations <= config.warmup_iterations;
  const auto levels = default_calibration_levels();
  double best_gap = std::numeric_limits<double>::infinity();
  for (const double scale : config.schedule_scales) {
    RunOutput run = run_descent(dataset, train_idx, config, config.schedule.scaled(scale));
    const auto pairs = predict_samples(run.model, validation, clean_eval);
    const double gap = max_calibration_gap(reliability_diagram(pairs, run.model.horizon - 1, levels));
    result.candidates.push_back({scale, gap});
    if (gap < best_gap) {
      best_gap = gap;
      result.model = std::move(run.model);
      result.loss_curve = std::move(run.curve);
      result.selected_scale = scale;
    }
  }
  return result;
}

std::string model_to_json(const PredictionModel & model)
{
  Json doc;
  doc["format"] = "bevmotion-model";
  doc["version"] = kModelVersion;
  doc["horizon"] = model.horizon;
  doc["horizon_dt"] = model.horizon_dt;
  doc["stage_mode"] = std::string(stage_mode_name(model.stage_mode));
  doc["profile"] = std::string(loss_profile_name(model.profile));
  doc["schedule"] = Json{
    {"alpha_at", model.schedule.alpha_at},
    {"beta_at", model.schedule.beta_at},
    {"alpha_ct", model.schedule.alpha_ct},
    {"beta_ct", model.schedule.beta_ct}};
  const FeatureOptions & f = model.features;
  doc["features"] = Json{
    {"grid",
     {{"length_m", f.grid.length_m},
      {"width_m", f.grid.width_m},
      {"height_m", f.grid.height_m},
      {"dl", f.grid.dl},
      {"dw", f.grid.dw},
      {"dv", f.grid.dv},
      {"num_sweeps", f.grid.num_sweeps}}},
    {"rroi_crop_m", f.rroi_crop_m},
    {"rroi_cells", f.rroi_cells},
    {"intersection_cap_m", f.intersection_cap_m},
    {"yaw_window", f.yaw_window}};
  Json names = Json::array();
  for (const auto n : kFeatureNames) {
    names.push_back(std::string(n));
  }
  doc["feature_names"] = std::move(names);
  Json heads = Json::object();
  for (std::size_t ci = 0; ci < kNumActorClasses; ++ci) {
    const ClassHead & h = model.heads[ci];
    Json j;
    j["num_modes"] = h.num_modes;
    j["num_samples"] = h.num_samples;
    j["feature_mean"] = h.feature_mean;
    j["feature_scale"] = h.feature_scale;
    j["stage1"] = matrix_json(h.stage1);
    Json s2 = Json::array();
    for (const Matrix & m : h.stage2) {
      s2.push_back(matrix_json(m));
    }
    j["stage2"] = std::move(s2);
    heads[std::string(actor_class_name(kAllActorClasses[ci]))] = std::move(j);
  }
  doc["heads"] = std::move(heads);
  return doc.dump(1) + "\n";
}

PredictionModel model_from_json(std::string_view text)
{
  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::exception & e) {
    throw InputError(std::string("model: invalid JSON: ") + e.what());
  }
  PredictionModel model;
  try {
    if (doc.at("format").get<std::string>() != "bevmotion-model" ||
        doc.at("version").get<int>() != kModelVersion) {
      throw InputError("model: unsupported format or version");
    }
    model.horizon = doc.at("horizon").get<std::size_t>();
    model.horizon_dt = doc.at("horizon_dt").get<double>();
    model.stage_mode = stage_mode_from_name(doc.at("stage_mode").get<std::string>());
    model.profile = loss_profile_from_name(doc.at("profile").get<std::string>());
    const Json & s = doc.at("schedule");
    model.schedule = {
      s.at("alpha_at").get<double>(), s.at("beta_at").get<double>(), s.at("alpha_ct").get<double>(),
      s.at("beta_ct").get<double>()};
    const Json & f = doc.at("features");
    const Json & g = f.at("grid");
    model.features.grid = {
      g.at("length_m").get<double>(), g.at("width_m").get<double>(), g.at("height_m").get<double>(),
      g.at("dl").get<double>(),       g.at("dw").get<double>(),      g.at("dv").get<double>(),
      g.at("num_sweeps").get<std::int64_t>()};
    model.features.rroi_crop_m = f.at("rroi_crop_m").get<double>();
    model.features.rroi_cells = f.at("rroi_cells").get<std::size_t>();
    model.features.intersection_cap_m = f.at("intersection_cap_m").get<double>();
    model.features.yaw_window = f.at("yaw_window").get<std::size_t>();
    if (doc.at("feature_names").size() != kNumFeatures) {
      throw InputError("model: feature count mismatch");
    }
    if (model.horizon < 1 || !(model.horizon_dt > 0.0)) {
      throw InputError("model: invalid horizon");
    }
    const Json & heads = doc.at("heads");
    for (std::size_t ci = 0; ci < kNumActorClasses; ++ci) {
      const std::string name(actor_class_name(kAllActorClasses[ci]));
      const Json & j = heads.at(name);
      ClassHead & h = model.heads[ci];
      h.num_modes = j.at("num_modes").get<int>();
      h.num_samples = j.at("num_samples").get<std::size_t>();
      h.feature_mean = j.at("feature_mean").get<std::array<double, kNumFeatures>>();
      h.feature_scale = j.at("feature_scale").get<std::array<double, kNumFeatures>>();
      h.stage1 = matrix_from(j.at("stage1"), model.horizon * kOutputsPerHorizon, kNumFeatures, name + ".stage1");
      const Json & s2 = j.at("stage2");
      if (model.stage_mode == StageMode::kTwoStage &&
          (h.num_modes < 1 || s2.size() != static_cast<std::size_t>(h.num_modes))) {
        throw InputError("model: " + name + " stage2 count differs from num_modes");
      }
      for (std::size_t m = 0; m < s2.size(); ++m) {
        h.stage2.push_back(matrix_from(
          s2[m], model.horizon * kOutputsPerHorizon + 1, kStage2Inputs, name + ".stage2"));
      }
    }
  } catch (const nlohmann::json::exception & e) {
    throw InputError(std::string("model: malformed document: ") + e.what());
  } catch (const ConfigError & e) {
    throw InputError(std::string("model: ") + e.what());
  }
  return model;
}

std::string loss_curve_csv(std::span<const double> curve)
{
  std::ostringstream out;
  out.precision(17);
  out << "iteration,loss\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out << i << ',' << curve[i] << '\n';
  }
  return out.str();
}

}  // namespace bevmotion
