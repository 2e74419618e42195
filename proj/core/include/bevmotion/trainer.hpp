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

#ifndef BEVMOTION__TRAINER_HPP_
#define BEVMOTION__TRAINER_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bevmotion/actor.hpp"
#include "bevmotion/features.hpp"
#include "bevmotion/losses.hpp"
#include "bevmotion/metrics.hpp"
#include "bevmotion/synth.hpp"

namespace bevmotion
{

enum class StageMode
{
  kFirstOnly,
  kTwoStage,
};

std::string_view stage_mode_name(StageMode mode);
/// Throws ConfigError listing the valid names.
StageMode stage_mode_from_name(std::string_view name);

/// Dense row-major matrix.
struct Matrix
{
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double & at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// Rigid jitter of observed actor histories (Gaussian translation per axis and heading).
struct PoseCorruption
{
  double position_sigma = 0.0;
  double heading_sigma = 0.0;

  void validate() const;
  bool is_identity() const { return position_sigma == 0.0 && heading_sigma == 0.0; }
};

/// A scenario with the sweeps observed at its current frame (oldest first) and optionally
/// replaced future labels (e.g. noise-injected).
struct SceneInput
{
  Scenario scenario;
  std::vector<LidarSweep> sweeps;
  std::vector<Trajectory> label_futures;  // empty: the scenario's own futures

  Trajectory future(std::size_t actor) const;
};

/// Simulates the sweeps a scene needs for rasterization at its current frame.
SceneInput simulate_scene(Scenario scenario, std::size_t num_sweeps, const SweepSettings & settings);

/// Replaces the scene's labels with perturb_labels output.
void apply_label_noise(SceneInput & scene, const DiversitySchedule & schedule);

/// Adds one-sided lateral outliers to the scene's (possibly already noisy) labels.
void apply_label_outliers(SceneInput & scene, double fraction, double magnitude);

/// One training example.
struct Sample
{
  std::size_t scene = 0;
  std::size_t actor = 0;
  ActorClass cls = ActorClass::kVehicle;
  FeatureVector clean_features;  // from ground-truth history
  FeatureVector noisy_features;  // from corrupted history
  Waypoint clean_anchor;         // current pose the outputs are relative to
  Waypoint noisy_anchor;
  Waypoint current_truth;
  Trajectory target;  // training label
};

struct DatasetOptions
{
  FeatureOptions features;
  PoseCorruption corruption;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Corrupted copy of an actor's history, keyed by (seed, scene seed, actor id).
ObservedActor corrupt_history(
  const ObservedActor & actor, const PoseCorruption & corruption, std::uint64_t seed,
  std::uint64_t scene_seed, std::uint64_t actor_id);

/// Samples in (scene, actor) order; actors without enough history are skipped.
std::vector<Sample> build_dataset(std::span<const SceneInput> scenes, const DatasetOptions & options);

struct TrainConfig
{
  double learning_rate = 0.02;
  std::size_t iterations = 1000;
  std::size_t batch_size = 0;  // 0: full batch
  LossProfile profile = LossProfile::kKlLaplace;
  StageMode stage_mode = StageMode::kTwoStage;
  std::size_t warmup_iterations = 250;
  /// Diversity outputs keep their initial value for this many iterations so early, large
  /// location errors do not inflate them (which would slow the location fit).
  std::size_t diversity_delay = 0;
  std::uint64_t seed = 0;
  DiversitySchedule schedule;
  LossWeights weights;
  /// Candidate factors applied to `schedule`; with more than one, each is trained on the
  /// training split and the most calibrated one on the validation split is kept.
  std::vector<double> schedule_scales = {1.0};
  double validation_fraction = 0.25;
  std::array<int, kNumActorClasses> num_modes = {3, 1, 1};
  double initial_diversity = 1.0;
  double divergence_threshold = 1e6;
  FeatureOptions features;  // options the dataset was built with; stored in the model

  void validate() const;
};

/// Per-class parameters: feature standardization, first-stage map and one second-stage map
/// per mode (waypoint outputs followed by the mode logit).
struct ClassHead
{
  int num_modes = 1;
  std::size_t num_samples = 0;
  std::array<double, kNumFeatures> feature_mean{};
  std::array<double, kNumFeatures> feature_scale{};
  Matrix stage1;               // 6H x kNumFeatures
  std::vector<Matrix> stage2;  // per mode: (6H + 1) x kStage2Inputs
};

/// Inputs of the second stage: invariant features plus first-stage offsets at three horizons
/// expressed in the actor frame.
inline constexpr std::size_t kStage2Inputs = kNumInvariantFeatures + 6;
inline constexpr int kModelVersion = 1;

struct PredictionModel
{
  std::size_t horizon = 30;
  double horizon_dt = 0.1;
  StageMode stage_mode = StageMode::kTwoStage;
  LossProfile profile = LossProfile::kKlLaplace;
  DiversitySchedule schedule;
  FeatureOptions features;
  std::array<ClassHead, kNumActorClasses> heads;

  /// Multimodal prediction for an actor whose current observed pose is `anchor`.
  MultimodalPrediction predict(ActorClass cls, const FeatureVector & features, const Waypoint & anchor) const;
};

/// Zero maps with identity headings and `initial_diversity`, standardization from `dataset`.
PredictionModel initialize_model(std::span<const Sample> dataset, const TrainConfig & config);

/// Mean loss over `indices`; adds d(loss)/d(parameters) into `grad` (same shapes as `model`)
/// when given. `clean` selects ground-truth or corrupted features and anchors.
double batch_loss(
  const PredictionModel & model, std::span<const Sample> dataset, std::span<const std::size_t> indices,
  bool clean, const TrainConfig & config, PredictionModel * grad = nullptr);

struct ScheduleCandidate
{
  double scale = 1.0;
  double calibration_gap = 0.0;
};

struct TrainResult
{
  PredictionModel model;
  std::vector<double> loss_curve;  // one entry per iteration of the kept run
  std::vector<ScheduleCandidate> candidates;
  double selected_scale = 1.0;
};

/// Plain gradient descent. Throws ArgumentError on an empty dataset and RuntimeFailure when
/// the loss exceeds the divergence threshold or stops being finite.
TrainResult train(std::span<const Sample> dataset, const TrainConfig & config);

/// Prediction pairs (prediction vs. training label) for reliability checks.
std::vector<PredictionPair> predict_samples(
  const PredictionModel & model, std::span<const Sample> dataset, bool clean);

std::string model_to_json(const PredictionModel & model);
/// Throws InputError on malformed documents.
PredictionModel model_from_json(std::string_view text);

/// "iteration,loss" header plus one row per iteration.
std::string loss_curve_csv(std::span<const double> curve);

}  // namespace bevmotion

#endif  // BEVMOTION__TRAINER_HPP_
