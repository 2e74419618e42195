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

#ifndef BEVMOTION__EVALUATION_HPP_
#define BEVMOTION__EVALUATION_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "bevmotion/actor.hpp"
#include "bevmotion/features.hpp"
#include "bevmotion/metrics.hpp"
#include "bevmotion/trainer.hpp"

namespace bevmotion
{

/// Stand-in for a learned detector: ground-truth boxes with pose jitter, misses, scored
/// false positives and noisy scores.
struct DetectionCorruption
{
  PoseCorruption pose;
  double miss_rate = 0.0;
  double false_positives_per_scene = 0.0;
  double score_noise = 0.0;  // std of the logit noise
  double true_score_logit = 3.0;
  double false_score_logit = -1.0;

  void validate() const;
};

struct EvalOptions
{
  DetectionCorruption corruption;
  FeatureOptions features;
  double target_recall = 0.8;
  double horizon_s = 3.0;
  std::array<double, kNumActorClasses> iou_thresholds = {
    default_iou_threshold(ActorClass::kVehicle), default_iou_threshold(ActorClass::kPedestrian),
    default_iou_threshold(ActorClass::kBicyclist)};
  std::uint64_t seed = 0;
  unsigned threads = 1;

  void validate() const;
};

/// One detection of the corruption model. `actor` names the ground-truth actor it came from.
struct SimulatedDetection
{
  Detection detection;
  std::optional<std::size_t> actor;
  ObservedActor observed;  // history consistent with the detected box
};

/// Deterministic in (options.seed, scene seed, actor id).
std::vector<SimulatedDetection> simulate_detections(
  const SceneInput & scene, const DetectionCorruption & corruption, std::uint64_t seed);

struct PredictionQuery
{
  const SceneInput & scene;
  const SceneContext & context;
  std::optional<std::size_t> actor;
  const ObservedActor & observed;
};

using Predictor = std::function<MultimodalPrediction(const PredictionQuery &)>;

struct ClassReport
{
  ActorClass cls = ActorClass::kVehicle;
  std::size_t num_labels = 0;
  std::optional<double> ap;
  OperatingPoint operating_point;
  std::size_t num_tp = 0;  // true positives at the operating point
  std::optional<PredictionErrors> errors;
  std::vector<PredictionPair> pairs;  // true positives at the operating point
};

struct EvalReport
{
  double horizon_s = 3.0;
  std::size_t horizon_index = 0;
  std::array<ClassReport, kNumActorClasses> classes;
};

/// round(horizon_s * frame_rate) - 1; throws ArgumentError outside [0, future_frames).
std::size_t horizon_index_for(double horizon_s, double frame_rate, std::size_t future_frames);

/// Detection AP per class, then prediction metrics over true positives at the operating
/// point. Scenes are processed independently and merged in input order.
EvalReport evaluate(const Predictor & predictor, std::span<const SceneInput> scenes, const EvalOptions & options);

/// Same with a fitted model; its feature options override `options.features`.
EvalReport evaluate(
  const PredictionModel & model, std::span<const SceneInput> scenes, const EvalOptions & options);

}  // namespace bevmotion

#endif  // BEVMOTION__EVALUATION_HPP_
