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

#ifndef BEVMOTION__METRICS_HPP_
#define BEVMOTION__METRICS_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "bevmotion/actor.hpp"
#include "bevmotion/geometry.hpp"

namespace bevmotion
{

/// Per-waypoint Laplace diversities along and across the track.
struct TrajectoryDistribution
{
  std::vector<double> b_at;
  std::vector<double> b_ct;
};

struct PredictedMode
{
  Trajectory trajectory;
  TrajectoryDistribution distribution;
  double probability = 1.0;
};

struct MultimodalPrediction
{
  std::vector<PredictedMode> modes;

  /// M >= 1, probabilities on the simplex (1e-6), positive diversities sized like trajectories.
  void validate() const;
  /// Argmax of mode probability; ties go to the lower index.
  std::size_t highest_probability_mode() const;
};

struct Detection
{
  OrientedBox box;
  double score = 0.0;
  ActorClass cls = ActorClass::kVehicle;
  MultimodalPrediction prediction;
};

/// Ground-truth actor at the evaluation frame with its future track.
struct LabeledActor
{
  OrientedBox box;
  ActorClass cls = ActorClass::kVehicle;
  Trajectory future;
};

struct Matching
{
  std::vector<std::pair<std::size_t, std::size_t>> true_positives;  // (detection, label)
  std::vector<std::size_t> false_positives;
  std::vector<std::size_t> false_negatives;
};

/// Greedy matching in descending score order (stable for equal scores). Each label is used
/// at most once; a detection is a true positive iff its best unused label reaches the IoU
/// threshold. Callers pass one class at a time.
Matching match_detections(
  std::span<const Detection> detections, std::span<const LabeledActor> labels, double iou_threshold);

/// One detection outcome after matching, pooled across frames.
struct ScoredOutcome
{
  double score = 0.0;
  bool true_positive = false;
};

struct PrPoint
{
  double threshold = 0.0;
  double recall = 0.0;
  double precision = 0.0;
};

/// Precision/recall at every distinct score threshold, highest threshold first.
std::vector<PrPoint> precision_recall_curve(std::span<const ScoredOutcome> outcomes, std::size_t num_labels);

/// All-points interpolated AP (area under the precision envelope). nullopt without labels.
std::optional<double> average_precision(std::span<const ScoredOutcome> outcomes, std::size_t num_labels);

struct OperatingPoint
{
  double threshold = 0.0;
  double recall = 0.0;
  bool reachable = false;
};

/// Highest score threshold whose recall reaches `target_recall`; otherwise the lowest
/// available score with reachable = false.
OperatingPoint operating_threshold(
  std::span<const ScoredOutcome> outcomes, std::size_t num_labels, double target_recall);

/// A true-positive detection's prediction with the matched label's future.
struct PredictionPair
{
  MultimodalPrediction prediction;
  Trajectory truth;
};

/// Mean errors in centimeters at one horizon plus the per-horizon curves.
struct ErrorSummary
{
  double de_cm = 0.0;
  double ct_cm = 0.0;
  std::size_t count = 0;
  std::vector<double> de_curve_cm;
  std::vector<double> ct_curve_cm;
};

struct PredictionErrors
{
  ErrorSummary highest_probability;
  ErrorSummary min_over_m;
};

/// DE and |CT| at `horizon_index` for the highest-probability mode and for the per-actor
/// mode with minimal DE (ties to the lower index). nullopt for an empty set.
std::optional<PredictionErrors> prediction_errors(
  std::span<const PredictionPair> pairs, std::size_t horizon_index);

struct CoveragePoint
{
  double nominal = 0.0;
  double empirical = 0.0;
};

struct ReliabilityCurves
{
  std::vector<CoveragePoint> along_track;
  std::vector<CoveragePoint> cross_track;
};

/// 0.05, 0.10, ..., 0.95.
std::vector<double> default_calibration_levels();

/// Half-width of the centered interval holding mass q of Laplace(0, b): b ln(1 / (1 - q)).
double laplace_half_width(double b, double q);

/// Fraction of pairs whose |AT| / |CT| error at the horizon lies inside the predicted
/// centered Laplace interval, for the highest-probability mode.
ReliabilityCurves reliability_diagram(
  std::span<const PredictionPair> pairs, std::size_t horizon_index, std::span<const double> levels);

double max_calibration_gap(const ReliabilityCurves & curves);

}  // namespace bevmotion

#endif  // BEVMOTION__METRICS_HPP_
