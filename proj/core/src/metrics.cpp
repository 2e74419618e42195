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

#include "bevmotion/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bevmotion/error.hpp"

namespace bevmotion
{
namespace
{

constexpr double kMetersToCm = 100.0;

std::vector<std::size_t> score_order(std::span<const ScoredOutcome> outcomes)
{
  std::vector<std::size_t> order(outcomes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return outcomes[a].score > outcomes[b].score;
  });
  return order;
}

double displacement(const Waypoint & a, const Waypoint & b) { return std::hypot(a.cx - b.cx, a.cy - b.cy); }

void accumulate_mode(
  const Trajectory & pred, const Trajectory & truth, std::size_t horizon_index, ErrorSummary & out)
{
  const Waypoint & p = pred.waypoints[horizon_index];
  const Waypoint & t = truth.waypoints[horizon_index];
  out.de_cm += displacement(p, t);
  out.ct_cm += std::abs(decompose_at_ct(p, t).ct);
  const std::size_t n = std::min(pred.size(), truth.size());
  if (out.de_curve_cm.size() < n) {
    out.de_curve_cm.resize(n, 0.0);
    out.ct_curve_cm.resize(n, 0.0);
  }
  for (std::size_t h = 0; h < n; ++h) {
    out.de_curve_cm[h] += displacement(pred.waypoints[h], truth.waypoints[h]);
    out.ct_curve_cm[h] += std::abs(decompose_at_ct(pred.waypoints[h], truth.waypoints[h]).ct);
  }
  ++out.count;
}

void finalize(ErrorSummary & s)
{
  const double scale = kMetersToCm / static_cast<double>(s.count);
  s.de_cm *= scale;
  s.ct_cm *= scale;
  for (double & v : s.de_curve_cm) {
    v *= scale;
  }
  for (double & v : s.ct_curve_cm) {
    v *= scale;
  }
}

}  // namespace

void MultimodalPrediction::validate() const
{
  if (modes.empty()) {
    throw ArgumentError("MultimodalPrediction: needs at least one mode");
  }
  double sum = 0.0;
  for (const PredictedMode & m : modes) {
    m.trajectory.validate();
    if (!(m.probability >= 0.0 && m.probability <= 1.0)) {
      throw ArgumentError("MultimodalPrediction: probability outside [0, 1]");
    }
    sum += m.probability;
    const auto & d = m.distribution;
    if (!d.b_at.empty() || !d.b_ct.empty()) {
      if (d.b_at.size() != m.trajectory.size() || d.b_ct.size() != m.trajectory.size()) {
        throw ArgumentError("MultimodalPrediction: diversity count differs from waypoint count");
      }
      const auto positive = [](double b) { return b > 0.0; };
      if (!std::all_of(d.b_at.begin(), d.b_at.end(), positive) ||
          !std::all_of(d.b_ct.begin(), d.b_ct.end(), positive)) {
        throw ArgumentError("MultimodalPrediction: diversities must be positive");
      }
    }
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw ArgumentError("MultimodalPrediction: mode probabilities do not sum to 1");
  }
}

std::size_t MultimodalPrediction::highest_probability_mode() const
{
  std::size_t best = 0;
  for (std::size_t m = 1; m < modes.size(); ++m) {
    if (modes[m].probability > modes[best].probability) {
      best = m;
    }
  }
  return best;
}

Matching match_detections(
  std::span<const Detection> detections, std::span<const LabeledActor> labels, double iou_threshold)
{
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].score > detections[b].score;
  });
  std::vector<bool> used(labels.size(), false);
  Matching out;
  for (const std::size_t d : order) {
    double best_iou = -1.0;
    std::size_t best = labels.size();
    for (std::size_t l = 0; l < labels.size(); ++l) {
      if (used[l]) {
        continue;
      }
      const double iou = rotated_iou(detections[d].box, labels[l].box);
      if (iou > best_iou) {
        best_iou = iou;
        best = l;
      }
    }
    if (best < labels.size() && best_iou >= iou_threshold && best_iou > 0.0) {
      used[best] = true;
      out.true_positives.emplace_back(d, best);
    } else {
      out.false_positives.push_back(d);
    }
  }
  for (std::size_t l = 0; l < labels.size(); ++l) {
    if (!used[l]) {
      out.false_negatives.push_back(l);
    }
  }
  return out;
}

std::vector<PrPoint> precision_recall_curve(std::span<const ScoredOutcome> outcomes, std::size_t num_labels)
{
  std::vector<PrPoint> curve;
  if (num_labels == 0) {
    return curve;
  }
  const auto order = score_order(outcomes);
  std::size_t tp = 0;
  std::size_t seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = outcomes[order[i]].score;
    // Consume the whole group of equal scores: one threshold admits all of them.
    while (i < order.size() && outcomes[order[i]].score == s) {
      tp += outcomes[order[i]].true_positive ? 1 : 0;
      ++seen;
      ++i;
    }
    curve.push_back(
      {s, static_cast<double>(tp) / static_cast<double>(num_labels),
       static_cast<double>(tp) / static_cast<double>(seen)});
  }
  return curve;
}

std::optional<double> average_precision(std::span<const ScoredOutcome> outcomes, std::size_t num_labels)
{
  if (num_labels == 0) {
    return std::nullopt;
  }
  const auto curve = precision_recall_curve(outcomes, num_labels);
  std::vector<double> envelope(curve.size());
  double running = 0.0;
  for (std::size_t k = curve.size(); k-- > 0;) {
    running = std::max(running, curve[k].precision);
    envelope[k] = running;
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t k = 0; k < curve.size(); ++k) {
    const double dr = curve[k].recall - prev_recall;
    if (dr > 0.0) {
      ap += dr * envelope[k];
    }
    prev_recall = curve[k].recall;
  }
  return ap;
}

OperatingPoint operating_threshold(
  std::span<const ScoredOutcome> outcomes, std::size_t num_labels, double target_recall)
{
  if (!(target_recall > 0.0 && target_recall <= 1.0)) {
    throw ArgumentError("operating_threshold: target recall must lie in (0, 1]");
  }
  const auto curve = precision_recall_curve(outcomes, num_labels);
  if (curve.empty()) {
    return {std::numeric_limits<double>::infinity(), 0.0, false};
  }
  for (const PrPoint & p : curve) {
    if (p.recall >= target_recall) {
      return {p.threshold, p.recall, true};
    }
  }
  return {curve.back().threshold, curve.back().recall, false};
}

std::optional<PredictionErrors> prediction_errors(
  std::span<const PredictionPair> pairs, std::size_t horizon_index)
{
  if (pairs.empty()) {
    return std::nullopt;
  }
  PredictionErrors out;
  for (const PredictionPair & pair : pairs) {
    const auto & modes = pair.prediction.modes;
    if (modes.empty()) {
      throw ArgumentError("prediction_errors: prediction without modes");
    }
    if (horizon_index >= pair.truth.size()) {
      throw ArgumentError("prediction_errors: horizon index beyond ground-truth length");
    }
    for (const PredictedMode & m : modes) {
      if (horizon_index >= m.trajectory.size()) {
        throw ArgumentError("prediction_errors: horizon index beyond predicted length");
      }
    }
    const std::size_t top = pair.prediction.highest_probability_mode();
    accumulate_mode(modes[top].trajectory, pair.truth, horizon_index, out.highest_probability);

    std::size_t best = 0;
    double best_de = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < modes.size(); ++m) {
      const double de =
        displacement(modes[m].trajectory.waypoints[horizon_index], pair.truth.waypoints[horizon_index]);
      if (de < best_de) {
        best_de = de;
        best = m;
      }
    }
    accumulate_mode(modes[best].trajectory, pair.truth, horizon_index, out.min_over_m);
  }
  finalize(out.highest_probability);
  finalize(out.min_over_m);
  return out;
}

std::vector<double> default_calibration_levels()
{
  std::vector<double> levels;
  for (int k = 1; k <= 19; ++k) {
    levels.push_back(0.05 * k);
  }
  return levels;
}

double laplace_half_width(double b, double q)
{
  if (!(q >= 0.0 && q < 1.0)) {
    throw ArgumentError("laplace_half_width: level must lie in [0, 1)");
  }
  return b * std::log(1.0 / (1.0 - q));
}

ReliabilityCurves reliability_diagram(
  std::span<const PredictionPair> pairs, std::size_t horizon_index, std::span<const double> levels)
{
  ReliabilityCurves out;
  std::vector<std::size_t> hits_at(levels.size(), 0);
  std::vector<std::size_t> hits_ct(levels.size(), 0);
  for (const PredictionPair & pair : pairs) {
    const PredictedMode & mode = pair.prediction.modes.at(pair.prediction.highest_probability_mode());
    if (horizon_index >= mode.trajectory.size() || horizon_index >= pair.truth.size() ||
        horizon_index >= mode.distribution.b_at.size() || horizon_index >= mode.distribution.b_ct.size()) {
      throw ArgumentError("reliability_diagram: prediction lacks diversities at the horizon");
    }
    const AtCtError e =
      decompose_at_ct(mode.trajectory.waypoints[horizon_index], pair.truth.waypoints[horizon_index]);
    const double b_at = mode.distribution.b_at[horizon_index];
    const double b_ct = mode.distribution.b_ct[horizon_index];
    for (std::size_t k = 0; k < levels.size(); ++k) {
      hits_at[k] += std::abs(e.at) <= laplace_half_width(b_at, levels[k]) ? 1 : 0;
      hits_ct[k] += std::abs(e.ct) <= laplace_half_width(b_ct, levels[k]) ? 1 : 0;
    }
  }
  const double n = static_cast<double>(pairs.size());
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const double at = pairs.empty() ? 0.0 : static_cast<double>(hits_at[k]) / n;
    const double ct = pairs.empty() ? 0.0 : static_cast<double>(hits_ct[k]) / n;
    out.along_track.push_back({levels[k], at});
    out.cross_track.push_back({levels[k], ct});
  }
  return out;
}

double max_calibration_gap(const ReliabilityCurves & curves)
{
  double gap = 0.0;
  for (const auto * curve : {&curves.along_track, &curves.cross_track}) {
    for (const CoveragePoint & p : *curve) {
      gap = std::max(gap, std::abs(p.empirical - p.nominal));
    }
  }
  return gap;
}

}  // namespace bevmotion
