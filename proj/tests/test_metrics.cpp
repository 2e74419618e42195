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
#include <random>

#include <gtest/gtest.h>

#include "bevmotion/error.hpp"
#include "bevmotion/metrics.hpp"
#include "bevmotion/rng.hpp"
#include "oracles.hpp"

namespace bevmotion
{
namespace
{

Detection det(OrientedBox box, double score)
{
  Detection d;
  d.box = box;
  d.score = score;
  return d;
}

LabeledActor label(OrientedBox box)
{
  LabeledActor l;
  l.box = box;
  return l;
}

TEST(MatchDetections, PerfectDetections)
{
  const std::vector<LabeledActor> labels{label({{0, 0}, 4, 2, 0}), label({{10, 0}, 4, 2, 1})};
  const std::vector<Detection> dets{det(labels[1].box, 0.2), det(labels[0].box, 0.7)};
  const Matching m = match_detections(dets, labels, 0.7);
  EXPECT_EQ(m.true_positives.size(), 2u);
  EXPECT_TRUE(m.false_positives.empty());
  EXPECT_TRUE(m.false_negatives.empty());
}

TEST(MatchDetections, GreedyTakesHigherIou)
{
  // The detection overlaps label 0 by 1/3 and label 1 by 3/5; it takes label 1.
  const std::vector<LabeledActor> labels{label({{-1, 0}, 2, 2, 0}), label({{0.5, 0}, 2, 2, 0})};
  const std::vector<Detection> dets{det({{0, 0}, 2, 2, 0}, 0.9)};
  const Matching m = match_detections(dets, labels, 0.3);
  ASSERT_EQ(m.true_positives.size(), 1u);
  EXPECT_EQ(m.true_positives[0].second, 1u);
  ASSERT_EQ(m.false_negatives.size(), 1u);
  EXPECT_EQ(m.false_negatives[0], 0u);
}

TEST(MatchDetections, HigherScoreWinsContestedLabel)
{
  const std::vector<LabeledActor> labels{label({{0, 0}, 2, 2, 0})};
  const std::vector<Detection> dets{det({{0.1, 0}, 2, 2, 0}, 0.4), det({{0.2, 0}, 2, 2, 0}, 0.8)};
  const Matching m = match_detections(dets, labels, 0.5);
  ASSERT_EQ(m.true_positives.size(), 1u);
  EXPECT_EQ(m.true_positives[0].first, 1u);
  EXPECT_EQ(m.false_positives, std::vector<std::size_t>{0});
}

TEST(MatchDetections, NoLabels)
{
  const std::vector<Detection> dets{det({{0, 0}, 2, 2, 0}, 0.4), det({{5, 0}, 2, 2, 0}, 0.8)};
  const Matching m = match_detections(dets, {}, 0.5);
  EXPECT_EQ(m.false_positives.size(), 2u);
  EXPECT_TRUE(m.true_positives.empty());
}

TEST(AveragePrecision, HandCases)
{
  const std::vector<ScoredOutcome> all_tp{{0.9, true}, {0.5, true}};
  EXPECT_EQ(*average_precision(all_tp, 2), 1.0);
  const std::vector<ScoredOutcome> tp_then_fp{{0.9, true}, {0.8, false}};
  EXPECT_EQ(*average_precision(tp_then_fp, 1), 1.0);
  const std::vector<ScoredOutcome> all_fp{{0.9, false}, {0.8, false}};
  EXPECT_EQ(*average_precision(all_fp, 3), 0.0);
  EXPECT_FALSE(average_precision(all_fp, 0).has_value());
  // FP above a TP, 2 labels: precision 1/2 at recall 1/2, envelope area 0.25.
  const std::vector<ScoredOutcome> fp_first{{0.9, false}, {0.8, true}};
  EXPECT_DOUBLE_EQ(*average_precision(fp_first, 2), 0.25);
}

std::vector<ScoredOutcome> random_outcomes(std::mt19937_64 & gen, std::size_t & labels)
{
  std::uniform_int_distribution<int> count(1, 20), coarse(0, 9);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<ScoredOutcome> out(static_cast<std::size_t>(count(gen)));
  std::size_t tps = 0;
  for (auto & o : out) {
    // Coarse scores force ties.
    o.score = u(gen) < 0.5 ? coarse(gen) / 10.0 : u(gen);
    o.true_positive = u(gen) < 0.6;
    tps += o.true_positive ? 1 : 0;
  }
  labels = tps + static_cast<std::size_t>(count(gen) % 4);
  if (labels == 0) {
    labels = 1;
  }
  return out;
}

TEST(AveragePrecision, MatchesBruteForceOracle)
{
  std::mt19937_64 gen(99);
  for (int i = 0; i < 500; ++i) {
    std::size_t labels = 0;
    const auto outcomes = random_outcomes(gen, labels);
    ASSERT_NEAR(*average_precision(outcomes, labels), testing::brute_force_ap(outcomes, labels), 1e-12);
  }
}

TEST(AveragePrecision, MonotoneScoreTransformAndDuplication)
{
  std::mt19937_64 gen(5);
  for (int i = 0; i < 200; ++i) {
    std::size_t labels = 0;
    auto outcomes = random_outcomes(gen, labels);
    const double ap = *average_precision(outcomes, labels);
    auto squashed = outcomes;
    for (auto & o : squashed) {
      o.score = 1.0 / (1.0 + std::exp(-5.0 * o.score));
    }
    EXPECT_NEAR(*average_precision(squashed, labels), ap, 1e-12);
    auto doubled = outcomes;
    doubled.insert(doubled.end(), outcomes.begin(), outcomes.end());
    EXPECT_NEAR(*average_precision(doubled, 2 * labels), ap, 1e-12);
  }
}

TEST(OperatingThreshold, StepInversion)
{
  // Recall 0.5 at threshold 0.9, 0.9 at threshold 0.5 (10 labels).
  std::vector<ScoredOutcome> o;
  for (int i = 0; i < 5; ++i) {
    o.push_back({0.9, true});
  }
  for (int i = 0; i < 4; ++i) {
    o.push_back({0.5, true});
  }
  const OperatingPoint p = operating_threshold(o, 10, 0.8);
  EXPECT_EQ(p.threshold, 0.5);
  EXPECT_TRUE(p.reachable);

  const std::vector<ScoredOutcome> perfect{{0.7, true}, {0.6, true}};
  EXPECT_EQ(operating_threshold(perfect, 2, 0.5).threshold, 0.7);

  const std::vector<ScoredOutcome> short_recall{{0.7, true}, {0.6, true}, {0.3, false}};
  const OperatingPoint q = operating_threshold(short_recall, 5, 0.8);
  EXPECT_FALSE(q.reachable);
  EXPECT_EQ(q.threshold, 0.3);
  EXPECT_THROW(operating_threshold(perfect, 2, 0.0), ArgumentError);
}

PredictedMode mode(std::vector<Waypoint> wps, double p, double b = 1.0)
{
  PredictedMode m;
  m.trajectory = {std::move(wps), 0.1};
  m.distribution.b_at.assign(m.trajectory.size(), b);
  m.distribution.b_ct.assign(m.trajectory.size(), b);
  m.probability = p;
  return m;
}

TEST(PredictionErrors, HighestProbVersusMinOverModes)
{
  PredictionPair pair;
  pair.truth = {{{1, 0, 0}, {2, 0, 0}}, 0.1};
  pair.prediction.modes = {mode({{1, 0.5, 0}, {2, 0.5, 0}}, 0.9), mode({{1, 0, 0}, {2, 0, 0}}, 0.1)};
  const auto e = prediction_errors(std::span(&pair, 1), 1);
  ASSERT_TRUE(e);
  EXPECT_NEAR(e->highest_probability.de_cm, 50.0, 1e-9);
  EXPECT_NEAR(e->highest_probability.ct_cm, 50.0, 1e-9);
  EXPECT_EQ(e->min_over_m.de_cm, 0.0);
  EXPECT_EQ(e->min_over_m.ct_cm, 0.0);
  EXPECT_EQ(e->highest_probability.de_curve_cm.size(), 2u);
  EXPECT_FALSE(prediction_errors({}, 0).has_value());
}

TEST(PredictionErrors, DominanceAndCtBound)
{
  std::mt19937_64 gen(8);
  std::normal_distribution<double> n(0.0, 2.0);
  std::vector<PredictionPair> pairs(300);
  for (auto & p : pairs) {
    p.truth = {{{n(gen), n(gen), n(gen)}}, 0.1};
    double left = 1.0;
    for (int m = 0; m < 3; ++m) {
      const double pm = m == 2 ? left : left * 0.5;
      left -= pm;
      p.prediction.modes.push_back(mode({{n(gen), n(gen), 0.0}}, pm));
    }
  }
  const auto e = prediction_errors(pairs, 0);
  EXPECT_LE(e->min_over_m.de_cm, e->highest_probability.de_cm);
  EXPECT_LE(e->highest_probability.ct_cm, e->highest_probability.de_cm);
  EXPECT_LE(e->min_over_m.ct_cm, e->min_over_m.de_cm);
}

TEST(Reliability, LaplaceErrorsAreCalibrated)
{
  // Errors drawn from Laplace(0, b) by the documented inverse CDF, re-implemented here.
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  auto laplace = [&](double b) {
    double v;
    do {
      v = u(gen);
    } while (v == -0.5);
    return -b * std::copysign(1.0, v) * std::log(1.0 - 2.0 * std::abs(v));
  };
  std::vector<PredictionPair> pairs(100000);
  for (auto & p : pairs) {
    const double b_at = 0.5, b_ct = 0.2;
    p.truth = {{{laplace(b_at), laplace(b_ct), 0.0}}, 0.1};
    PredictedMode m = mode({{0, 0, 0}}, 1.0);
    m.distribution.b_at = {b_at};
    m.distribution.b_ct = {b_ct};
    p.prediction.modes = {m};
  }
  const auto levels = default_calibration_levels();
  ASSERT_EQ(levels.size(), 19u);
  const auto curves = reliability_diagram(pairs, 0, levels);
  for (const auto * curve : {&curves.along_track, &curves.cross_track}) {
    double prev = 0.0;
    for (const auto & pt : *curve) {
      EXPECT_NEAR(pt.empirical, pt.nominal, 0.02);
      EXPECT_GE(pt.empirical, prev);
      prev = pt.empirical;
    }
  }
  EXPECT_LT(max_calibration_gap(curves), 0.02);
}

TEST(Reliability, ExtremeDiversities)
{
  std::vector<PredictionPair> pairs(50);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    pairs[i].truth = {{{0.3 + 0.01 * i, -0.2, 0.0}}, 0.1};
    pairs[i].prediction.modes = {mode({{0, 0, 0}}, 1.0, 1e9)};
  }
  const auto levels = default_calibration_levels();
  for (const auto & pt : reliability_diagram(pairs, 0, levels).along_track) {
    EXPECT_EQ(pt.empirical, 1.0);
  }
  for (auto & p : pairs) {
    p.prediction.modes = {mode({{0, 0, 0}}, 1.0, 1e-12)};
  }
  for (const auto & pt : reliability_diagram(pairs, 0, levels).cross_track) {
    EXPECT_EQ(pt.empirical, 0.0);
  }
}

TEST(Reliability, HalfWidth)
{
  EXPECT_NEAR(laplace_half_width(2.0, 0.5), 2.0 * std::log(2.0), 1e-15);
  EXPECT_EQ(laplace_half_width(1.0, 0.0), 0.0);
}

TEST(MultimodalPrediction, ValidateAndArgmax)
{
  MultimodalPrediction p;
  p.modes = {mode({{0, 0, 0}}, 0.4), mode({{0, 0, 0}}, 0.4), mode({{0, 0, 0}}, 0.2)};
  EXPECT_NO_THROW(p.validate());
  EXPECT_EQ(p.highest_probability_mode(), 0u);
  p.modes[2].probability = 0.3;
  EXPECT_THROW(p.validate(), ArgumentError);
}

}  // namespace
}  // namespace bevmotion
