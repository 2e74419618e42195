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

#include "bevmotion/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "bevmotion/error.hpp"
#include "bevmotion/rng.hpp"

namespace bevmotion
{
namespace
{

// Salt separating miss/score draws from the pose jitter drawn under the same key.
constexpr std::uint64_t kScoreSalt = 0x5c0be5a17ULL;
constexpr std::uint64_t kFalsePositiveSalt = 0xfa15e905ULL;

struct Extent
{
  double length;
  double width;
};

constexpr std::array<Extent, kNumActorClasses> kFalsePositiveExtents = {
  Extent{4.5, 2.0}, Extent{0.8, 0.8}, Extent{1.8, 0.7}};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct ScenePartial
{
  std::array<std::vector<ScoredOutcome>, kNumActorClasses> outcomes;
  std::array<std::vector<std::pair<double, PredictionPair>>, kNumActorClasses> tp_pairs;
  std::array<std::size_t, kNumActorClasses> labels{};
};

ScenePartial evaluate_scene(
  const Predictor & predictor, const SceneInput & scene, const EvalOptions & options)
{
  const Scenario & sc = scene.scenario;
  const std::size_t frame = sc.current_frame();
  const SceneContext ctx = build_scene_context(sc, frame, scene.sweeps, options.features);
  const auto detections = simulate_detections(scene, options.corruption, options.seed);

  ScenePartial out;
  for (const ActorClass cls : kAllActorClasses) {
    const std::size_t ci = class_index(cls);
    std::vector<Detection> dets;
    std::vector<std::size_t> det_source;
    for (std::size_t d = 0; d < detections.size(); ++d) {
      if (detections[d].detection.cls == cls) {
        dets.push_back(detections[d].detection);
        det_source.push_back(d);
      }
    }
    std::vector<LabeledActor> labels;
    std::vector<std::size_t> label_actor;
    for (std::size_t a = 0; a < sc.actors.size(); ++a) {
      if (sc.actors[a].cls == cls) {
        labels.push_back({sc.actors[a].box_at(frame), cls, scene.future(a)});
        label_actor.push_back(a);
      }
    }
    out.labels[ci] = labels.size();
    const Matching m = match_detections(dets, labels, options.iou_thresholds[ci]);
    for (const auto & [d, l] : m.true_positives) {
      out.outcomes[ci].push_back({dets[d].score, true});
      const SimulatedDetection & sim = detections[det_source[d]];
      PredictionQuery q{scene, ctx, sim.actor, sim.observed};
      MultimodalPrediction pred = predictor(q);
      out.tp_pairs[ci].push_back({dets[d].score, PredictionPair{std::move(pred), labels[l].future}});
    }
    for (const std::size_t d : m.false_positives) {
      out.outcomes[ci].push_back({dets[d].score, false});
    }
  }
  return out;
}

}  // namespace

void DetectionCorruption::validate() const
{
  pose.validate();
  if (!(miss_rate >= 0.0 && miss_rate < 1.0)) {
    throw ConfigError("corruption.miss_rate must lie in [0, 1)");
  }
  if (!(false_positives_per_scene >= 0.0) || !(score_noise >= 0.0)) {
    throw ConfigError("corruption: false_positives_per_scene and score_noise must be >= 0");
  }
  if (!std::isfinite(true_score_logit) || !std::isfinite(false_score_logit)) {
    throw ConfigError("corruption: score logits must be finite");
  }
}

void EvalOptions::validate() const
{
  corruption.validate();
  features.validate();
  if (!(target_recall > 0.0 && target_recall <= 1.0)) {
    throw ConfigError("eval.target_recall must lie in (0, 1]");
  }
  if (!(horizon_s > 0.0)) {
    throw ConfigError("eval.horizon_s must be positive");
  }
}

std::vector<SimulatedDetection> simulate_detections(
  const SceneInput & scene, const DetectionCorruption & corruption, std::uint64_t seed)
{
  const Scenario & sc = scene.scenario;
  const std::size_t frame = sc.current_frame();
  std::vector<SimulatedDetection> out;
  for (std::size_t a = 0; a < sc.actors.size(); ++a) {
    const ActorTrack & track = sc.actors[a];
    CounterRng rng(seed, RngStream::kDetectionCorruption, sc.seed ^ kScoreSalt, track.id);
    const bool missed = rng.uniform() < corruption.miss_rate;
    const double noise = rng.normal();
    if (missed) {
      continue;
    }
    SimulatedDetection det;
    det.actor = a;
    det.observed = corrupt_history(observe(sc, a, frame), corruption.pose, seed, sc.seed, track.id);
    const Waypoint & w = det.observed.current();
    det.detection.box = OrientedBox({w.cx, w.cy}, track.length, track.width, w.heading);
    det.detection.cls = track.cls;
    det.detection.score = sigmoid(corruption.true_score_logit + corruption.score_noise * noise);
    out.push_back(std::move(det));
  }
  CounterRng fp(seed, RngStream::kDetectionCorruption, sc.seed ^ kFalsePositiveSalt);
  const double whole = std::floor(corruption.false_positives_per_scene);
  const std::size_t count = static_cast<std::size_t>(whole) +
                            (fp.uniform() < corruption.false_positives_per_scene - whole ? 1 : 0);
  const Waypoint sdv = sc.sdv_track.at(frame);
  for (std::size_t k = 0; k < count; ++k) {
    const auto cls = kAllActorClasses[fp.uniform_index(kNumActorClasses)];
    const Extent e = kFalsePositiveExtents[class_index(cls)];
    const double r = 40.0 * std::sqrt(fp.uniform());
    const double phi = fp.uniform(-kPi, kPi);
    const double heading = normalize_angle(fp.uniform(-kPi, kPi));
    const double noise = fp.normal();
    const Vec2 c{sdv.cx + r * std::cos(phi), sdv.cy + r * std::sin(phi)};
    SimulatedDetection det;
    det.detection.box = OrientedBox(c, e.length, e.width, heading);
    det.detection.cls = cls;
    det.detection.score = sigmoid(corruption.false_score_logit + corruption.score_noise * noise);
    // A false positive has no history: pretend it stood still for two frames.
    det.observed.cls = cls;
    det.observed.length = e.length;
    det.observed.width = e.width;
    det.observed.history = {{c.x, c.y, heading}, {c.x, c.y, heading}};
    out.push_back(std::move(det));
  }
  return out;
}

std::size_t horizon_index_for(double horizon_s, double frame_rate, std::size_t future_frames)
{
  const double steps = std::round(horizon_s * frame_rate);
  if (!(steps >= 1.0) || steps > static_cast<double>(future_frames)) {
    throw ArgumentError("evaluation horizon lies outside the labeled future");
  }
  return static_cast<std::size_t>(steps) - 1;
}

EvalReport evaluate(const Predictor & predictor, std::span<const SceneInput> scenes, const EvalOptions & options)
{
  options.validate();
  EvalReport report;
  report.horizon_s = options.horizon_s;
  for (std::size_t ci = 0; ci < kNumActorClasses; ++ci) {
    report.classes[ci].cls = kAllActorClasses[ci];
  }
  if (scenes.empty()) {
    return report;
  }
  const Scenario & first = scenes.front().scenario;
  report.horizon_index = horizon_index_for(options.horizon_s, first.frame_rate, first.future_frames);

  std::vector<ScenePartial> partial(scenes.size());
  const unsigned threads =
    std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(scenes.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < scenes.size(); ++i) {
      partial[i] = evaluate_scene(predictor, scenes[i], options);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = next++; i < scenes.size(); i = next++) {
            partial[i] = evaluate_scene(predictor, scenes[i], options);
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

  for (std::size_t ci = 0; ci < kNumActorClasses; ++ci) {
    ClassReport & cr = report.classes[ci];
    std::vector<ScoredOutcome> outcomes;
    std::vector<std::pair<double, PredictionPair>> tps;
    for (ScenePartial & p : partial) {
      cr.num_labels += p.labels[ci];
      outcomes.insert(outcomes.end(), p.outcomes[ci].begin(), p.outcomes[ci].end());
      std::move(p.tp_pairs[ci].begin(), p.tp_pairs[ci].end(), std::back_inserter(tps));
    }
    cr.ap = average_precision(outcomes, cr.num_labels);
    cr.operating_point = operating_threshold(outcomes, cr.num_labels, options.target_recall);
    for (auto & [score, pair] : tps) {
      if (score >= cr.operating_point.threshold) {
        cr.pairs.push_back(std::move(pair));
      }
    }
    cr.num_tp = cr.pairs.size();
    cr.errors = prediction_errors(cr.pairs, report.horizon_index);
  }
  return report;
}

EvalReport evaluate(
  const PredictionModel & model, std::span<const SceneInput> scenes, const EvalOptions & options)
{
  EvalOptions opts = options;
  opts.features = model.features;
  const Predictor predictor = [&model, &opts](const PredictionQuery & q) {
    const auto f = extract_features(q.observed, q.context, opts.features);
    if (!f) {
      throw ArgumentError("evaluate: detection without enough history");
    }
    return model.predict(q.observed.cls, *f, q.observed.current());
  };
  return evaluate(predictor, scenes, opts);
}

}  // namespace bevmotion
