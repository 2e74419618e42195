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

#include "bevmotion/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bevmotion/error.hpp"

namespace bevmotion
{
namespace
{

double sign_or_zero(double v) { return (v > 0.0) - (v < 0.0); }

void require_positive_scale(double s, const char * what)
{
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw ArgumentError(std::string(what) + ": scale must be positive and finite");
  }
}

// Position divergence for one axis; returns value, d/d error, d/d predicted scale.
ScaleLossResult position_term(LossProfile profile, double error, double scale_hat, double scale_gt)
{
  switch (profile) {
    case LossProfile::kKlLaplace:
      return laplace_kl(error, scale_hat, scale_gt);
    case LossProfile::kKlGaussian:
      return gaussian_kl(error, scale_hat, scale_gt);
    case LossProfile::kNllLaplace:
      return laplace_nll(error, scale_hat);
    case LossProfile::kNllGaussian:
      return gaussian_nll(error, scale_hat);
    case LossProfile::kSmoothL1:
      break;
  }
  throw ArgumentError("position_term: smooth_l1 has no scale term");
}

template <typename ModeProbabilities>
MultimodalLossResult multimodal_core(
  std::span<const std::vector<WaypointPrediction>> modes, ModeProbabilities && ce_term,
  const Waypoint & current_truth, const Trajectory & future_truth, LossProfile profile,
  const DiversitySchedule & schedule, const LossWeights & weights)
{
  future_truth.validate();
  const int num_modes = static_cast<int>(modes.size());
  if (num_modes < 1) {
    throw ArgumentError("multimodal_loss: need at least one mode");
  }
  const std::size_t horizons = future_truth.size();
  for (const auto & m : modes) {
    if (m.size() != horizons) {
      throw ArgumentError("multimodal_loss: mode horizon count does not match ground truth");
    }
  }
  MultimodalLossResult result;
  result.mode = assign_mode(current_truth, future_truth, num_modes).mode_index;
  result.grad_modes.assign(
    static_cast<std::size_t>(num_modes),
    std::vector<WaypointPrediction>(horizons, WaypointPrediction::zero()));
  const double traj = trajectory_loss(
    modes[static_cast<std::size_t>(result.mode)], future_truth.waypoints, 1,
    future_truth.horizon_dt, profile, schedule, weights,
    result.grad_modes[static_cast<std::size_t>(result.mode)]);
  result.cross_entropy = ce_term(result.mode, result.grad_mode_params);
  result.value = traj + result.cross_entropy;
  return result;
}

}  // namespace

ValueGrad focal_loss(double p_hat, bool is_foreground, double gamma)
{
  if (!(gamma >= 0.0)) {
    throw ArgumentError("focal_loss: gamma must be >= 0");
  }
  const bool clamped = !(p_hat > kFocalEpsilon && p_hat < 1.0 - kFocalEpsilon);
  const double p = std::clamp(p_hat, kFocalEpsilon, 1.0 - kFocalEpsilon);
  const double q = is_foreground ? p : 1.0 - p;
  const double one_minus = 1.0 - q;
  const double log_q = std::log(q);
  const double modulator = gamma == 0.0 ? 1.0 : std::pow(one_minus, gamma);
  const double value = -modulator * log_q;
  double d_dq = -modulator / q;
  if (gamma != 0.0) {
    d_dq += gamma * std::pow(one_minus, gamma - 1.0) * log_q;
  }
  const double grad = clamped ? 0.0 : (is_foreground ? d_dq : -d_dq);
  return {value, grad};
}

ValueGrad smooth_l1(double r)
{
  const double a = std::abs(r);
  if (a < 1.0) {
    return {0.5 * r * r, r};
  }
  return {a - 0.5, sign_or_zero(r)};
}

ValueGrad softplus(double x)
{
  const double value = (x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)));
  const double sigmoid = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  return {value + kSoftplusFloor, sigmoid};
}

double softplus_inverse(double y)
{
  const double v = y - kSoftplusFloor;
  if (!(v > 0.0)) {
    throw ArgumentError("softplus_inverse: value must exceed the softplus floor");
  }
  // log(e^v - 1), stable for large v.
  return v > 30.0 ? v + std::log1p(-std::exp(-v)) : std::log(std::expm1(v));
}

ScaleLossResult laplace_kl(double e_hat, double b_hat, double b_gt)
{
  require_positive_scale(b_hat, "laplace_kl");
  require_positive_scale(b_gt, "laplace_kl");
  const double a = std::abs(e_hat);
  const double decay = std::exp(-a / b_gt);
  const double numer = b_gt * decay + a;
  ScaleLossResult r;
  r.value = std::log(b_hat / b_gt) + numer / b_hat - 1.0;
  r.d_error = sign_or_zero(e_hat) * (1.0 - decay) / b_hat;
  r.d_scale = 1.0 / b_hat - numer / (b_hat * b_hat);
  return r;
}

ScaleLossResult gaussian_kl(double e_hat, double sigma_hat, double sigma_gt)
{
  require_positive_scale(sigma_hat, "gaussian_kl");
  require_positive_scale(sigma_gt, "gaussian_kl");
  const double numer = sigma_gt * sigma_gt + e_hat * e_hat;
  const double s2 = sigma_hat * sigma_hat;
  ScaleLossResult r;
  r.value = std::log(sigma_hat / sigma_gt) + numer / (2.0 * s2) - 0.5;
  r.d_error = e_hat / s2;
  r.d_scale = 1.0 / sigma_hat - numer / (s2 * sigma_hat);
  return r;
}

ScaleLossResult laplace_nll(double e_hat, double b_hat)
{
  require_positive_scale(b_hat, "laplace_nll");
  const double a = std::abs(e_hat);
  ScaleLossResult r;
  r.value = std::log(2.0 * b_hat) + a / b_hat;
  r.d_error = sign_or_zero(e_hat) / b_hat;
  r.d_scale = 1.0 / b_hat - a / (b_hat * b_hat);
  return r;
}

ScaleLossResult gaussian_nll(double e_hat, double sigma_hat)
{
  require_positive_scale(sigma_hat, "gaussian_nll");
  const double s2 = sigma_hat * sigma_hat;
  ScaleLossResult r;
  r.value = 0.5 * std::log(2.0 * kPi * s2) + e_hat * e_hat / (2.0 * s2);
  r.d_error = e_hat / s2;
  r.d_scale = 1.0 / sigma_hat - e_hat * e_hat / (s2 * sigma_hat);
  return r;
}

void DiversitySchedule::validate(bool strict) const
{
  for (const double v : {alpha_at, beta_at, alpha_ct, beta_ct}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ConfigError("DiversitySchedule: coefficients must be finite and >= 0");
    }
  }
  if (strict && !(alpha_at > 0.0 && alpha_ct > 0.0)) {
    throw ConfigError("DiversitySchedule: alpha_at and alpha_ct must be > 0");
  }
}

double diversity_at(const DiversitySchedule & schedule, double t, Axis axis)
{
  if (!(t >= 0.0)) {
    throw ArgumentError("diversity_at: t must be >= 0");
  }
  return axis == Axis::kAlongTrack ? schedule.alpha_at + schedule.beta_at * t
                                   : schedule.alpha_ct + schedule.beta_ct * t;
}

void LossWeights::validate() const
{
  if (!(lambda_decay > 0.0 && lambda_decay < 1.0)) {
    throw ConfigError("LossWeights: lambda_decay must lie in (0, 1)");
  }
  if (!(gamma_focal >= 0.0)) {
    throw ConfigError("LossWeights: gamma_focal must be >= 0");
  }
}

double horizon_weight(int h, double lambda_decay) { return std::pow(lambda_decay, h); }

std::string_view loss_profile_name(LossProfile profile)
{
  return kLossProfileNames[static_cast<std::size_t>(profile)];
}

LossProfile loss_profile_from_name(std::string_view name)
{
  for (std::size_t i = 0; i < kLossProfileNames.size(); ++i) {
    if (kLossProfileNames[i] == name) {
      return static_cast<LossProfile>(i);
    }
  }
  std::string valid;
  for (const auto n : kLossProfileNames) {
    valid += (valid.empty() ? "" : ", ") + std::string(n);
  }
  throw ConfigError("unknown loss profile '" + std::string(name) + "' (valid: " + valid + ")");
}

bool is_uncertainty_profile(LossProfile profile) { return profile != LossProfile::kSmoothL1; }

WaypointPrediction & WaypointPrediction::operator+=(const WaypointPrediction & o)
{
  cx += o.cx;
  cy += o.cy;
  sin_heading += o.sin_heading;
  cos_heading += o.cos_heading;
  raw_b_at += o.raw_b_at;
  raw_b_ct += o.raw_b_ct;
  return *this;
}

double trajectory_loss(
  std::span<const WaypointPrediction> pred, std::span<const Waypoint> truth, int first_horizon,
  double horizon_dt, LossProfile profile, const DiversitySchedule & schedule,
  const LossWeights & weights, std::span<WaypointPrediction> grad)
{
  if (pred.size() != truth.size()) {
    throw ArgumentError("trajectory_loss: prediction/truth horizon count mismatch");
  }
  if (!grad.empty() && grad.size() != pred.size()) {
    throw ArgumentError("trajectory_loss: gradient buffer has the wrong size");
  }
  const bool uncertain = is_uncertainty_profile(profile);
  double total = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const int h = first_horizon + static_cast<int>(k);
    const double w = horizon_weight(h, weights.lambda_decay);
    const WaypointPrediction & p = pred[k];
    const Waypoint & t = truth[k];
    WaypointPrediction g = WaypointPrediction::zero();
    double term = 0.0;

    if (uncertain) {
      const double time = static_cast<double>(h) * horizon_dt;
      const AtCtError e = decompose_at_ct(Waypoint{p.cx, p.cy, 0.0}, t);
      const ValueGrad b_at = softplus(p.raw_b_at);
      const ValueGrad b_ct = softplus(p.raw_b_ct);
      const ScaleLossResult at =
        position_term(profile, e.at, b_at.value, diversity_at(schedule, time, Axis::kAlongTrack));
      const ScaleLossResult ct =
        position_term(profile, e.ct, b_ct.value, diversity_at(schedule, time, Axis::kCrossTrack));
      term += at.value + ct.value;
      const double c = std::cos(t.heading);
      const double s = std::sin(t.heading);
      // e_at = dx c + dy s ; e_ct = -dx s + dy c
      g.cx = at.d_error * c - ct.d_error * s;
      g.cy = at.d_error * s + ct.d_error * c;
      g.raw_b_at = at.d_scale * b_at.grad;
      g.raw_b_ct = ct.d_scale * b_ct.grad;
    } else {
      const ValueGrad x = smooth_l1(p.cx - t.cx);
      const ValueGrad y = smooth_l1(p.cy - t.cy);
      term += x.value + y.value;
      g.cx = x.grad;
      g.cy = y.grad;
    }
    const ValueGrad hs = smooth_l1(p.sin_heading - std::sin(t.heading));
    const ValueGrad hc = smooth_l1(p.cos_heading - std::cos(t.heading));
    term += hs.value + hc.value;
    g.sin_heading = hs.grad;
    g.cos_heading = hc.grad;

    total += w * term;
    if (!grad.empty()) {
      grad[k] = {w * g.cx, w * g.cy, w * g.sin_heading, w * g.cos_heading, w * g.raw_b_at,
                 w * g.raw_b_ct};
    }
  }
  return total;
}

ForegroundLoss horizon_loss_foreground(
  const ForegroundCell & cell, LossProfile profile, const DiversitySchedule & schedule,
  const LossWeights & weights)
{
  if (cell.predicted.size() != cell.truth.size()) {
    throw ArgumentError("horizon_loss: prediction/truth horizon count mismatch");
  }
  if (cell.predicted.size() < 2) {
    throw ArgumentError("horizon_loss: need the current box and at least one future horizon");
  }
  ForegroundLoss out;
  out.grad.waypoints.assign(cell.predicted.size(), WaypointPrediction::zero());
  const ValueGrad focal = focal_loss(cell.detection.p_hat, true, weights.gamma_focal);
  const ValueGrad dl = smooth_l1(cell.detection.length - cell.true_length);
  const ValueGrad dw = smooth_l1(cell.detection.width - cell.true_width);
  // lambda^0 = 1 for the detection terms.
  out.value = focal.value + dl.value + dw.value;
  out.grad.detection = {focal.grad, dl.grad, dw.grad};
  out.value += trajectory_loss(
    cell.predicted, cell.truth, 0, cell.horizon_dt, profile, schedule, weights, out.grad.waypoints);
  return out;
}

ValueGrad horizon_loss_background(double p_hat, const LossWeights & weights)
{
  return focal_loss(p_hat, false, weights.gamma_focal);
}

std::vector<double> mode_bin_edges(int num_modes)
{
  if (num_modes < 1) {
    throw ArgumentError("mode_bin_edges: need at least one mode");
  }
  std::vector<double> edges(static_cast<std::size_t>(num_modes) + 1);
  const double width = kTwoPi / num_modes;
  for (int k = 0; k <= num_modes; ++k) {
    edges[static_cast<std::size_t>(k)] = -kPi + k * width;
  }
  edges.back() = kPi;
  return edges;
}

int mode_bin(double delta_theta, int num_modes)
{
  if (num_modes < 1) {
    throw ArgumentError("mode_bin: need at least one mode");
  }
  const double width = kTwoPi / num_modes;
  const int k = static_cast<int>(std::ceil((delta_theta + kPi) / width)) - 1;
  return std::clamp(k, 0, num_modes - 1);
}

ModeAssignment assign_mode(const Waypoint & current, const Trajectory & future, int num_modes)
{
  future.validate();
  const double delta = normalize_angle(future.waypoints.back().heading - current.heading);
  return {mode_bin(delta, num_modes), mode_bin_edges(num_modes)};
}

std::vector<double> softmax(std::span<const double> logits)
{
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) {
    return p;
  }
  const double mx = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (double & v : p) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double & v : p) {
    v /= sum;
  }
  return p;
}

MultimodalLossResult multimodal_loss(
  std::span<const std::vector<WaypointPrediction>> modes, std::span<const double> logits,
  const Waypoint & current_truth, const Trajectory & future_truth, LossProfile profile,
  const DiversitySchedule & schedule, const LossWeights & weights)
{
  if (logits.size() != modes.size()) {
    throw ArgumentError("multimodal_loss: one logit per mode required");
  }
  auto ce = [&](int m, std::vector<double> & grad) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (const double l : logits) {
      sum += std::exp(l - mx);
    }
    const double log_norm = mx + std::log(sum);
    grad = softmax(logits);
    grad[static_cast<std::size_t>(m)] -= 1.0;
    return log_norm - logits[static_cast<std::size_t>(m)];
  };
  return multimodal_core(modes, ce, current_truth, future_truth, profile, schedule, weights);
}

MultimodalLossResult multimodal_loss_from_probabilities(
  std::span<const std::vector<WaypointPrediction>> modes, std::span<const double> probabilities,
  const Waypoint & current_truth, const Trajectory & future_truth, LossProfile profile,
  const DiversitySchedule & schedule, const LossWeights & weights)
{
  if (probabilities.size() != modes.size()) {
    throw ArgumentError("multimodal_loss: one probability per mode required");
  }
  const double sum = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
  const bool in_range = std::all_of(
    probabilities.begin(), probabilities.end(), [](double p) { return p >= 0.0 && p <= 1.0; });
  if (!in_range || std::abs(sum - 1.0) > 1e-6) {
    throw ArgumentError("multimodal_loss: mode probabilities do not form a simplex");
  }
  auto ce = [&](int m, std::vector<double> & grad) {
    const double p = std::max(probabilities[static_cast<std::size_t>(m)], 1e-300);
    grad.assign(probabilities.size(), 0.0);
    grad[static_cast<std::size_t>(m)] = -1.0 / p;
    return -std::log(p);
  };
  return multimodal_core(modes, ce, current_truth, future_truth, profile, schedule, weights);
}

}  // namespace bevmotion
