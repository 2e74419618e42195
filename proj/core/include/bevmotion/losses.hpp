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

#ifndef BEVMOTION__LOSSES_HPP_
#define BEVMOTION__LOSSES_HPP_

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bevmotion/geometry.hpp"

namespace bevmotion
{

/// Loss value with its derivative with respect to the single input.
struct ValueGrad
{
  double value = 0.0;
  double grad = 0.0;
};

/// Loss value with derivatives with respect to the location error and the predicted scale.
struct ScaleLossResult
{
  double value = 0.0;
  double d_error = 0.0;
  double d_scale = 0.0;
};

inline constexpr double kFocalEpsilon = 1e-7;
inline constexpr double kSoftplusFloor = 1e-4;

/// -(1 - q)^gamma * log(q) with q = p_hat (foreground) or 1 - p_hat (background), p_hat
/// clamped to [eps, 1 - eps]. The derivative is w.r.t. p_hat and is 0 where clamping is active.
ValueGrad focal_loss(double p_hat, bool is_foreground, double gamma);

/// 0.5 r^2 for |r| < 1, |r| - 0.5 otherwise.
ValueGrad smooth_l1(double residual);

/// log(1 + e^x) + 1e-4; maps unconstrained parameters to positive scales.
ValueGrad softplus(double x);
/// Inverse of softplus (for initialization); requires y > 1e-4.
double softplus_inverse(double y);

/// KL(Laplace(0, b_gt) || Laplace(e_hat, b_hat)). |e| has subgradient 0 at e = 0.
ScaleLossResult laplace_kl(double e_hat, double b_hat, double b_gt);
/// KL(N(0, sigma_gt^2) || N(e_hat, sigma_hat^2)).
ScaleLossResult gaussian_kl(double e_hat, double sigma_hat, double sigma_gt);
/// -log Laplace(e_hat; 0, b_hat).
ScaleLossResult laplace_nll(double e_hat, double b_hat);
/// -log N(e_hat; 0, sigma_hat^2).
ScaleLossResult gaussian_nll(double e_hat, double sigma_hat);

struct LaplaceParams
{
  double mu = 0.0;
  double b = 1.0;
};

enum class Axis
{
  kAlongTrack,
  kCrossTrack,
};

/// Ground-truth diversity growing linearly with the prediction horizon: b(t) = alpha + beta t.
struct DiversitySchedule
{
  double alpha_at = 0.2;
  double beta_at = 0.3;
  double alpha_ct = 0.2;
  double beta_ct = 0.1;

  /// Non-negative coefficients. With `strict`, alphas must be positive so b(t) > 0.
  void validate(bool strict = true) const;
  DiversitySchedule scaled(double factor) const
  {
    return {alpha_at * factor, beta_at * factor, alpha_ct * factor, beta_ct * factor};
  }
};

double diversity_at(const DiversitySchedule & schedule, double t, Axis axis);

struct LossWeights
{
  double lambda_decay = 0.97;
  double gamma_focal = 2.0;

  void validate() const;
};

/// lambda^h.
double horizon_weight(int h, double lambda_decay);

enum class LossProfile
{
  kSmoothL1,
  kKlLaplace,
  kKlGaussian,
  kNllLaplace,
  kNllGaussian,
};

inline constexpr std::array<std::string_view, 5> kLossProfileNames = {
  "smooth_l1", "kl_laplace", "kl_gaussian", "nll_laplace", "nll_gaussian"};

std::string_view loss_profile_name(LossProfile profile);
/// Throws ConfigError listing the valid names.
LossProfile loss_profile_from_name(std::string_view name);
bool is_uncertainty_profile(LossProfile profile);

/// Raw network outputs for one horizon. Also used as the gradient container.
struct WaypointPrediction
{
  double cx = 0.0;
  double cy = 0.0;
  double sin_heading = 0.0;
  double cos_heading = 1.0;
  double raw_b_at = 0.0;  // pre-softplus along-track diversity
  double raw_b_ct = 0.0;  // pre-softplus cross-track diversity

  static WaypointPrediction zero() { return {0.0, 0.0, 0.0, 0.0, 0.0, 0.0}; }
  WaypointPrediction & operator+=(const WaypointPrediction & o);
};

/**
 * @brief Weighted sum of per-horizon position and heading terms.
 *
 * pred[k] / truth[k] belong to horizon h = first_horizon + k, weighted by lambda^h and
 * evaluated at time t = h * horizon_dt. Positions use smooth-l1 on (cx, cy) for the
 * smooth_l1 profile, otherwise the selected divergence on along/cross-track errors.
 * Headings always use smooth-l1 on (sin, cos). When `grad` is non-empty it must have
 * pred.size() entries and receives d(loss)/d(pred) (overwritten, not accumulated).
 */
double trajectory_loss(
  std::span<const WaypointPrediction> pred, std::span<const Waypoint> truth, int first_horizon,
  double horizon_dt, LossProfile profile, const DiversitySchedule & schedule,
  const LossWeights & weights, std::span<WaypointPrediction> grad = {});

struct DetectionPrediction
{
  double p_hat = 0.5;
  double length = 1.0;
  double width = 1.0;
};

/// Everything a foreground cell contributes: detection at h = 0 plus H future horizons.
struct ForegroundCell
{
  DetectionPrediction detection;
  double true_length = 1.0;
  double true_width = 1.0;
  std::vector<WaypointPrediction> predicted;  // h = 0..H (h = 0 is the detected box)
  std::vector<Waypoint> truth;                // h = 0..H
  double horizon_dt = 0.1;
};

struct ForegroundGradient
{
  DetectionPrediction detection{0.0, 0.0, 0.0};
  std::vector<WaypointPrediction> waypoints;
};

struct ForegroundLoss
{
  double value = 0.0;
  ForegroundGradient grad;
};

/// sum_h lambda^h L_fg(h) with focal + size terms at h = 0 only. Throws ArgumentError on
/// horizon count mismatch or when fewer than two entries (h = 0 and at least one future) are given.
ForegroundLoss horizon_loss_foreground(
  const ForegroundCell & cell, LossProfile profile, const DiversitySchedule & schedule,
  const LossWeights & weights);

/// Background cells only see the focal loss on 1 - p_hat.
ValueGrad horizon_loss_background(double p_hat, const LossWeights & weights);

// Multimodal assignment and loss -----------------------------------------------------

struct ModeAssignment
{
  int mode_index = 0;
  std::vector<double> bin_edges;  // M + 1 edges from -pi to pi
};

/// M equal-width bins of (-pi, pi], each open on the left and closed on the right.
std::vector<double> mode_bin_edges(int num_modes);
/// Bin of an already-normalized heading change.
int mode_bin(double delta_theta, int num_modes);
/// Bin of normalize_angle(final heading - current heading). Index 0 is the most negative
/// (right-turn) side.
ModeAssignment assign_mode(const Waypoint & current, const Trajectory & future, int num_modes);

struct MultimodalLossResult
{
  double value = 0.0;
  double cross_entropy = 0.0;
  int mode = 0;
  std::vector<std::vector<WaypointPrediction>> grad_modes;  // M x H; zero except mode `mode`
  std::vector<double> grad_mode_params;                      // w.r.t. logits or probabilities
};

/**
 * @brief Trajectory terms on the ground-truth mode plus cross-entropy over modes.
 *
 * modes[m][k] predicts horizon k + 1 of the future. Mode scores are logits (softmax applied
 * here); the gradient w.r.t. logits is softmax - onehot.
 */
MultimodalLossResult multimodal_loss(
  std::span<const std::vector<WaypointPrediction>> modes, std::span<const double> logits,
  const Waypoint & current_truth, const Trajectory & future_truth, LossProfile profile,
  const DiversitySchedule & schedule, const LossWeights & weights);

/// Same loss with mode probabilities given directly. Throws ArgumentError unless they form a
/// simplex within 1e-6. The gradient w.r.t. probabilities is -1/p at the ground-truth mode.
MultimodalLossResult multimodal_loss_from_probabilities(
  std::span<const std::vector<WaypointPrediction>> modes, std::span<const double> probabilities,
  const Waypoint & current_truth, const Trajectory & future_truth, LossProfile profile,
  const DiversitySchedule & schedule, const LossWeights & weights);

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

}  // namespace bevmotion

#endif  // BEVMOTION__LOSSES_HPP_
