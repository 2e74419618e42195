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

#ifndef BEVMOTION__REPORT_HPP_
#define BEVMOTION__REPORT_HPP_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bevmotion/actor.hpp"
#include "bevmotion/evaluation.hpp"
#include "bevmotion/losses.hpp"
#include "bevmotion/metrics.hpp"

namespace bevmotion
{

inline constexpr std::string_view kReportCsvHeader =
  "class,variant,ap,de_cm,ct_cm,threshold,recall,recall_reachable,num_labels,num_tp";
inline constexpr std::string_view kCalibrationCsvHeader = "class,axis,nominal,empirical,count";

/// One row per (class, variant) with variant in {highest_prob, min_over_m}; absent values
/// are written as NA.
std::string report_csv(const EvalReport & report);
/// Fixed-width table for terminals.
std::string report_table(const EvalReport & report);

std::string_view axis_name(Axis axis);

/// One row per nominal level; `count` is the number of actors behind the curve.
std::string calibration_csv(
  ActorClass cls, Axis axis, std::span<const CoveragePoint> curve, std::size_t count);

/// Reliability diagram as a standalone SVG line plot (with the identity diagonal).
std::string reliability_svg(std::string_view title, std::span<const CoveragePoint> curve);

}  // namespace bevmotion

#endif  // BEVMOTION__REPORT_HPP_
