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

#include "bevmotion/report.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>

namespace bevmotion
{
namespace
{

std::string fixed(double v, int digits)
{
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

std::string optional_fixed(const std::optional<double> & v, int digits)
{
  return v ? fixed(*v, digits) : "NA";
}

std::string threshold_text(const OperatingPoint & op)
{
  return std::isfinite(op.threshold) ? fixed(op.threshold, 6) : "NA";
}

struct Row
{
  std::string cls;
  std::string variant;
  std::string ap;
  std::string de;
  std::string ct;
  std::string threshold;
  std::string recall;
  std::string reachable;
  std::string labels;
  std::string tp;
};

std::vector<Row> rows_of(const EvalReport & report)
{
  std::vector<Row> rows;
  for (const ClassReport & c : report.classes) {
    for (int v = 0; v < 2; ++v) {
      Row r;
      r.cls = std::string(actor_class_name(c.cls));
      r.variant = v == 0 ? "highest_prob" : "min_over_m";
      r.ap = optional_fixed(c.ap, 6);
      if (c.errors) {
        const ErrorSummary & e = v == 0 ? c.errors->highest_probability : c.errors->min_over_m;
        r.de = fixed(e.de_cm, 3);
        r.ct = fixed(e.ct_cm, 3);
      } else {
        r.de = "NA";
        r.ct = "NA";
      }
      r.threshold = threshold_text(c.operating_point);
      r.recall = c.num_labels > 0 ? fixed(c.operating_point.recall, 6) : "NA";
      r.reachable = c.operating_point.reachable ? "true" : "false";
      r.labels = std::to_string(c.num_labels);
      r.tp = std::to_string(c.num_tp);
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

}  // namespace

std::string report_csv(const EvalReport & report)
{
  std::string out(kReportCsvHeader);
  out += '\n';
  for (const Row & r : rows_of(report)) {
    out += r.cls + ',' + r.variant + ',' + r.ap + ',' + r.de + ',' + r.ct + ',' + r.threshold + ',' +
           r.recall + ',' + r.reachable + ',' + r.labels + ',' + r.tp + '\n';
  }
  return out;
}

std::string report_table(const EvalReport & report)
{
  std::ostringstream ss;
  ss << "horizon " << fixed(report.horizon_s, 1) << " s (waypoint " << report.horizon_index + 1 << ")\n";
  ss << std::left << std::setw(11) << "class" << std::setw(14) << "variant" << std::right
     << std::setw(10) << "AP" << std::setw(12) << "DE [cm]" << std::setw(12) << "CT [cm]"
     << std::setw(10) << "recall" << std::setw(8) << "TP" << std::setw(8) << "labels" << '\n';
  for (const Row & r : rows_of(report)) {
    ss << std::left << std::setw(11) << r.cls << std::setw(14) << r.variant << std::right
       << std::setw(10) << r.ap << std::setw(12) << r.de << std::setw(12) << r.ct << std::setw(10)
       << r.recall << std::setw(8) << r.tp << std::setw(8) << r.labels << '\n';
  }
  return ss.str();
}

std::string_view axis_name(Axis axis) { return axis == Axis::kAlongTrack ? "along_track" : "cross_track"; }

std::string calibration_csv(
  ActorClass cls, Axis axis, std::span<const CoveragePoint> curve, std::size_t count)
{
  std::string out(kCalibrationCsvHeader);
  out += '\n';
  for (const CoveragePoint & p : curve) {
    out += std::string(actor_class_name(cls)) + ',' + std::string(axis_name(axis)) + ',' +
           fixed(p.nominal, 2) + ',' + (count > 0 ? fixed(p.empirical, 6) : "NA") + ',' +
           std::to_string(count) + '\n';
  }
  return out;
}

std::string reliability_svg(std::string_view title, std::span<const CoveragePoint> curve)
{
  constexpr double kSize = 320.0;
  constexpr double kMargin = 40.0;
  const auto px = [&](double v) { return kMargin + v * kSize; };
  const auto py = [&](double v) { return kMargin + (1.0 - v) * kSize; };
  std::string escaped;
  for (const char c : title) {
    switch (c) {
      case '&': escaped += "&amp;"; break;
      case '<': escaped += "&lt;"; break;
      case '>': escaped += "&gt;"; break;
      case '"': escaped += "&quot;"; break;
      default: escaped.push_back(c);
    }
  }
  std::ostringstream ss;
  const double total = kSize + 2.0 * kMargin;
  ss << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << total << "\" height=\"" << total
     << "\" viewBox=\"0 0 " << total << ' ' << total << "\">\n"
     << "  <title>" << escaped << "</title>\n"
     << "  <rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kSize << "\" height=\""
     << kSize << "\" fill=\"none\" stroke=\"black\"/>\n"
     << "  <line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\"" << py(1)
     << "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
  ss << "  <polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    ss << (i == 0 ? "" : " ") << fixed(px(curve[i].nominal), 2) << ','
       << fixed(py(curve[i].empirical), 2);
  }
  ss << "\"/>\n";
  ss << "  <text x=\"" << kMargin << "\" y=\"" << kMargin / 2 << "\" font-size=\"14\">" << escaped
     << "</text>\n"
     << "  <text x=\"" << px(0.5) << "\" y=\"" << total - 8 << "\" font-size=\"12\" "
     << "text-anchor=\"middle\">nominal coverage</text>\n"
     << "  <text x=\"12\" y=\"" << py(0.5) << "\" font-size=\"12\" text-anchor=\"middle\" "
     << "transform=\"rotate(-90 12 " << py(0.5) << ")\">empirical coverage</text>\n"
     << "</svg>\n";
  return ss.str();
}

}  // namespace bevmotion
