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

#include "bevmotion/geometry.hpp"

#include <algorithm>
#include <tuple>

#include "bevmotion/error.hpp"

namespace bevmotion
{
namespace
{

constexpr double kMergeEpsilon = 1e-9;
constexpr double kMinPolygonArea = 1e-12;

// Signed distance-like value: > 0 when p is left of the directed edge a->b.
double side_of(Vec2 a, Vec2 b, Vec2 p) { return cross(b - a, p - a); }

Vec2 segment_line_intersection(Vec2 p, Vec2 q, Vec2 a, Vec2 b)
{
  const double sp = side_of(a, b, p);
  const double sq = side_of(a, b, q);
  const double t = sp / (sp - sq);
  return p + t * (q - p);
}

void merge_close_vertices(std::vector<Vec2> & poly)
{
  if (poly.empty()) {
    return;
  }
  std::vector<Vec2> out;
  out.reserve(poly.size());
  for (const Vec2 & v : poly) {
    if (out.empty() || norm(v - out.back()) >= kMergeEpsilon) {
      out.push_back(v);
    }
  }
  while (out.size() > 1 && norm(out.front() - out.back()) < kMergeEpsilon) {
    out.pop_back();
  }
  poly = std::move(out);
}

}  // namespace

double normalize_angle(double theta)
{
  if (!std::isfinite(theta)) {
    throw DomainError("normalize_angle: non-finite angle");
  }
  double r = std::remainder(theta, kTwoPi);
  if (r <= -kPi) {
    r += kTwoPi;
  }
  return r;
}

OrientedBox::OrientedBox(Vec2 c, double l, double w, double h)
: center(c), length(l), width(w), heading(0.0)
{
  if (!(l > 0.0) || !(w > 0.0) || !std::isfinite(l) || !std::isfinite(w)) {
    throw ArgumentError("OrientedBox: length and width must be positive and finite");
  }
  if (!std::isfinite(c.x) || !std::isfinite(c.y)) {
    throw ArgumentError("OrientedBox: non-finite center");
  }
  heading = normalize_angle(h);
}

void Trajectory::validate() const
{
  if (waypoints.empty()) {
    throw ArgumentError("Trajectory: needs at least one waypoint");
  }
  if (!(horizon_dt > 0.0)) {
    throw ArgumentError("Trajectory: horizon_dt must be positive");
  }
}

std::array<Vec2, 4> box_corners(const OrientedBox & box)
{
  const double hl = 0.5 * box.length;
  const double hw = 0.5 * box.width;
  const double c = std::cos(box.heading);
  const double s = std::sin(box.heading);
  const auto place = [&](double fx, double fy) {
    return Vec2{box.center.x + c * fx - s * fy, box.center.y + s * fx + c * fy};
  };
  return {place(hl, hw), place(-hl, hw), place(-hl, -hw), place(hl, -hw)};
}

double polygon_signed_area(std::span<const Vec2> polygon)
{
  const std::size_t n = polygon.size();
  if (n < 3) {
    return 0.0;
  }
  double twice = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    twice += cross(polygon[i], polygon[(i + 1) % n]);
  }
  return 0.5 * twice;
}

std::vector<Vec2> clip_convex_polygons(std::span<const Vec2> subject, std::span<const Vec2> clip)
{
  std::vector<Vec2> output(subject.begin(), subject.end());
  const std::size_t n = clip.size();
  for (std::size_t e = 0; e < n && !output.empty(); ++e) {
    const Vec2 a = clip[e];
    const Vec2 b = clip[(e + 1) % n];
    std::vector<Vec2> input;
    input.swap(output);
    for (std::size_t i = 0; i < input.size(); ++i) {
      const Vec2 cur = input[i];
      const Vec2 prev = input[(i + input.size() - 1) % input.size()];
      const bool cur_in = side_of(a, b, cur) >= 0.0;
      const bool prev_in = side_of(a, b, prev) >= 0.0;
      if (cur_in) {
        if (!prev_in) {
          output.push_back(segment_line_intersection(prev, cur, a, b));
        }
        output.push_back(cur);
      } else if (prev_in) {
        output.push_back(segment_line_intersection(prev, cur, a, b));
      }
    }
    merge_close_vertices(output);
  }
  if (output.size() < 3 || std::abs(polygon_signed_area(output)) < kMinPolygonArea) {
    return {};
  }
  return output;
}

double rotated_iou(const OrientedBox & a, const OrientedBox & b)
{
  const double area_a = a.area();
  const double area_b = b.area();
  // Disjoint bounding circles.
  const double ra = 0.5 * std::hypot(a.length, a.width);
  const double rb = 0.5 * std::hypot(b.length, b.width);
  if (norm(a.center - b.center) > ra + rb) {
    return 0.0;
  }
  const auto ca = box_corners(a);
  const auto cb = box_corners(b);
  // Clip the smaller-index box first so that iou(a, b) and iou(b, a) evaluate the same
  // floating point expression.
  const bool swap = std::tie(b.center.x, b.center.y, b.length, b.width, b.heading) <
                    std::tie(a.center.x, a.center.y, a.length, a.width, a.heading);
  const auto & first = swap ? cb : ca;
  const auto & second = swap ? ca : cb;
  const auto inter_poly = clip_convex_polygons(first, second);
  const double inter = inter_poly.empty() ? 0.0 : std::abs(polygon_signed_area(inter_poly));
  const double uni = area_a + area_b - inter;
  if (!(uni > 0.0)) {
    return 0.0;
  }
  return std::clamp(inter / uni, 0.0, 1.0);
}

AtCtError decompose_at_ct(const Waypoint & predicted, const Waypoint & truth)
{
  const double dx = predicted.cx - truth.cx;
  const double dy = predicted.cy - truth.cy;
  const double c = std::cos(truth.heading);
  const double s = std::sin(truth.heading);
  return {dx * c + dy * s, -dx * s + dy * c};
}

SinCos heading_to_sincos(double theta)
{
  if (!std::isfinite(theta)) {
    throw DomainError("heading_to_sincos: non-finite angle");
  }
  return {std::sin(theta), std::cos(theta)};
}

double sincos_to_heading(SinCos sc)
{
  if (!std::isfinite(sc.sin) || !std::isfinite(sc.cos) || (sc.sin == 0.0 && sc.cos == 0.0)) {
    throw DomainError("sincos_to_heading: direction (0, 0) has no heading");
  }
  return normalize_angle(std::atan2(sc.sin, sc.cos));
}

Vec2 Pose2::apply(Vec2 p) const { return rotate(p, yaw) + Vec2{x, y}; }

Vec2 Pose2::apply_inverse(Vec2 p) const { return rotate(p - Vec2{x, y}, -yaw); }

}  // namespace bevmotion
