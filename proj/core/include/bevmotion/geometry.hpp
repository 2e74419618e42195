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

#ifndef BEVMOTION__GEOMETRY_HPP_
#define BEVMOTION__GEOMETRY_HPP_

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace bevmotion
{

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Vec2
{
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
  friend constexpr bool operator==(Vec2 a, Vec2 b) = default;
};

inline constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

/// Rotates `v` counter-clockwise by `angle` radians.
inline Vec2 rotate(Vec2 v, double angle)
{
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Maps `theta` to its representative in (-pi, pi]. Throws DomainError on non-finite input.
double normalize_angle(double theta);

/// Oriented rectangle in the ground plane. Heading is measured from +x, counter-clockwise.
struct OrientedBox
{
  Vec2 center;
  double length = 1.0;
  double width = 1.0;
  double heading = 0.0;

  OrientedBox() = default;
  /// Validates extents and normalizes heading.
  OrientedBox(Vec2 center, double length, double width, double heading);

  double area() const { return length * width; }
};

/// Position plus heading at one time step.
struct Waypoint
{
  double cx = 0.0;
  double cy = 0.0;
  double heading = 0.0;

  Vec2 position() const { return {cx, cy}; }
};

/// H future waypoints sampled every `horizon_dt` seconds.
struct Trajectory
{
  std::vector<Waypoint> waypoints;
  double horizon_dt = 0.1;

  std::size_t size() const { return waypoints.size(); }
  /// Throws ArgumentError unless H >= 1 and horizon_dt > 0.
  void validate() const;
};

/// Signed error components in the ground-truth heading frame. Positive CT is left of heading.
struct AtCtError
{
  double at = 0.0;
  double ct = 0.0;
};

struct SinCos
{
  double sin = 0.0;
  double cos = 1.0;
};

/// Corners in counter-clockwise order starting at front-left in the box frame.
std::array<Vec2, 4> box_corners(const OrientedBox & box);

/// Area of a simple polygon via the shoelace formula (positive when counter-clockwise).
double polygon_signed_area(std::span<const Vec2> polygon);

/// Intersection of two convex counter-clockwise polygons by Sutherland-Hodgman clipping.
/// Vertices closer than 1e-9 m are merged; degenerate results come back empty.
std::vector<Vec2> clip_convex_polygons(std::span<const Vec2> subject, std::span<const Vec2> clip);

/// Intersection-over-union of two oriented rectangles treated as point sets.
double rotated_iou(const OrientedBox & a, const OrientedBox & b);

/// Decomposes predicted - truth into along-track and cross-track components using the
/// ground-truth heading.
AtCtError decompose_at_ct(const Waypoint & predicted, const Waypoint & truth);

SinCos heading_to_sincos(double theta);
/// Inverse of heading_to_sincos for any non-zero pair (need not be unit length).
double sincos_to_heading(SinCos sc);

/// Planar rigid transform: p -> R(yaw) p + t.
struct Pose2
{
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;

  Vec2 apply(Vec2 p) const;
  Vec2 apply_inverse(Vec2 p) const;
};

}  // namespace bevmotion

#endif  // BEVMOTION__GEOMETRY_HPP_
