// Copyright 2026 The Spoofbench Authors
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

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace spoofbench {

using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle in degrees to (-180, 180].
inline double wrap_deg(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r <= -180.0) r += 360.0;
  if (r > 180.0) r -= 360.0;
  return r;
}

/// Wraps an angle in radians to (-pi, pi].
inline double wrap_rad(double rad) {
  double r = std::fmod(rad, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  if (r > kPi) r -= 2.0 * kPi;
  return r;
}

// Base class for all toolkit errors. Readers and pipeline stages report
// malformed input or violated preconditions by throwing a subclass of this;
// they never crash on arbitrary bytes.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// One LiDAR return. Coordinates are meters in the sensor frame
// (x forward, y left, z up); intensity is unitless in [0, 1].
struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double intensity = 0.0;

  Point() = default;
  Point(double px, double py, double pz, double pi = 0.0)
      : x(px), y(py), z(pz), intensity(pi) {}
  explicit Point(const Vec3& v, double pi = 0.0)
      : x(v.x()), y(v.y()), z(v.z()), intensity(pi) {}

  Vec3 position() const { return {x, y, z}; }
};

// Ordered point sequence; iteration order is stable so that downstream
// results are deterministic.
struct PointCloud {
  std::vector<Point> points;
  std::string frame_id;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

// Oriented 3D bounding box in the sensor frame. dims = (length, width,
// height) where length is the x extent at yaw 0; yaw rotates about +z and is
// kept in (-pi, pi].
struct Box3D {
  Vec3 center = Vec3::Zero();
  Vec3 dims = Vec3::Zero();  // (l, w, h)
  double yaw = 0.0;

  Box3D() = default;
  Box3D(const Vec3& c, const Vec3& lwh, double yaw_rad)
      : center(c), dims(lwh), yaw(wrap_rad(yaw_rad)) {}

  double length() const { return dims.x(); }
  double width() const { return dims.y(); }
  double height() const { return dims.z(); }
  double volume() const { return dims.x() * dims.y() * dims.z(); }
  double bottom() const { return center.z() - dims.z() / 2.0; }
  double top() const { return center.z() + dims.z() / 2.0; }

  /// BEV range of the box center from the sensor origin.
  double bev_range() const { return std::hypot(center.x(), center.y()); }
};

struct Detection {
  Box3D box;
  double score = 0.0;
  std::string frame_id;
};

// Triangle soup; indices refer to `vertices`. Degenerate faces are filtered
// at load time, so every triangle has positive area.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;

  bool empty() const { return triangles.empty(); }
};

// Physical envelope of the laser spoofer: at most `max_points` returns
// within an azimuth window, aimed at a front-near distance band.
struct AttackCapability {
  int max_points = 200;
  double azimuth_window_deg = 10.0;
  double min_range_m = 5.0;
  double max_range_m = 8.0;
};

enum class TraceKind { kOccluded, kDistant, kRendered, kSensorBaseline };

std::string to_string(TraceKind kind);
TraceKind trace_kind_from_string(const std::string& s);

struct TraceMeta {
  TraceKind kind = TraceKind::kRendered;
  int point_count = 0;
  double azimuth_extent_deg = 0.0;
  double source_range_m = 0.0;
};

// A candidate spoof point set plus provenance metadata. The metadata is kept
// consistent with the points by the operations that produce traces.
struct AttackTrace {
  PointCloud points;
  TraceMeta meta;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

}  // namespace spoofbench
