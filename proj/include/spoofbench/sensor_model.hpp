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

#include <optional>
#include <string>
#include <vector>

#include "spoofbench/types.hpp"

namespace spoofbench {

class DegeneratePointError : public Error {
 public:
  using Error::Error;
};

class OutOfFovError : public Error {
 public:
  using Error::Error;
};

struct Spherical {
  double range_m = 0.0;
  double azimuth_deg = 0.0;    // atan2(y, x), wrapped to (-180, 180]
  double elevation_deg = 0.0;  // atan2(z, hypot(x, y))
};

/// Converts a Cartesian position (relative to `origin`) to range/azimuth/
/// elevation. Throws DegeneratePointError at zero range.
Spherical to_spherical(const Vec3& p, const Vec3& origin = Vec3::Zero());

/// Inverse of to_spherical. Throws Error for non-positive range.
Vec3 from_spherical(double range_m, double azimuth_deg, double elevation_deg,
                    const Vec3& origin = Vec3::Zero());

/// One direction of the firing lattice: a vertical channel plus an azimuth
/// step index.
struct RayId {
  int channel = 0;
  int azimuth_index = 0;

  bool operator==(const RayId&) const = default;
  bool operator<(const RayId& o) const {
    return channel != o.channel ? channel < o.channel
                                : azimuth_index < o.azimuth_index;
  }
};

// The sensor's firing lattice: per-channel elevation angles plus a fixed
// azimuth step over a configured span. Immutable after construction and safe
// to share across threads.
class SensorModel {
 public:
  /// Validates the invariants (elevations strictly increasing, positive step
  /// and range) and throws Error on violation.
  SensorModel(Vec3 origin, std::vector<double> elevations_deg,
              double azimuth_step_deg, double azimuth_start_deg,
              double azimuth_end_deg, double max_range_m);

  const Vec3& origin() const { return origin_; }
  const std::vector<double>& elevations_deg() const { return elevations_deg_; }
  double azimuth_step_deg() const { return azimuth_step_deg_; }
  double azimuth_start_deg() const { return azimuth_start_deg_; }
  double azimuth_end_deg() const { return azimuth_end_deg_; }
  double max_range_m() const { return max_range_m_; }

  int channel_count() const { return static_cast<int>(elevations_deg_.size()); }
  int azimuth_count() const { return azimuth_count_; }
  std::int64_t ray_count() const {
    return static_cast<std::int64_t>(channel_count()) * azimuth_count();
  }
  bool full_circle() const { return full_circle_; }

  double elevation_of(int channel) const { return elevations_deg_[channel]; }
  double azimuth_of(int azimuth_index) const {
    return azimuth_start_deg_ + azimuth_index * azimuth_step_deg_;
  }

  bool valid(const RayId& id) const {
    return id.channel >= 0 && id.channel < channel_count() &&
           id.azimuth_index >= 0 && id.azimuth_index < azimuth_count();
  }

  /// Unit direction of a lattice ray. Throws Error for invalid indices.
  Vec3 ray_direction(const RayId& id) const;

  /// Returns the lattice ray with minimum angular distance to the direction
  /// of `p` as seen from the sensor origin. Ties (within 1e-12 rad) resolve
  /// to the lower (channel, azimuth_index). Throws OutOfFovError when the
  /// point's elevation is outside the channel span by more than one channel
  /// spacing, and DegeneratePointError at the origin.
  RayId nearest_ray(const Vec3& p) const;

  /// Azimuth index closest to `azimuth_deg` on this lattice (wrap-aware for
  /// full-circle sensors, clamped otherwise).
  int nearest_azimuth_index(double azimuth_deg) const;

  /// Vertical field of view accepted by nearest_ray, in degrees.
  std::pair<double, double> elevation_fov_deg() const;

  std::int64_t ray_key(const RayId& id) const {
    return static_cast<std::int64_t>(id.channel) * azimuth_count_ +
           id.azimuth_index;
  }

 private:
  Vec3 origin_;
  std::vector<double> elevations_deg_;
  double azimuth_step_deg_;
  double azimuth_start_deg_;
  double azimuth_end_deg_;
  double max_range_m_;
  int azimuth_count_;
  bool full_circle_;
  double fov_tol_low_deg_;
  double fov_tol_high_deg_;
};

/// Angle between two unit vectors, in radians.
double angular_distance(const Vec3& a, const Vec3& b);

/// Loads a sensor preset from a JSON file with keys: channels,
/// elevations_deg, azimuth_step_deg, azimuth_span_deg, max_range_m
/// (optional origin_m). The azimuth span is centered on the +x axis.
/// Throws Error on malformed files or violated invariants.
SensorModel load_sensor_config(const std::string& path);

}  // namespace spoofbench
