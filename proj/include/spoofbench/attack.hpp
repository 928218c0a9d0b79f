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

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "spoofbench/geometry.hpp"
#include "spoofbench/kitti_io.hpp"
#include "spoofbench/sensor_model.hpp"
#include "spoofbench/types.hpp"

namespace spoofbench {

class EmptyTraceError : public Error {
 public:
  using Error::Error;
};

class DegenerateTraceError : public Error {
 public:
  using Error::Error;
};

class PlacementError : public Error {
 public:
  using Error::Error;
};

class CapabilityViolationError : public Error {
 public:
  using Error::Error;
};

/// Circular azimuth span of a point set in degrees (0 for fewer than two
/// points). Robust across the +-180 branch cut.
double azimuth_extent_deg(const PointCloud& cloud);

/// True iff the trace fits the capability envelope: point count and azimuth
/// extent within bounds.
bool satisfies_capability(const AttackTrace& trace,
                          const AttackCapability& capability);

/// All cloud points inside `box` dilated by `margin` on every face, packaged
/// as a trace of the given kind. Throws EmptyTraceError when nothing falls
/// inside.
AttackTrace extract_vehicle_points(const PointCloud& cloud, const Box3D& box,
                                   double margin, TraceKind kind);

enum class CandidateKind { kOccluded, kDistant };

/// Vehicle boxes usable as trace sources: occluded selects labels with
/// occlusion flag 1 or 2, distant selects BEV ranges beyond 30 m. DontCare
/// rows and non-Car types never qualify.
std::vector<std::pair<std::size_t, Box3D>> select_candidates(
    const std::vector<LabelRecord>& labels, const Calibration& calib,
    CandidateKind kind);

/// Rigid motion of the whole trace: rotate by theta about +z, then translate
/// by tau along the rotated centroid direction (the centroid azimuth alpha
/// makes the shift radial). Intensities are untouched. Throws
/// DegenerateTraceError when the centroid sits on the z axis.
AttackTrace translate_trace(const AttackTrace& trace, double theta_rad,
                            double tau_m);

/// Solves the (theta, tau) of translate_trace that lands the trace centroid
/// at `azimuth_deg` and BEV range `range_m` (defaults to the current range
/// clamped into the capability band). Throws PlacementError for requests
/// outside the band.
AttackTrace place_front_near(const AttackTrace& trace,
                             const AttackCapability& capability,
                             double azimuth_deg,
                             std::optional<double> range_m = std::nullopt);

/// Projects every point onto its nearest lattice ray, preserving range.
/// Points outside the vertical FOV are dropped; when several points land on
/// one ray only the nearest survives. Throws Error if no point is in FOV.
AttackTrace calibrate_to_rays(const SensorModel& sensor,
                              const AttackTrace& trace);

/// Drops points outside the azimuth window centered on the median azimuth,
/// then deterministically subsamples (stride over azimuth-sorted order) down
/// to max_points. Idempotent; the result always satisfies the capability.
AttackTrace prune_to_capability(const AttackTrace& trace,
                                const AttackCapability& capability);

// Result of merging a trace into a pristine cloud. Enough is recorded to
// restore the pristine cloud exactly: removed returns keep their original
// positions in the point order.
struct InjectionReport {
  PointCloud spoofed_cloud;
  int replaced_ray_count = 0;
  int injected_point_count = 0;
  Box3D target_box;
  std::vector<std::pair<std::size_t, Point>> replaced_returns;
};

/// Merges a calibrated, pruned trace into the cloud: on every spoofed ray
/// the pristine return is removed and the spoofed point inserted (the
/// spoofer's pulse owns that firing cycle). The target box gets default
/// vehicle dims at the trace footprint, yaw facing the sensor. Throws
/// CapabilityViolationError when the trace exceeds the capability.
InjectionReport inject(const PointCloud& cloud, const SensorModel& sensor,
                       const AttackTrace& trace,
                       const AttackCapability& capability);

/// Reverses inject(): removes the injected points and restores the replaced
/// returns at their original positions.
PointCloud restore_pristine(const InjectionReport& report);

/// Scales each point about the origin by its own s ~ U(1-eps, 1+eps) drawn
/// from the seeded generator. Returns the perturbed trace and the mean
/// per-point displacement norm.
std::pair<AttackTrace, double> perturb_scale(const AttackTrace& trace,
                                             double epsilon,
                                             std::uint64_t seed);

/// The default vehicle box used for spoof-success checks: typical car dims
/// (3.9 x 1.6 x 1.56 m), bottom on the ground plane, yaw facing the sensor.
Box3D default_target_box(const Vec3& bev_centroid, double ground_z);

inline constexpr double kDefaultCarLength = 3.9;
inline constexpr double kDefaultCarWidth = 1.6;
inline constexpr double kDefaultCarHeight = 1.56;
inline constexpr double kDefaultGroundZ = -1.73;

}  // namespace spoofbench
