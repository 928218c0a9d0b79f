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

#include "spoofbench/attack.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "spoofbench/rng.hpp"

namespace spoofbench {

namespace {

Vec3 centroid_of(const PointCloud& cloud) {
  Vec3 sum = Vec3::Zero();
  for (const Point& p : cloud.points) sum += p.position();
  return sum / static_cast<double>(cloud.size());
}

std::vector<double> azimuths_of(const PointCloud& cloud) {
  std::vector<double> out;
  out.reserve(cloud.size());
  for (const Point& p : cloud.points) {
    out.push_back(wrap_deg(rad2deg(std::atan2(p.y, p.x))));
  }
  return out;
}

}  // namespace

double azimuth_extent_deg(const PointCloud& cloud) {
  if (cloud.size() < 2) return 0.0;
  std::vector<double> az = azimuths_of(cloud);
  std::sort(az.begin(), az.end());
  // Largest gap between consecutive azimuths on the circle; the extent is
  // everything else. This stays correct across the +-180 cut.
  double max_gap = az.front() + 360.0 - az.back();
  for (std::size_t i = 1; i < az.size(); ++i) {
    max_gap = std::max(max_gap, az[i] - az[i - 1]);
  }
  return 360.0 - max_gap;
}

bool satisfies_capability(const AttackTrace& trace,
                          const AttackCapability& capability) {
  if (static_cast<int>(trace.size()) > capability.max_points) return false;
  return azimuth_extent_deg(trace.points) <=
         capability.azimuth_window_deg + 1e-9;
}

AttackTrace extract_vehicle_points(const PointCloud& cloud, const Box3D& box,
                                   double margin, TraceKind kind) {
  Box3D dilated = box;
  dilated.dims += Vec3(2.0 * margin, 2.0 * margin, 2.0 * margin);
  AttackTrace trace;
  for (const Point& p : cloud.points) {
    if (point_in_box(p.position(), dilated)) trace.points.points.push_back(p);
  }
  if (trace.empty()) {
    throw EmptyTraceError("extract_vehicle_points: no points inside box");
  }
  trace.meta.kind = kind;
  trace.meta.point_count = static_cast<int>(trace.size());
  trace.meta.azimuth_extent_deg = azimuth_extent_deg(trace.points);
  trace.meta.source_range_m = box.bev_range();
  return trace;
}

std::vector<std::pair<std::size_t, Box3D>> select_candidates(
    const std::vector<LabelRecord>& labels, const Calibration& calib,
    CandidateKind kind) {
  std::vector<std::pair<std::size_t, Box3D>> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const LabelRecord& rec = labels[i];
    if (rec.dont_care || rec.object_type != "Car") continue;
    const Box3D box = label_to_lidar_box(rec, calib);
    const bool selected = kind == CandidateKind::kOccluded
                              ? (rec.occluded == 1 || rec.occluded == 2)
                              : box.bev_range() > 30.0;
    if (selected) out.emplace_back(i, box);
  }
  return out;
}

AttackTrace translate_trace(const AttackTrace& trace, double theta_rad,
                            double tau_m) {
  if (trace.empty()) throw EmptyTraceError("translate_trace: empty trace");
  const Vec3 centroid = centroid_of(trace.points);
  if (std::hypot(centroid.x(), centroid.y()) <= 0.0) {
    throw DegenerateTraceError(
        "translate_trace: centroid on the z axis, alpha undefined");
  }
  const double alpha = std::atan2(centroid.y(), centroid.x());
  const double c = std::cos(theta_rad);
  const double s = std::sin(theta_rad);
  const double shift_x = tau_m * std::cos(theta_rad + alpha);
  const double shift_y = tau_m * std::sin(theta_rad + alpha);

  AttackTrace out;
  out.points.frame_id = trace.points.frame_id;
  out.points.points.reserve(trace.size());
  for (const Point& p : trace.points.points) {
    out.points.points.emplace_back(c * p.x - s * p.y + shift_x,
                                   s * p.x + c * p.y + shift_y, p.z,
                                   p.intensity);
  }
  out.meta = trace.meta;
  out.meta.point_count = static_cast<int>(out.size());
  out.meta.azimuth_extent_deg = azimuth_extent_deg(out.points);
  return out;
}

AttackTrace place_front_near(const AttackTrace& trace,
                             const AttackCapability& capability,
                             double azimuth_deg,
                             std::optional<double> range_m) {
  if (trace.empty()) throw EmptyTraceError("place_front_near: empty trace");
  const Vec3 centroid = centroid_of(trace.points);
  const double bev = std::hypot(centroid.x(), centroid.y());
  if (bev <= 0.0) {
    throw DegenerateTraceError("place_front_near: centroid on the z axis");
  }
  const double target_range =
      range_m.value_or(std::clamp(bev, capability.min_range_m,
                                  capability.max_range_m));
  if (target_range < capability.min_range_m - 1e-9 ||
      target_range > capability.max_range_m + 1e-9) {
    throw PlacementError("place_front_near: requested range outside band");
  }
  const double alpha = std::atan2(centroid.y(), centroid.x());
  // The translation of translate_trace is radial along theta+alpha, so the
  // placed centroid sits at azimuth theta+alpha with BEV radius bev+tau.
  const double theta = deg2rad(azimuth_deg) - alpha;
  const double tau = target_range - bev;
  return translate_trace(trace, theta, tau);
}

AttackTrace calibrate_to_rays(const SensorModel& sensor,
                              const AttackTrace& trace) {
  if (trace.empty()) throw EmptyTraceError("calibrate_to_rays: empty trace");
  struct Candidate {
    Point point;
    double range;
  };
  std::unordered_map<std::int64_t, Candidate> by_ray;
  for (const Point& p : trace.points.points) {
    RayId id;
    try {
      id = sensor.nearest_ray(p.position());
    } catch (const OutOfFovError&) {
      continue;
    }
    const double range = (p.position() - sensor.origin()).norm();
    const Vec3 snapped = sensor.origin() + range * sensor.ray_direction(id);
    const Candidate cand{Point(snapped, p.intensity), range};
    auto [it, inserted] = by_ray.emplace(sensor.ray_key(id), cand);
    if (!inserted && cand.range < it->second.range) it->second = cand;
  }
  if (by_ray.empty()) {
    throw OutOfFovError("calibrate_to_rays: no trace point inside the FOV");
  }
  std::vector<std::pair<std::int64_t, Candidate>> ordered(by_ray.begin(),
                                                          by_ray.end());
  std::sort(ordered.begin(), ordered.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  AttackTrace out;
  out.points.frame_id = trace.points.frame_id;
  for (const auto& [key, cand] : ordered) {
    out.points.points.push_back(cand.point);
  }
  out.meta = trace.meta;
  out.meta.point_count = static_cast<int>(out.size());
  out.meta.azimuth_extent_deg = azimuth_extent_deg(out.points);
  return out;
}

AttackTrace prune_to_capability(const AttackTrace& trace,
                                const AttackCapability& capability) {
  AttackTrace out;
  out.points.frame_id = trace.points.frame_id;
  out.meta = trace.meta;
  if (trace.empty()) {
    out.meta.point_count = 0;
    out.meta.azimuth_extent_deg = 0.0;
    return out;
  }

  const std::vector<double> az = azimuths_of(trace.points);

  // Sort by azimuth measured from the start of the occupied arc, so traces
  // straddling the +-180 cut order correctly.
  double arc_start = az.front();
  {
    std::vector<double> sorted_az = az;
    std::sort(sorted_az.begin(), sorted_az.end());
    double max_gap = sorted_az.front() + 360.0 - sorted_az.back();
    arc_start = sorted_az.front();
    for (std::size_t i = 1; i < sorted_az.size(); ++i) {
      const double gap = sorted_az[i] - sorted_az[i - 1];
      if (gap > max_gap) {
        max_gap = gap;
        arc_start = sorted_az[i];
      }
    }
  }
  std::vector<double> rel(az.size());
  for (std::size_t i = 0; i < az.size(); ++i) {
    double r = az[i] - arc_start;
    r -= 360.0 * std::floor(r / 360.0);
    rel[i] = r;
  }

  std::vector<std::size_t> order(trace.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&rel](std::size_t a, std::size_t b) {
    return rel[a] != rel[b] ? rel[a] < rel[b] : a < b;
  });

  std::vector<std::size_t> kept;
  kept.reserve(order.size());
  if (azimuth_extent_deg(trace.points) <=
      capability.azimuth_window_deg + 1e-12) {
    // Already inside a valid window; windowing again around the median
    // could shave edge points, which would break idempotence.
    kept.assign(order.begin(), order.end());
  } else {
    const double median_rel = rel[order[order.size() / 2]];
    const double half_window = capability.azimuth_window_deg / 2.0;
    for (const std::size_t i : order) {
      if (std::abs(rel[i] - median_rel) <= half_window + 1e-12) {
        kept.push_back(i);
      }
    }
  }

  const std::size_t limit = static_cast<std::size_t>(capability.max_points);
  if (kept.size() > limit) {
    // Even stride over the azimuth-sorted order: seed-free and idempotent.
    std::vector<std::size_t> sampled;
    sampled.reserve(limit);
    for (std::size_t k = 0; k < limit; ++k) {
      sampled.push_back(kept[(k * kept.size()) / limit]);
    }
    kept = std::move(sampled);
  }

  for (const std::size_t i : kept) {
    out.points.points.push_back(trace.points.points[i]);
  }
  out.meta.point_count = static_cast<int>(out.size());
  out.meta.azimuth_extent_deg = azimuth_extent_deg(out.points);
  return out;
}

Box3D default_target_box(const Vec3& bev_centroid, double ground_z) {
  Box3D box;
  box.center = Vec3(bev_centroid.x(), bev_centroid.y(),
                    ground_z + kDefaultCarHeight / 2.0);
  box.dims = Vec3(kDefaultCarLength, kDefaultCarWidth, kDefaultCarHeight);
  box.yaw = wrap_rad(std::atan2(bev_centroid.y(), bev_centroid.x()));
  return box;
}

InjectionReport inject(const PointCloud& cloud, const SensorModel& sensor,
                       const AttackTrace& trace,
                       const AttackCapability& capability) {
  if (!satisfies_capability(trace, capability)) {
    throw CapabilityViolationError(
        "inject: trace violates the attack capability");
  }

  std::unordered_map<std::int64_t, int> spoofed_rays;
  double trace_az_lo = 360.0, trace_az_hi = -360.0;
  double trace_el_lo = 90.0, trace_el_hi = -90.0;
  bool wrap = false;
  {
    const double extent = azimuth_extent_deg(trace.points);
    std::vector<double> az = azimuths_of(trace.points);
    std::sort(az.begin(), az.end());
    wrap = !az.empty() && az.back() - az.front() > extent + 1e-9;
    for (const Point& p : trace.points.points) {
      const Spherical sph = to_spherical(p.position(), sensor.origin());
      double a = sph.azimuth_deg;
      if (wrap && a < 0.0) a += 360.0;
      trace_az_lo = std::min(trace_az_lo, a);
      trace_az_hi = std::max(trace_az_hi, a);
      trace_el_lo = std::min(trace_el_lo, sph.elevation_deg);
      trace_el_hi = std::max(trace_el_hi, sph.elevation_deg);
    }
    const double az_margin = 2.0 * sensor.azimuth_step_deg() + 0.1;
    double el_margin = 1.0;
    for (int i = 1; i < sensor.channel_count(); ++i) {
      el_margin = std::max(el_margin, sensor.elevations_deg()[i] -
                                          sensor.elevations_deg()[i - 1]);
    }
    trace_az_lo -= az_margin;
    trace_az_hi += az_margin;
    trace_el_lo -= el_margin;
    trace_el_hi += el_margin;
  }
  for (const Point& p : trace.points.points) {
    const RayId id = sensor.nearest_ray(p.position());
    ++spoofed_rays[sensor.ray_key(id)];
  }

  InjectionReport report;
  report.spoofed_cloud.frame_id = cloud.frame_id;
  report.injected_point_count = static_cast<int>(trace.size());

  // A pristine return competes for a spoofed ray only when it falls in the
  // trace's angular window; everything else passes through untouched.
  std::vector<std::int64_t> replaced_keys;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Point& p = cloud.points[i];
    bool replace = false;
    const Vec3 rel = p.position() - sensor.origin();
    const double bev = std::hypot(rel.x(), rel.y());
    if (bev > 0.0 || rel.z() != 0.0) {
      double a = wrap_deg(rad2deg(std::atan2(rel.y(), rel.x())));
      if (wrap && a < 0.0) a += 360.0;
      const double el = rad2deg(std::atan2(rel.z(), bev));
      if (a >= trace_az_lo && a <= trace_az_hi && el >= trace_el_lo &&
          el <= trace_el_hi) {
        try {
          const RayId id = sensor.nearest_ray(p.position());
          const auto it = spoofed_rays.find(sensor.ray_key(id));
          if (it != spoofed_rays.end()) {
            replace = true;
            replaced_keys.push_back(it->first);
          }
        } catch (const Error&) {
          replace = false;
        }
      }
    }
    if (replace) {
      report.replaced_returns.emplace_back(i, p);
    } else {
      report.spoofed_cloud.points.push_back(p);
    }
  }
  std::sort(replaced_keys.begin(), replaced_keys.end());
  replaced_keys.erase(std::unique(replaced_keys.begin(), replaced_keys.end()),
                      replaced_keys.end());
  report.replaced_ray_count = static_cast<int>(replaced_keys.size());

  for (const Point& p : trace.points.points) {
    report.spoofed_cloud.points.push_back(p);
  }

  Vec3 centroid = centroid_of(trace.points);
  report.target_box = default_target_box(centroid, kDefaultGroundZ);
  return report;
}

PointCloud restore_pristine(const InjectionReport& report) {
  PointCloud pristine;
  pristine.frame_id = report.spoofed_cloud.frame_id;
  const std::size_t kept =
      report.spoofed_cloud.size() - report.injected_point_count;
  std::size_t next_kept = 0;
  std::size_t next_replaced = 0;
  const std::size_t total = kept + report.replaced_returns.size();
  for (std::size_t i = 0; i < total; ++i) {
    if (next_replaced < report.replaced_returns.size() &&
        report.replaced_returns[next_replaced].first == i) {
      pristine.points.push_back(report.replaced_returns[next_replaced].second);
      ++next_replaced;
    } else {
      pristine.points.push_back(report.spoofed_cloud.points[next_kept]);
      ++next_kept;
    }
  }
  return pristine;
}

std::pair<AttackTrace, double> perturb_scale(const AttackTrace& trace,
                                             double epsilon,
                                             std::uint64_t seed) {
  if (epsilon < 0.0 || epsilon >= 1.0) {
    throw Error("perturb_scale: epsilon must be in [0, 1)");
  }
  auto gen = substream(seed, 0);
  AttackTrace out;
  out.points.frame_id = trace.points.frame_id;
  out.points.points.reserve(trace.size());
  double total_l2 = 0.0;
  for (const Point& p : trace.points.points) {
    const double s = uniform_in(gen, 1.0 - epsilon, 1.0 + epsilon);
    const Vec3 scaled = s * p.position();
    total_l2 += (scaled - p.position()).norm();
    out.points.points.emplace_back(scaled, p.intensity);
  }
  out.meta = trace.meta;
  out.meta.point_count = static_cast<int>(out.size());
  out.meta.azimuth_extent_deg = azimuth_extent_deg(out.points);
  const double mean_l2 = trace.empty() ? 0.0 : total_l2 / trace.size();
  return {std::move(out), mean_l2};
}

}  // namespace spoofbench
