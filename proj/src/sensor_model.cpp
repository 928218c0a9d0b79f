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

#include "spoofbench/sensor_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

namespace spoofbench {

namespace {

// Distances closer than this are treated as exact ties when searching the
// lattice, so that midpoint cases resolve by index order instead of by
// floating-point noise.
constexpr double kTieTolRad = 1e-12;

Vec3 direction_of(double azimuth_deg, double elevation_deg) {
  const double az = deg2rad(azimuth_deg);
  const double el = deg2rad(elevation_deg);
  const double c = std::cos(el);
  return {c * std::cos(az), c * std::sin(az), std::sin(el)};
}

}  // namespace

Spherical to_spherical(const Vec3& p, const Vec3& origin) {
  const Vec3 d = p - origin;
  const double range = d.norm();
  if (range <= 0.0) {
    throw DegeneratePointError("to_spherical: point coincides with origin");
  }
  Spherical s;
  s.range_m = range;
  s.azimuth_deg = wrap_deg(rad2deg(std::atan2(d.y(), d.x())));
  s.elevation_deg = rad2deg(std::atan2(d.z(), std::hypot(d.x(), d.y())));
  return s;
}

Vec3 from_spherical(double range_m, double azimuth_deg, double elevation_deg,
                    const Vec3& origin) {
  if (!(range_m > 0.0)) {
    throw Error("from_spherical: range must be positive");
  }
  return origin + range_m * direction_of(azimuth_deg, elevation_deg);
}

double angular_distance(const Vec3& a, const Vec3& b) {
  // atan2 form stays accurate for tiny angles where acos(dot) quantizes.
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

SensorModel::SensorModel(Vec3 origin, std::vector<double> elevations_deg,
                         double azimuth_step_deg, double azimuth_start_deg,
                         double azimuth_end_deg, double max_range_m)
    : origin_(std::move(origin)),
      elevations_deg_(std::move(elevations_deg)),
      azimuth_step_deg_(azimuth_step_deg),
      azimuth_start_deg_(azimuth_start_deg),
      azimuth_end_deg_(azimuth_end_deg),
      max_range_m_(max_range_m) {
  if (elevations_deg_.empty()) {
    throw Error("SensorModel: at least one channel required");
  }
  for (std::size_t i = 1; i < elevations_deg_.size(); ++i) {
    if (!(elevations_deg_[i] > elevations_deg_[i - 1])) {
      throw Error("SensorModel: elevations must be strictly increasing");
    }
  }
  if (!(azimuth_step_deg_ > 0.0)) {
    throw Error("SensorModel: azimuth step must be positive");
  }
  if (!(max_range_m_ > 0.0)) {
    throw Error("SensorModel: max range must be positive");
  }
  const double span = azimuth_end_deg_ - azimuth_start_deg_;
  if (!(span > 0.0) || span > 360.0 + 1e-9) {
    throw Error("SensorModel: azimuth span must be in (0, 360]");
  }
  // The 1e-9 slack keeps e.g. 360/0.18 from rounding up to 2001 steps.
  azimuth_count_ = static_cast<int>(std::ceil(span / azimuth_step_deg_ - 1e-9));
  full_circle_ = std::abs(span - 360.0) < 1e-9;

  const std::size_t n = elevations_deg_.size();
  if (n >= 2) {
    fov_tol_low_deg_ = elevations_deg_[1] - elevations_deg_[0];
    fov_tol_high_deg_ = elevations_deg_[n - 1] - elevations_deg_[n - 2];
  } else {
    fov_tol_low_deg_ = fov_tol_high_deg_ = 1.0;
  }
}

Vec3 SensorModel::ray_direction(const RayId& id) const {
  if (!valid(id)) {
    throw Error("ray_direction: ray indices out of bounds");
  }
  return direction_of(azimuth_of(id.azimuth_index),
                      elevations_deg_[id.channel]);
}

std::pair<double, double> SensorModel::elevation_fov_deg() const {
  return {elevations_deg_.front() - fov_tol_low_deg_,
          elevations_deg_.back() + fov_tol_high_deg_};
}

int SensorModel::nearest_azimuth_index(double azimuth_deg) const {
  double offset = azimuth_deg - azimuth_start_deg_;
  if (full_circle_) {
    offset = offset - 360.0 * std::floor(offset / 360.0);
  }
  int k = static_cast<int>(std::lround(offset / azimuth_step_deg_));
  if (full_circle_) {
    k %= azimuth_count_;
    if (k < 0) k += azimuth_count_;
  } else {
    k = std::clamp(k, 0, azimuth_count_ - 1);
  }
  return k;
}

RayId SensorModel::nearest_ray(const Vec3& p) const {
  const Spherical sph = to_spherical(p, origin_);
  const auto [fov_lo, fov_hi] = elevation_fov_deg();
  if (sph.elevation_deg < fov_lo || sph.elevation_deg > fov_hi) {
    throw OutOfFovError("nearest_ray: elevation outside vertical FOV");
  }

  const Vec3 dir = (p - origin_).normalized();
  double best = std::numeric_limits<double>::infinity();
  RayId best_id{0, 0};
  bool found = false;

  for (int ch = 0; ch < channel_count(); ++ch) {
    // For a fixed elevation ring the angular distance is monotone in the
    // wrapped azimuth difference, so only the two bracketing steps matter.
    double offset = sph.azimuth_deg - azimuth_start_deg_;
    if (full_circle_) {
      offset = offset - 360.0 * std::floor(offset / 360.0);
    }
    const double k = offset / azimuth_step_deg_;
    int lo = static_cast<int>(std::floor(k));
    int cands[2] = {lo, lo + 1};
    int resolved[2];
    int n_cands = 0;
    for (int raw : cands) {
      int idx = raw;
      if (full_circle_) {
        idx %= azimuth_count_;
        if (idx < 0) idx += azimuth_count_;
      } else {
        idx = std::clamp(idx, 0, azimuth_count_ - 1);
      }
      bool dup = false;
      for (int j = 0; j < n_cands; ++j) dup |= (resolved[j] == idx);
      if (!dup) resolved[n_cands++] = idx;
    }
    std::sort(resolved, resolved + n_cands);

    for (int j = 0; j < n_cands; ++j) {
      const RayId id{ch, resolved[j]};
      const double d = angular_distance(dir, ray_direction(id));
      if (!found || d < best - kTieTolRad) {
        best = d;
        best_id = id;
        found = true;
      }
    }
  }
  return best_id;
}

SensorModel load_sensor_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("load_sensor_config: cannot open " + path);
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("load_sensor_config: malformed JSON in " + path + ": " +
                e.what());
  }
  try {
    const auto elevations = j.at("elevations_deg").get<std::vector<double>>();
    const int channels = j.at("channels").get<int>();
    if (channels != static_cast<int>(elevations.size())) {
      throw Error("load_sensor_config: channels != |elevations_deg| in " +
                  path);
    }
    const double step = j.at("azimuth_step_deg").get<double>();
    const double span = j.at("azimuth_span_deg").get<double>();
    const double max_range = j.at("max_range_m").get<double>();
    Vec3 origin = Vec3::Zero();
    if (j.contains("origin_m")) {
      const auto o = j.at("origin_m").get<std::vector<double>>();
      if (o.size() != 3) {
        throw Error("load_sensor_config: origin_m must have 3 entries");
      }
      origin = Vec3(o[0], o[1], o[2]);
    }
    return SensorModel(origin, elevations, step, -span / 2.0, span / 2.0,
                       max_range);
  } catch (const nlohmann::json::exception& e) {
    throw Error("load_sensor_config: missing or mistyped key in " + path +
                ": " + e.what());
  }
}

std::string to_string(TraceKind kind) {
  switch (kind) {
    case TraceKind::kOccluded:
      return "occluded";
    case TraceKind::kDistant:
      return "distant";
    case TraceKind::kRendered:
      return "rendered";
    case TraceKind::kSensorBaseline:
      return "sensor-baseline";
  }
  return "unknown";
}

TraceKind trace_kind_from_string(const std::string& s) {
  if (s == "occluded") return TraceKind::kOccluded;
  if (s == "distant") return TraceKind::kDistant;
  if (s == "rendered") return TraceKind::kRendered;
  if (s == "sensor-baseline") return TraceKind::kSensorBaseline;
  throw Error("unknown trace kind: " + s);
}

}  // namespace spoofbench
