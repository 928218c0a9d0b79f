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

#include "spoofbench/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "spoofbench/attack.hpp"
#include "spoofbench/kitti_io.hpp"
#include "spoofbench/rng.hpp"

namespace spoofbench {

namespace {

constexpr double kMeshIntensity = 0.5;
constexpr double kGroundIntensity = 0.3;
constexpr double kElevationMarginDeg = 3.0;
constexpr double kAzimuthMarginDeg = 1.0;

struct PreparedInstance {
  std::vector<Vec3> vertices;
  const std::vector<std::array<int, 3>>* triangles = nullptr;
  double az_lo = 0.0, az_hi = 0.0;
  bool az_wrapped = false;
  double el_lo = 0.0, el_hi = 0.0;

  bool covers(double az_deg, double el_deg) const {
    if (el_deg < el_lo || el_deg > el_hi) return false;
    const double az = az_wrapped && az_deg < 0.0 ? az_deg + 360.0 : az_deg;
    return az >= az_lo && az <= az_hi;
  }
};

PreparedInstance prepare_instance(const MeshInstance& inst,
                                  const Vec3& origin) {
  PreparedInstance out;
  out.triangles = &inst.mesh.triangles;
  out.vertices.reserve(inst.mesh.vertices.size());
  const double c = std::cos(inst.pose.yaw);
  const double s = std::sin(inst.pose.yaw);
  for (const Vec3& v : inst.mesh.vertices) {
    out.vertices.emplace_back(c * v.x() - s * v.y() + inst.pose.translation.x(),
                              s * v.x() + c * v.y() + inst.pose.translation.y(),
                              v.z() + inst.pose.translation.z());
  }

  double az_min = std::numeric_limits<double>::infinity();
  double az_max = -az_min;
  double el_min = az_min;
  double el_max = az_max;
  std::vector<double> azimuths;
  azimuths.reserve(out.vertices.size());
  for (const Vec3& v : out.vertices) {
    const Spherical sph = to_spherical(v, origin);
    el_min = std::min(el_min, sph.elevation_deg);
    el_max = std::max(el_max, sph.elevation_deg);
    azimuths.push_back(sph.azimuth_deg);
    az_min = std::min(az_min, sph.azimuth_deg);
    az_max = std::max(az_max, sph.azimuth_deg);
  }
  if (az_max - az_min > 180.0) {
    az_min = std::numeric_limits<double>::infinity();
    az_max = -az_min;
    for (double az : azimuths) {
      const double shifted = az < 0.0 ? az + 360.0 : az;
      az_min = std::min(az_min, shifted);
      az_max = std::max(az_max, shifted);
    }
    out.az_wrapped = true;
  }
  // The elevation hull of a triangle can dip below its vertices' range
  // (chords pass nearer the sensor than the endpoints), hence the margin.
  out.az_lo = az_min - kAzimuthMarginDeg;
  out.az_hi = az_max + kAzimuthMarginDeg;
  out.el_lo = el_min - kElevationMarginDeg;
  out.el_hi = el_max + kElevationMarginDeg;
  return out;
}

std::optional<double> nearest_mesh_hit(const PreparedInstance& inst,
                                       const Vec3& origin, const Vec3& dir) {
  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  for (const auto& tri : *inst.triangles) {
    const auto t = ray_triangle_intersect(origin, dir, inst.vertices[tri[0]],
                                          inst.vertices[tri[1]],
                                          inst.vertices[tri[2]]);
    if (t && *t < best) {
      best = *t;
      found = true;
    }
  }
  if (!found) return std::nullopt;
  return best;
}

}  // namespace

PointCloud RenderResult::points_from(HitSource source) const {
  PointCloud out;
  out.frame_id = cloud.frame_id;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    if (sources[i] == source) out.points.push_back(cloud.points[i]);
  }
  return out;
}

std::size_t RenderResult::count_from(HitSource source) const {
  std::size_t n = 0;
  for (const auto s : sources) n += (s == source);
  return n;
}

RenderResult render(const SensorModel& sensor, const Scene& scene) {
  RenderResult result;
  const Vec3 origin = sensor.origin();

  std::vector<PreparedInstance> instances;
  std::vector<HitSource> instance_source;
  instances.push_back(prepare_instance(scene.target, origin));
  instance_source.push_back(HitSource::kTarget);
  for (const auto& occ : scene.occluders) {
    instances.push_back(prepare_instance(occ, origin));
    instance_source.push_back(HitSource::kOccluder);
  }

  const bool ground = scene.ground_z.has_value();
  const double ground_z = ground ? *scene.ground_z : 0.0;

  const int channels = sensor.channel_count();
  const int az_count = sensor.azimuth_count();
  std::vector<double> cos_az(az_count), sin_az(az_count);
  for (int i = 0; i < az_count; ++i) {
    const double az = deg2rad(sensor.azimuth_of(i));
    cos_az[i] = std::cos(az);
    sin_az[i] = std::sin(az);
  }

  double el_union_lo = std::numeric_limits<double>::infinity();
  double el_union_hi = -el_union_lo;
  for (const auto& inst : instances) {
    el_union_lo = std::min(el_union_lo, inst.el_lo);
    el_union_hi = std::max(el_union_hi, inst.el_hi);
  }

  for (int ch = 0; ch < channels; ++ch) {
    const double el = sensor.elevation_of(ch);
    const double cos_el = std::cos(deg2rad(el));
    const double sin_el = std::sin(deg2rad(el));
    const bool ground_possible =
        ground && sin_el < 0.0 &&
        (ground_z - origin.z()) / sin_el <= sensor.max_range_m() &&
        ground_z < origin.z();
    const bool mesh_possible = el >= el_union_lo && el <= el_union_hi;
    if (!ground_possible && !mesh_possible) continue;

    for (int ai = 0; ai < az_count; ++ai) {
      const Vec3 dir(cos_el * cos_az[ai], cos_el * sin_az[ai], sin_el);
      double best = std::numeric_limits<double>::infinity();
      int best_instance = -1;
      if (mesh_possible) {
        const double az_deg = sensor.azimuth_of(ai);
        for (std::size_t k = 0; k < instances.size(); ++k) {
          if (!instances[k].covers(wrap_deg(az_deg), el)) continue;
          const auto t = nearest_mesh_hit(instances[k], origin, dir);
          if (t && *t < best) {
            best = *t;
            best_instance = static_cast<int>(k);
          }
        }
      }
      HitSource source = HitSource::kGround;
      if (ground_possible) {
        const double t = (ground_z - origin.z()) / sin_el;
        if (t > 0.0 && t < best) {
          best = t;
          best_instance = -2;
        }
      }
      if (best_instance == -1 && !std::isfinite(best)) continue;
      if (best > sensor.max_range_m()) continue;
      if (best_instance >= 0) source = instance_source[best_instance];

      result.cloud.points.emplace_back(
          origin + best * dir,
          source == HitSource::kGround ? kGroundIntensity : kMeshIntensity);
      result.rays.push_back(RayId{ch, ai});
      result.sources.push_back(source);
    }
  }
  return result;
}

std::vector<AttackTrace> render_trace_family(
    const SensorModel& sensor, const TriangleMesh& mesh,
    const std::vector<Pose>& postures,
    const std::vector<OcclusionPattern>& patterns) {
  std::vector<AttackTrace> family;
  for (const Pose& pose : postures) {
    for (const OcclusionPattern& pattern : patterns) {
      Scene scene;
      scene.target = MeshInstance{mesh, pose};
      const AzimuthBandMask* mask = nullptr;
      if (const auto* occ = std::get_if<MeshInstance>(&pattern)) {
        scene.occluders.push_back(*occ);
      } else if (const auto* band = std::get_if<AzimuthBandMask>(&pattern)) {
        mask = band;
      }
      const RenderResult rendered = render(sensor, scene);
      PointCloud target_points = rendered.points_from(HitSource::kTarget);
      if (mask && mask->width_deg > 0.0) {
        PointCloud kept;
        for (const Point& p : target_points.points) {
          const double az =
              wrap_deg(rad2deg(std::atan2(p.y - sensor.origin().y(),
                                          p.x - sensor.origin().x())));
          const double delta = std::abs(wrap_deg(az - mask->center_deg));
          if (delta > mask->width_deg / 2.0) kept.points.push_back(p);
        }
        target_points = std::move(kept);
      }

      AttackTrace trace;
      trace.points = std::move(target_points);
      trace.meta.kind = TraceKind::kRendered;
      trace.meta.point_count = static_cast<int>(trace.points.size());
      trace.meta.azimuth_extent_deg = azimuth_extent_deg(trace.points);
      trace.meta.source_range_m =
          std::hypot(pose.translation.x() - sensor.origin().x(),
                     pose.translation.y() - sensor.origin().y());
      family.push_back(std::move(trace));
    }
  }
  return family;
}

std::vector<AttackTrace> build_rendered_dataset(
    const SensorModel& sensor, const TriangleMesh& mesh,
    const AttackCapability& capability, const TraceDatasetParams& params,
    std::uint64_t seed) {
  std::vector<double> ranges = params.ranges_m;
  if (ranges.empty()) {
    ranges = {9,  10.5, 12, 13, 14, 15, 16, 17, 18.5, 20, 21.5,
              23, 25,   27, 29, 32, 35, 38, 42,  46,  50, 55};
  }
  std::vector<double> yaws = params.yaws_deg;
  if (yaws.empty()) yaws = {0.0, 30.0, 60.0, 90.0};
  std::vector<double> fractions = params.mask_fractions;
  if (fractions.empty()) {
    fractions = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  }

  // Postures sit on the ground plane straight ahead; sparsity comes from
  // range, visible aspect from yaw, and partial visibility from edge-anchored
  // azimuth masks applied to the rendered points.
  const double ground_z = sensor.origin().z() - 1.73;

  std::vector<std::vector<AttackTrace>> buckets(params.group_count);
  for (double range : ranges) {
    for (double yaw : yaws) {
      Pose pose{Vec3(range, 0.0, ground_z), deg2rad(yaw)};
      const auto base =
          render_trace_family(sensor, mesh, {pose}, {OcclusionPattern{}});
      if (base.empty() || base.front().empty()) continue;
      const AttackTrace& full = base.front();

      std::vector<double> azimuths;
      azimuths.reserve(full.points.size());
      for (const Point& p : full.points.points) {
        azimuths.push_back(wrap_deg(rad2deg(std::atan2(p.y, p.x))));
      }
      const double az_lo = *std::min_element(azimuths.begin(), azimuths.end());
      const double az_hi = *std::max_element(azimuths.begin(), azimuths.end());
      const double span = az_hi - az_lo;

      for (double fraction : fractions) {
        AttackTrace masked;
        masked.meta = full.meta;
        if (fraction <= 0.0) {
          masked.points = full.points;
        } else {
          const double cut = az_lo + fraction * span;
          for (std::size_t i = 0; i < full.points.size(); ++i) {
            if (azimuths[i] > cut) masked.points.points.push_back(full.points.points[i]);
          }
        }
        if (masked.points.empty()) continue;
        AttackTrace pruned = prune_to_capability(masked, capability);
        pruned.meta.kind = TraceKind::kRendered;
        pruned.meta.source_range_m = full.meta.source_range_m;
        const int n = static_cast<int>(pruned.size());
        if (n == 0) continue;
        const int group = (n - 1) / params.group_size;
        if (group >= params.group_count) continue;
        buckets[group].push_back(std::move(pruned));
      }
    }
  }

  std::vector<AttackTrace> dataset;
  for (int g = 0; g < params.group_count; ++g) {
    auto& bucket = buckets[g];
    auto gen = substream(seed, static_cast<std::uint64_t>(g));
    // Fisher-Yates; then take the first per_group survivors.
    for (std::size_t i = bucket.size(); i > 1; --i) {
      std::swap(bucket[i - 1], bucket[uniform_index(gen, i)]);
    }
    const std::size_t take =
        std::min<std::size_t>(bucket.size(), params.per_group);
    for (std::size_t i = 0; i < take; ++i) {
      dataset.push_back(std::move(bucket[i]));
    }
  }
  return dataset;
}

Box3D mesh_bounding_box(const TriangleMesh& mesh, const Pose& pose) {
  if (mesh.vertices.empty()) throw Error("mesh_bounding_box: empty mesh");
  Vec3 lo = mesh.vertices.front();
  Vec3 hi = lo;
  for (const Vec3& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const Vec3 local_center = (lo + hi) / 2.0;
  const double c = std::cos(pose.yaw);
  const double s = std::sin(pose.yaw);
  Box3D box;
  box.center = Vec3(c * local_center.x() - s * local_center.y(),
                    s * local_center.x() + c * local_center.y(),
                    local_center.z()) +
               pose.translation;
  box.dims = hi - lo;
  box.yaw = wrap_rad(pose.yaw);
  return box;
}

namespace {

std::string dirname_of(const std::string& path) {
  const auto pos = path.find_last_of('/');
  return pos == std::string::npos ? std::string() : path.substr(0, pos + 1);
}

MeshInstance load_instance(const nlohmann::json& j, const std::string& base) {
  MeshInstance inst;
  std::string mesh_path = j.at("mesh").get<std::string>();
  if (!mesh_path.empty() && mesh_path[0] != '/') mesh_path = base + mesh_path;
  inst.mesh = read_obj_file(mesh_path);
  const auto t = j.at("translation").get<std::vector<double>>();
  if (t.size() != 3) throw Error("scene: translation must have 3 entries");
  inst.pose.translation = Vec3(t[0], t[1], t[2]);
  inst.pose.yaw = deg2rad(j.value("yaw_deg", 0.0));
  return inst;
}

}  // namespace

Scene load_scene_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error("load_scene_config: malformed JSON in " + path + ": " +
                e.what());
  }
  try {
    Scene scene;
    const std::string base = dirname_of(path);
    scene.target = load_instance(j.at("target"), base);
    if (j.contains("occluders")) {
      for (const auto& occ : j.at("occluders")) {
        scene.occluders.push_back(load_instance(occ, base));
      }
    }
    if (j.contains("ground_z") && !j.at("ground_z").is_null()) {
      scene.ground_z = j.at("ground_z").get<double>();
    }
    return scene;
  } catch (const nlohmann::json::exception& e) {
    throw Error("load_scene_config: missing or mistyped key in " + path +
                ": " + e.what());
  }
}

}  // namespace spoofbench
