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

#include "spoofbench/benchmark.hpp"

#include <cmath>

#include "spoofbench/attack.hpp"
#include "spoofbench/rng.hpp"

namespace spoofbench {

PointCloud render_ground_cloud(const SensorModel& sensor, double ground_z) {
  PointCloud cloud;
  const Vec3 origin = sensor.origin();
  if (ground_z >= origin.z()) return cloud;
  for (int ch = 0; ch < sensor.channel_count(); ++ch) {
    const double el = deg2rad(sensor.elevation_of(ch));
    const double sin_el = std::sin(el);
    if (sin_el >= 0.0) continue;
    const double t = (ground_z - origin.z()) / sin_el;
    if (t > sensor.max_range_m()) continue;
    const double cos_el = std::cos(el);
    for (int az = 0; az < sensor.azimuth_count(); ++az) {
      const double a = deg2rad(sensor.azimuth_of(az));
      cloud.points.emplace_back(
          Vec3(origin.x() + t * cos_el * std::cos(a),
               origin.y() + t * cos_el * std::sin(a), ground_z),
          0.3);
    }
  }
  return cloud;
}

Box3D perturb_box_to_iou(const Box3D& box, double min_iou, BoxErrorModel model,
                         std::mt19937_64& gen) {
  // Archetypes keep the error tails populated: a share of spoofed fits sink
  // toward the ground (the classic bad box on a floating cluster), a share
  // of valid fits slide bodily in the plane; the rest jitter mildly.
  const double archetype = uniform01(gen);
  const double target_lo = uniform01(gen) < 0.5 ? min_iou : (min_iou + 1.0) / 2.0;
  double magnitude = 1.0;
  for (int attempt = 0; attempt < 64; ++attempt) {
    const double c = std::cos(box.yaw);
    const double s = std::sin(box.yaw);
    Box3D jittered = box;
    double along, across, dz, dyaw;
    Vec3 dim_scale = Vec3::Ones();
    if (model == BoxErrorModel::kSpoofedCluster && archetype < 0.35) {
      // Sunk fit: nearly the whole error budget goes into z.
      along = magnitude * uniform_in(gen, -0.10, 0.10);
      across = magnitude * uniform_in(gen, -0.06, 0.06);
      dz = -magnitude * uniform_in(gen, 0.22, 0.27);
      dyaw = magnitude * uniform_in(gen, -0.03, 0.03);
      dim_scale.z() = 1.0 + magnitude * uniform_in(gen, 0.0, 0.06);
    } else if (model == BoxErrorModel::kValidSurface && archetype < 0.35) {
      // Loose planar fit: the box slides backward/sideways off the surface.
      along = magnitude * uniform_in(gen, 0.42, 0.66);
      across = magnitude * uniform_in(gen, -0.34, 0.34);
      dz = 0.0;
      dyaw = magnitude * uniform_in(gen, -0.08, 0.08);
    } else {
      along = magnitude * uniform_in(gen, -0.8, 0.8);
      across = magnitude * uniform_in(gen, -0.55, 0.55);
      dyaw = magnitude * uniform_in(gen, -0.12, 0.12);
      dim_scale.x() = 1.0 + magnitude * uniform_in(gen, -0.06, 0.10);
      dim_scale.y() = 1.0 + magnitude * uniform_in(gen, -0.06, 0.10);
      if (model == BoxErrorModel::kSpoofedCluster) {
        dz = magnitude * uniform_in(gen, -0.25, 0.0);
        dim_scale.z() = 1.0 + magnitude * uniform_in(gen, 0.0, 0.25);
      } else {
        dz = 0.0;
        dim_scale.z() = 1.0 + magnitude * uniform_in(gen, -0.04, 0.20);
      }
    }
    jittered.center += Vec3(c * along - s * across, s * along + c * across, dz);
    jittered.yaw = wrap_rad(box.yaw + dyaw);
    jittered.dims = box.dims.cwiseProduct(dim_scale);
    const double iou = iou3d(jittered, box);
    if (iou >= target_lo && iou < 1.0) return jittered;
    if (iou < min_iou) magnitude *= 0.7;  // too aggressive, pull back
  }
  return box;
}

std::vector<CalibrationScene> build_valid_scenes(const SensorModel& sensor,
                                                 const TriangleMesh& mesh,
                                                 const BenchmarkOptions& options,
                                                 std::uint64_t seed) {
  std::vector<CalibrationScene> scenes;
  scenes.reserve(options.n_valid);
  const int n_front = static_cast<int>(
      std::ceil(options.front_near_fraction * options.n_valid));

  for (int i = 0; i < options.n_valid; ++i) {
    auto gen = substream(seed, static_cast<std::uint64_t>(i));
    double range;
    if (i < n_front) {
      range = uniform_in(gen, 5.0, 8.0);
    } else if (i % 2 == 0) {
      range = uniform_in(gen, 9.0, 24.0);
    } else {
      range = uniform_in(gen, 24.0, 38.0);
    }
    const double azimuth = uniform_in(gen, -25.0, 25.0);
    const double yaw = uniform_in(gen, -kPi, kPi);

    Scene scene;
    scene.target = MeshInstance{
        mesh, Pose{Vec3(range * std::cos(deg2rad(azimuth)),
                        range * std::sin(deg2rad(azimuth)), options.ground_z),
                   yaw}};
    // Every fourth beyond the front-near block gets a partial occluder
    // (a second vehicle between the sensor and the target).
    if (i >= n_front && i % 4 == 1 && range > 12.0) {
      const double occ_range = range * uniform_in(gen, 0.4, 0.6);
      const double occ_az = azimuth + uniform_in(gen, -1.5, 1.5);
      scene.occluders.push_back(MeshInstance{
          mesh, Pose{Vec3(occ_range * std::cos(deg2rad(occ_az)),
                          occ_range * std::sin(deg2rad(occ_az)),
                          options.ground_z),
                     uniform_in(gen, -kPi, kPi)}});
    }
    if (options.ground) scene.ground_z = options.ground_z;

    CalibrationScene out;
    out.cloud = render(sensor, scene).cloud;
    // Label-style box: capture-dataset annotations reach the ground contact
    // (wheel zone), not just the body shell.
    Box3D box = mesh_bounding_box(mesh, scene.target.pose);
    const double top = box.top();
    box.dims.z() = top - options.ground_z;
    box.center.z() = (top + options.ground_z) / 2.0;
    if (options.box_error_iou < 1.0) {
      box = perturb_box_to_iou(box, options.box_error_iou,
                               BoxErrorModel::kValidSurface, gen);
    }
    out.box = box;
    scenes.push_back(std::move(out));
  }
  return scenes;
}

std::vector<CalibrationScene> build_spoofed_scenes(
    const SensorModel& sensor, const std::vector<AttackTrace>& traces,
    const AttackCapability& capability, const BenchmarkOptions& options,
    std::uint64_t seed) {
  std::vector<CalibrationScene> scenes;
  scenes.reserve(traces.size());
  const PointCloud ground =
      options.ground ? render_ground_cloud(sensor, options.ground_z)
                     : PointCloud{};

  for (std::size_t i = 0; i < traces.size(); ++i) {
    auto gen = substream(seed ^ 0x5b00fULL, i);
    const double azimuth = uniform_in(gen, -10.0, 10.0);
    const double range =
        uniform_in(gen, capability.min_range_m, capability.max_range_m);
    try {
      AttackTrace placed =
          place_front_near(traces[i], capability, azimuth, range);
      placed = calibrate_to_rays(sensor, placed);
      placed = prune_to_capability(placed, capability);
      if (placed.empty()) continue;
      const InjectionReport report =
          inject(ground, sensor, placed, capability);
      Box3D box = report.target_box;
      if (options.box_error_iou < 1.0) {
        box = perturb_box_to_iou(box, options.box_error_iou,
                                 BoxErrorModel::kSpoofedCluster, gen);
      }
      scenes.push_back(CalibrationScene{report.spoofed_cloud, box});
    } catch (const Error&) {
      continue;  // unplaceable trace: skip, the benchmark stays well-formed
    }
  }
  return scenes;
}

std::vector<CampaignFrame> build_campaign_frames(const SensorModel& sensor,
                                                 const TriangleMesh& mesh,
                                                 int n_frames,
                                                 double ground_z,
                                                 std::uint64_t seed) {
  std::vector<CampaignFrame> frames;
  frames.reserve(n_frames);
  for (int i = 0; i < n_frames; ++i) {
    auto gen = substream(seed ^ 0xf0a3eULL, static_cast<std::uint64_t>(i));
    Scene scene;
    // Two vehicles outside the front-near attack zone (|azimuth| > 12 deg or
    // range beyond the band).
    const double az1 = (uniform01(gen) < 0.5 ? 1.0 : -1.0) *
                       uniform_in(gen, 14.0, 35.0);
    const double r1 = uniform_in(gen, 10.0, 24.0);
    scene.target = MeshInstance{
        mesh, Pose{Vec3(r1 * std::cos(deg2rad(az1)),
                        r1 * std::sin(deg2rad(az1)), ground_z),
                   uniform_in(gen, -kPi, kPi)}};
    const double az2 = (uniform01(gen) < 0.5 ? 1.0 : -1.0) *
                       uniform_in(gen, 5.0, 30.0);
    const double r2 = uniform_in(gen, 14.0, 32.0);
    scene.occluders.push_back(MeshInstance{
        mesh, Pose{Vec3(r2 * std::cos(deg2rad(az2)),
                        r2 * std::sin(deg2rad(az2)), ground_z),
                   uniform_in(gen, -kPi, kPi)}});
    scene.ground_z = ground_z;

    CampaignFrame frame;
    frame.frame_id = "synthetic_" + std::to_string(i);
    frame.cloud = render(sensor, scene).cloud;
    frame.cloud.frame_id = frame.frame_id;
    for (const Pose& pose : {scene.target.pose, scene.occluders[0].pose}) {
      Box3D box = mesh_bounding_box(mesh, pose);
      const double top = box.top();
      box.dims.z() = top - ground_z;
      box.center.z() = (top + ground_z) / 2.0;
      frame.valid_boxes.push_back(box);
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

}  // namespace spoofbench
