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
#include <variant>
#include <vector>

#include "spoofbench/geometry.hpp"
#include "spoofbench/sensor_model.hpp"
#include "spoofbench/types.hpp"

namespace spoofbench {

struct Pose {
  Vec3 translation = Vec3::Zero();
  double yaw = 0.0;
};

struct MeshInstance {
  TriangleMesh mesh;
  Pose pose;
};

// A target mesh with optional occluder meshes and ground plane. The ground
// plane is rendered only when a height is set.
struct Scene {
  MeshInstance target;
  std::vector<MeshInstance> occluders;
  std::optional<double> ground_z;
};

enum class HitSource { kTarget, kOccluder, kGround };

// One rendered sweep: at most one return per lattice ray, with the ray and
// the surface it came from recorded per point.
struct RenderResult {
  PointCloud cloud;
  std::vector<RayId> rays;
  std::vector<HitSource> sources;

  PointCloud points_from(HitSource source) const;
  std::size_t count_from(HitSource source) const;
};

/// Casts every lattice ray into the scene and keeps the nearest hit within
/// max range. Nearer occluders shadow the target, and the target's facing
/// surface shadows its own interior via the nearest-hit rule. Mesh hits get
/// intensity 0.5, ground hits 0.3.
RenderResult render(const SensorModel& sensor, const Scene& scene);

// An occlusion pattern for trace synthesis: either a physical occluder mesh
// or an azimuth band mask that drops the target returns inside the band
// (the cheap variant used for family sweeps).
struct AzimuthBandMask {
  double center_deg = 0.0;
  double width_deg = 0.0;
};
using OcclusionPattern = std::variant<std::monostate, MeshInstance, AzimuthBandMask>;

/// Renders the target mesh once per (posture, pattern) pair and packages the
/// target returns as traces. Deterministic given the grids.
std::vector<AttackTrace> render_trace_family(
    const SensorModel& sensor, const TriangleMesh& mesh,
    const std::vector<Pose>& postures,
    const std::vector<OcclusionPattern>& patterns);

// Renderer sweep settings for building a grouped trace dataset in the
// (0, 10 * group_count] point range.
struct TraceDatasetParams {
  int group_size = 10;
  int group_count = 20;
  int per_group = 5;
  std::vector<double> ranges_m;      // defaulted when empty
  std::vector<double> yaws_deg;      // defaulted when empty
  std::vector<double> mask_fractions;  // defaulted when empty
};

/// Sweeps postures and azimuth masks, prunes each trace to `capability`, and
/// picks `per_group` traces per point-count group with the seeded generator.
/// Groups the sweep cannot fill stay short; the result is sorted by group.
std::vector<AttackTrace> build_rendered_dataset(const SensorModel& sensor,
                                                const TriangleMesh& mesh,
                                                const AttackCapability& capability,
                                                const TraceDatasetParams& params,
                                                std::uint64_t seed);

/// Loads a scene description JSON: {"target": {"mesh": path, "translation":
/// [x,y,z], "yaw_deg": d}, "occluders": [...], "ground_z": number|null}.
Scene load_scene_config(const std::string& path);

/// Tight bounding box of a posed mesh (yaw follows the pose).
Box3D mesh_bounding_box(const TriangleMesh& mesh, const Pose& pose);

}  // namespace spoofbench
