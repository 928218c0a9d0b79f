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

#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <set>

#include "oracles.hpp"
#include "spoofbench/attack.hpp"
#include "spoofbench/kitti_io.hpp"
#include "test_support.hpp"

namespace spoofbench {
namespace {

TriangleMesh single_triangle(const Vec3& a, const Vec3& b, const Vec3& c) {
  TriangleMesh mesh;
  mesh.vertices = {a, b, c};
  mesh.triangles = {{0, 1, 2}};
  return mesh;
}

TriangleMesh wall_mesh(double half_width, double half_height) {
  // Two triangles forming a vertical wall in the local yz plane.
  TriangleMesh mesh;
  mesh.vertices = {Vec3(0, -half_width, -half_height),
                   Vec3(0, half_width, -half_height),
                   Vec3(0, half_width, half_height),
                   Vec3(0, -half_width, half_height)};
  mesh.triangles = {{0, 1, 2}, {0, 2, 3}};
  return mesh;
}

TEST(Render, FlatTargetPatchCounts) {
  // 2 channels x 3 azimuth steps aimed at a large perpendicular wall at 5 m.
  const SensorModel sensor(Vec3::Zero(), {-0.5, 0.5}, 1.0, -1.0, 2.0, 50.0);
  Scene scene;
  scene.target = MeshInstance{wall_mesh(2.0, 2.0), Pose{Vec3(5, 0, 0), 0.0}};
  const RenderResult result = render(sensor, scene);
  ASSERT_EQ(result.cloud.size(), 6u);
  for (std::size_t i = 0; i < result.cloud.size(); ++i) {
    EXPECT_NEAR(result.cloud.points[i].position().norm(), 5.0, 0.01);
    EXPECT_EQ(result.sources[i], HitSource::kTarget);
    EXPECT_DOUBLE_EQ(result.cloud.points[i].intensity, 0.5);
  }
}

TEST(Render, FullOcclusionLeavesNoTargetPoints) {
  const SensorModel sensor(Vec3::Zero(), {-0.5, 0.5}, 1.0, -5.0, 5.0, 50.0);
  Scene scene;
  scene.target = MeshInstance{wall_mesh(1.0, 1.0), Pose{Vec3(10, 0, 0), 0.0}};
  scene.occluders.push_back(
      MeshInstance{wall_mesh(3.0, 3.0), Pose{Vec3(5, 0, 0), 0.0}});
  const RenderResult result = render(sensor, scene);
  EXPECT_EQ(result.count_from(HitSource::kTarget), 0u);
  EXPECT_GT(result.count_from(HitSource::kOccluder), 0u);
}

TEST(Render, SingleReturnLawAndDeterminism) {
  const SensorModel sensor = testing::load_vlp16();
  Scene scene;
  scene.target =
      MeshInstance{testing::load_car_mesh(), Pose{Vec3(8, 1, -1.73), 0.4}};
  scene.ground_z = -1.73;
  const RenderResult a = render(sensor, scene);
  const RenderResult b = render(sensor, scene);

  ASSERT_EQ(a.cloud.size(), b.cloud.size());
  for (std::size_t i = 0; i < a.cloud.size(); ++i) {
    EXPECT_DOUBLE_EQ(a.cloud.points[i].x, b.cloud.points[i].x);
    EXPECT_EQ(a.rays[i], b.rays[i]);
  }

  std::set<std::pair<int, int>> seen;
  for (const RayId& id : a.rays) {
    ASSERT_TRUE(seen.insert({id.channel, id.azimuth_index}).second)
        << "two returns on one ray";
  }
}

TEST(Render, GroundOnlyWhenEnabled) {
  const SensorModel sensor = testing::load_vlp16();
  Scene scene;
  scene.target =
      MeshInstance{testing::load_car_mesh(), Pose{Vec3(10, 0, -1.73), 0.0}};
  const RenderResult no_ground = render(sensor, scene);
  EXPECT_EQ(no_ground.count_from(HitSource::kGround), 0u);

  scene.ground_z = -1.73;
  const RenderResult with_ground = render(sensor, scene);
  EXPECT_GT(with_ground.count_from(HitSource::kGround), 1000u);
  EXPECT_EQ(with_ground.count_from(HitSource::kTarget),
            no_ground.count_from(HitSource::kTarget));
}

TEST(Render, OcclusionMonotonicity) {
  const SensorModel sensor = testing::load_vlp16();
  const TriangleMesh car = testing::load_car_mesh();
  Scene scene;
  scene.target = MeshInstance{car, Pose{Vec3(12, 0, -1.73), 0.3}};
  const std::size_t base = render(sensor, scene).count_from(HitSource::kTarget);

  // A second car placed progressively closer to the line of sight.
  for (double offset : {3.0, 1.5, 0.0}) {
    Scene occluded = scene;
    occluded.occluders.push_back(
        MeshInstance{car, Pose{Vec3(6, offset, -1.73), 0.0}});
    const std::size_t count =
        render(sensor, occluded).count_from(HitSource::kTarget);
    EXPECT_LE(count, base);
  }
}

TEST(Render, FrontNearCarMatchesVisibilityOracle) {
  const SensorModel sensor = testing::load_hdl64();
  const TriangleMesh car = testing::load_car_mesh();
  const Vec3 translation(6.0, 0.0, -1.73);
  Scene scene;
  scene.target = MeshInstance{car, Pose{translation, 0.0}};
  const RenderResult result = render(sensor, scene);
  const double count =
      static_cast<double>(result.count_from(HitSource::kTarget));

  // Order 1e3 under the 64-channel preset, and within +-50% of the
  // subsampled visibility estimate.
  EXPECT_GE(count, 500.0);
  EXPECT_LE(count, 5000.0);
  const double expected =
      oracles::dense_visibility_count(sensor, car, translation, 0.0);
  EXPECT_GE(count, 0.5 * expected);
  EXPECT_LE(count, 1.5 * expected);
}

TEST(TraceFamily, EmptyAndSingle) {
  const SensorModel sensor = testing::load_vlp16();
  const TriangleMesh car = testing::load_car_mesh();
  EXPECT_TRUE(render_trace_family(sensor, car, {}, {}).empty());

  const Pose pose{Vec3(9, 0, -1.73), 0.0};
  const auto family =
      render_trace_family(sensor, car, {pose}, {OcclusionPattern{}});
  ASSERT_EQ(family.size(), 1u);

  Scene scene;
  scene.target = MeshInstance{car, pose};
  const PointCloud direct = render(sensor, scene).points_from(HitSource::kTarget);
  ASSERT_EQ(family[0].size(), direct.size());
  EXPECT_EQ(family[0].meta.kind, TraceKind::kRendered);
  EXPECT_EQ(family[0].meta.point_count, static_cast<int>(direct.size()));
  EXPECT_NEAR(family[0].meta.source_range_m, 9.0, 1e-9);
}

TEST(TraceFamily, MaskMonotonicity) {
  const SensorModel sensor = testing::load_vlp16();
  const TriangleMesh car = testing::load_car_mesh();
  const Pose pose{Vec3(10, 0, -1.73), 0.5};
  std::vector<OcclusionPattern> patterns;
  patterns.emplace_back();  // none
  patterns.emplace_back(AzimuthBandMask{0.0, 4.0});
  patterns.emplace_back(AzimuthBandMask{0.0, 8.0});
  const auto family = render_trace_family(sensor, car, {pose}, patterns);
  ASSERT_EQ(family.size(), 3u);
  EXPECT_GE(family[0].size(), family[1].size());
  EXPECT_GE(family[1].size(), family[2].size());
}

TEST(RenderedDataset, GroupsAreFilledAndCapabilityClean) {
  const SensorModel sensor = testing::load_hdl64();
  const TriangleMesh car = testing::load_car_mesh();
  const AttackCapability capability;
  TraceDatasetParams params;
  const auto dataset = build_rendered_dataset(sensor, car, capability, params, 5);

  ASSERT_GE(dataset.size(), 60u);
  std::map<int, int> group_sizes;
  for (const AttackTrace& trace : dataset) {
    ASSERT_FALSE(trace.empty());
    ASSERT_TRUE(satisfies_capability(trace, capability));
    EXPECT_EQ(trace.meta.point_count, static_cast<int>(trace.size()));
    ++group_sizes[(trace.meta.point_count - 1) / 10];
  }
  // The sweep must reach both sparse and saturated groups.
  EXPECT_TRUE(group_sizes.count(19)) << "no max-capability traces";
  int covered = 0;
  for (const auto& [group, n] : group_sizes) covered += (n >= 5);
  EXPECT_GE(covered, 12) << "too few full 10-point groups";
}

TEST(SceneConfig, LoadsMeshAndPoses) {
  const std::string dir = ::testing::TempDir() + "spoofbench_scene";
  std::filesystem::create_directories(dir);
  const std::string scene_path = dir + "/scene.json";
  write_text_file(
      scene_path,
      "{\n"
      "  \"target\": {\"mesh\": \"" + testing::data_dir() +
          "/meshes/car.obj\", \"translation\": [7, 0, -1.73], \"yaw_deg\": 15},\n"
      "  \"occluders\": [],\n"
      "  \"ground_z\": -1.73\n"
      "}\n");
  const Scene scene = load_scene_config(scene_path);
  EXPECT_FALSE(scene.target.mesh.empty());
  EXPECT_TRUE(scene.ground_z.has_value());
  EXPECT_NEAR(scene.target.pose.yaw, deg2rad(15), 1e-12);

  EXPECT_THROW(load_scene_config(dir + "/missing.json"), Error);
}

}  // namespace
}  // namespace spoofbench
