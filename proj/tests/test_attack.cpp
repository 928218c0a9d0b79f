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

#include <gtest/gtest.h>

#include <cmath>

#include "spoofbench/renderer.hpp"
#include "spoofbench/rng.hpp"
#include "test_support.hpp"

namespace spoofbench {
namespace {

AttackTrace trace_from_points(std::vector<Point> points) {
  AttackTrace trace;
  trace.points.points = std::move(points);
  trace.meta.point_count = static_cast<int>(trace.points.size());
  trace.meta.azimuth_extent_deg = azimuth_extent_deg(trace.points);
  return trace;
}

AttackTrace random_vehicle_trace(std::mt19937_64& gen, int n, double range,
                                 double azimuth_deg) {
  // A loose shell of points around a car-sized footprint.
  std::vector<Point> points;
  const double cx = range * std::cos(deg2rad(azimuth_deg));
  const double cy = range * std::sin(deg2rad(azimuth_deg));
  for (int i = 0; i < n; ++i) {
    points.emplace_back(cx + uniform_in(gen, -1.9, 1.9),
                        cy + uniform_in(gen, -0.8, 0.8),
                        uniform_in(gen, -1.6, -0.2), 0.5);
  }
  return trace_from_points(std::move(points));
}

TEST(AzimuthExtent, WrapsAcrossCut) {
  AttackTrace straddling = trace_from_points(
      {Point(-10, -0.5, 0, 0), Point(-10, 0.5, 0, 0)});  // az ~ +-177
  EXPECT_NEAR(azimuth_extent_deg(straddling.points), 5.72, 0.1);
  EXPECT_DOUBLE_EQ(azimuth_extent_deg(PointCloud{}), 0.0);
}

TEST(ExtractVehiclePoints, FiltersByDilatedBox) {
  PointCloud cloud;
  const Box3D box(Vec3(10, 0, -1), Vec3(4, 2, 1.5), 0.3);
  auto gen = substream(103, 0);
  int inside = 0;
  for (int i = 0; i < 200; ++i) {
    const Vec3 p(uniform_in(gen, 5, 15), uniform_in(gen, -4, 4),
                 uniform_in(gen, -2.5, 0.5));
    cloud.points.emplace_back(p, 0.4);
    inside += point_in_box(p, box);
  }
  const AttackTrace trace =
      extract_vehicle_points(cloud, box, 0.0, TraceKind::kOccluded);
  EXPECT_EQ(static_cast<int>(trace.size()), inside);
  EXPECT_EQ(trace.meta.kind, TraceKind::kOccluded);
  EXPECT_NEAR(trace.meta.source_range_m, 10.0, 1e-9);

  const AttackTrace dilated =
      extract_vehicle_points(cloud, box, 0.1, TraceKind::kOccluded);
  EXPECT_GE(dilated.size(), trace.size());

  const Box3D far_box(Vec3(100, 100, 0), Vec3(1, 1, 1), 0.0);
  EXPECT_THROW(extract_vehicle_points(cloud, far_box, 0.0, TraceKind::kOccluded),
               EmptyTraceError);
}

Calibration permutation_calib() {
  Calibration calib;
  calib.R0_rect = Eigen::Matrix3d::Identity();
  calib.Tr_velo_to_cam.setZero();
  calib.Tr_velo_to_cam(0, 1) = -1.0;
  calib.Tr_velo_to_cam(1, 2) = -1.0;
  calib.Tr_velo_to_cam(2, 0) = 1.0;
  return calib;
}

LabelRecord car_label(double x_fwd, double y_left, int occluded) {
  // Build a camera-frame record whose LiDAR location is (x_fwd, y_left, -1).
  LabelRecord rec;
  rec.object_type = "Car";
  rec.occluded = occluded;
  rec.dims_hwl = Vec3(1.5, 1.6, 3.9);
  rec.location_cam = Vec3(-y_left, 1.0, x_fwd);  // inverse of the permutation
  rec.rotation_y = 0.2;
  return rec;
}

TEST(SelectCandidates, OcclusionAndRangeRules) {
  const Calibration calib = permutation_calib();
  std::vector<LabelRecord> labels;
  labels.push_back(car_label(10, 0, 0));   // near, visible: neither
  labels.push_back(car_label(12, 2, 2));   // occluded candidate
  labels.push_back(car_label(40, -5, 0));  // distant candidate
  labels.push_back(car_label(35, 0, 1));   // occluded AND distant
  LabelRecord dc = car_label(12, 2, 2);
  dc.object_type = "DontCare";
  dc.dont_care = true;
  labels.push_back(dc);

  const auto occluded =
      select_candidates(labels, calib, CandidateKind::kOccluded);
  ASSERT_EQ(occluded.size(), 2u);
  EXPECT_EQ(occluded[0].first, 1u);
  EXPECT_EQ(occluded[1].first, 3u);

  const auto distant = select_candidates(labels, calib, CandidateKind::kDistant);
  ASSERT_EQ(distant.size(), 2u);
  // Brute-force range scan agreement.
  for (const auto& [idx, box] : distant) {
    EXPECT_GT(box.bev_range(), 30.0);
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].dont_care || labels[i].object_type != "Car") continue;
    const Box3D box = label_to_lidar_box(labels[i], calib);
    const bool expect_distant = box.bev_range() > 30.0;
    const bool found = std::any_of(
        distant.begin(), distant.end(),
        [i](const auto& entry) { return entry.first == i; });
    EXPECT_EQ(found, expect_distant);
  }
}

TEST(TranslateTrace, IdentityIsBitExact) {
  auto gen = substream(107, 0);
  const AttackTrace trace = random_vehicle_trace(gen, 50, 20, 30);
  const AttackTrace moved = translate_trace(trace, 0.0, 0.0);
  ASSERT_EQ(moved.size(), trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    EXPECT_EQ(moved.points.points[i].x, trace.points.points[i].x);
    EXPECT_EQ(moved.points.points[i].y, trace.points.points[i].y);
    EXPECT_EQ(moved.points.points[i].z, trace.points.points[i].z);
    EXPECT_EQ(moved.points.points[i].intensity,
              trace.points.points[i].intensity);
  }
}

TEST(TranslateTrace, MatchesTransformMatrixCases) {
  // Pure radial shift: alpha = 0 for a centroid on the +x axis.
  const AttackTrace single = trace_from_points({Point(10, 0, 0, 0.7)});
  const AttackTrace pulled = translate_trace(single, 0.0, -4.0);
  EXPECT_NEAR(pulled.points.points[0].x, 6.0, 1e-12);
  EXPECT_NEAR(pulled.points.points[0].y, 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(pulled.points.points[0].intensity, 0.7);

  // Pure rotation.
  const AttackTrace unit = trace_from_points({Point(1, 0, 0, 0.2)});
  const AttackTrace rotated = translate_trace(unit, kPi / 2.0, 0.0);
  EXPECT_NEAR(rotated.points.points[0].x, 0.0, 1e-12);
  EXPECT_NEAR(rotated.points.points[0].y, 1.0, 1e-12);
}

TEST(TranslateTrace, RigidMotionLaw) {
  auto gen = substream(109, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const AttackTrace trace = random_vehicle_trace(
        gen, 30, uniform_in(gen, 8, 40), uniform_in(gen, -60, 60));
    const double theta = uniform_in(gen, -kPi, kPi);
    const double tau = uniform_in(gen, -20, 20);
    const AttackTrace moved = translate_trace(trace, theta, tau);
    ASSERT_EQ(moved.size(), trace.size());
    for (std::size_t i = 0; i < trace.size(); i += 3) {
      for (std::size_t j = i + 1; j < trace.size(); j += 5) {
        const double before = (trace.points.points[i].position() -
                               trace.points.points[j].position())
                                  .norm();
        const double after = (moved.points.points[i].position() -
                              moved.points.points[j].position())
                                 .norm();
        ASSERT_NEAR(before, after, 1e-9);
      }
    }
  }
}

TEST(TranslateTrace, DegenerateCentroid) {
  const AttackTrace on_axis = trace_from_points({Point(0, 0, 5, 0)});
  EXPECT_THROW(translate_trace(on_axis, 0.1, 1.0), DegenerateTraceError);
  EXPECT_THROW(translate_trace(AttackTrace{}, 0.0, 0.0), EmptyTraceError);
}

TEST(PlaceFrontNear, IdentityWhenAlreadyThere) {
  auto gen = substream(113, 0);
  AttackTrace trace = random_vehicle_trace(gen, 40, 6.0, 0.0);
  // Force the centroid to exactly 6 m at azimuth 0.
  Vec3 centroid = Vec3::Zero();
  for (const Point& p : trace.points.points) centroid += p.position();
  centroid /= static_cast<double>(trace.size());
  const double shift_x = 6.0 - centroid.x();
  for (Point& p : trace.points.points) p.x += shift_x;
  for (Point& p : trace.points.points) p.y -= centroid.y();

  const AttackCapability capability;
  const AttackTrace placed = place_front_near(trace, capability, 0.0, 6.0);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    EXPECT_NEAR(placed.points.points[i].x, trace.points.points[i].x, 1e-9);
    EXPECT_NEAR(placed.points.points[i].y, trace.points.points[i].y, 1e-9);
  }
}

TEST(PlaceFrontNear, LandsAtRequestedPose) {
  auto gen = substream(127, 0);
  const AttackCapability capability;
  for (int i = 0; i < 50; ++i) {
    const AttackTrace trace = random_vehicle_trace(
        gen, 25, uniform_in(gen, 10, 50), uniform_in(gen, -90, 90));
    const double az = uniform_in(gen, -10, 10);
    const double r = uniform_in(gen, 5, 8);
    const AttackTrace placed = place_front_near(trace, capability, az, r);

    Vec3 centroid = Vec3::Zero();
    for (const Point& p : placed.points.points) centroid += p.position();
    centroid /= static_cast<double>(placed.size());
    EXPECT_NEAR(centroid.x(), r * std::cos(deg2rad(az)), 1e-6);
    EXPECT_NEAR(centroid.y(), r * std::sin(deg2rad(az)), 1e-6);

    const double bev = std::hypot(centroid.x(), centroid.y());
    EXPECT_GE(bev, capability.min_range_m - 1e-9);
    EXPECT_LE(bev, capability.max_range_m + 1e-9);
  }
}

TEST(PlaceFrontNear, RejectsOutOfBandRequests) {
  auto gen = substream(131, 0);
  const AttackTrace trace = random_vehicle_trace(gen, 20, 20, 0);
  const AttackCapability capability;
  EXPECT_THROW(place_front_near(trace, capability, 0.0, 3.0), PlacementError);
  EXPECT_THROW(place_front_near(trace, capability, 0.0, 9.0), PlacementError);
  // Default range clamps into the band instead of failing.
  EXPECT_NO_THROW(place_front_near(trace, capability, 0.0));
}

TEST(CalibrateToRays, SnapsAndDeduplicates) {
  const SensorModel sensor = testing::small_sensor();

  // A point already exactly on a ray stays put.
  const Vec3 on_ray = 7.0 * sensor.ray_direction({8, 100});
  const AttackTrace exact = trace_from_points({Point(on_ray, 0.5)});
  const AttackTrace snapped = calibrate_to_rays(sensor, exact);
  ASSERT_EQ(snapped.size(), 1u);
  EXPECT_LT((snapped.points.points[0].position() - on_ray).norm(), 1e-12);

  // Two points on one ray: the nearer wins and keeps its range.
  const Vec3 dir = sensor.ray_direction({8, 100});
  const AttackTrace pair =
      trace_from_points({Point(7.0 * dir, 0.1), Point(6.0 * dir, 0.9)});
  const AttackTrace merged = calibrate_to_rays(sensor, pair);
  ASSERT_EQ(merged.size(), 1u);
  EXPECT_NEAR(merged.points.points[0].position().norm(), 6.0, 1e-12);

  // Residual to the assigned ray is zero after calibration.
  auto gen = substream(137, 0);
  const AttackTrace trace = random_vehicle_trace(gen, 60, 7, 3);
  const AttackTrace calibrated = calibrate_to_rays(sensor, trace);
  for (const Point& p : calibrated.points.points) {
    const RayId id = sensor.nearest_ray(p.position());
    const double residual = angular_distance(
        p.position().normalized(), sensor.ray_direction(id));
    EXPECT_LT(residual, 1e-9);
  }

  const AttackTrace overhead = trace_from_points({Point(0, 0, 5, 0)});
  EXPECT_THROW(calibrate_to_rays(sensor, overhead), Error);
}

TEST(PruneToCapability, CanonicalTraceScaleUntouched) {
  // 60 points spread over 8 degrees: the canonical trace scale fits A.
  auto gen = substream(139, 0);
  std::vector<Point> points;
  for (int i = 0; i < 60; ++i) {
    const double az = uniform_in(gen, -4.0, 4.0);
    points.emplace_back(from_spherical(6.0, az, uniform_in(gen, -10, -2)), 0.5);
  }
  const AttackTrace trace = trace_from_points(std::move(points));
  const AttackCapability capability;
  const AttackTrace pruned = prune_to_capability(trace, capability);
  EXPECT_EQ(pruned.size(), trace.size());
}

TEST(PruneToCapability, CountAndWindowEnforced) {
  auto gen = substream(149, 0);
  std::vector<Point> wide;
  for (int i = 0; i < 300; ++i) {
    const double az = uniform_in(gen, -7.5, 7.5);  // 15 degree spread
    wide.emplace_back(from_spherical(6.0, az, uniform_in(gen, -10, -2)), 0.5);
  }
  const AttackTrace trace = trace_from_points(std::move(wide));
  const AttackCapability capability;
  const AttackTrace pruned = prune_to_capability(trace, capability);

  EXPECT_EQ(pruned.size(), 200u);
  EXPECT_LE(azimuth_extent_deg(pruned.points),
            capability.azimuth_window_deg + 1e-9);
  EXPECT_TRUE(satisfies_capability(pruned, capability));
}

TEST(PruneToCapability, IdempotentIncludingAcrossCut) {
  auto gen = substream(151, 0);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Point> points;
    const double center = trial % 3 == 0 ? 179.0 : uniform_in(gen, -170, 170);
    const int n = 10 + static_cast<int>(uniform_index(gen, 400));
    for (int i = 0; i < n; ++i) {
      const double az = center + uniform_in(gen, -9, 9);
      points.emplace_back(from_spherical(6.0, wrap_deg(az), uniform_in(gen, -8, 0)),
                          0.5);
    }
    const AttackTrace trace = trace_from_points(std::move(points));
    const AttackCapability capability;
    const AttackTrace once = prune_to_capability(trace, capability);
    const AttackTrace twice = prune_to_capability(once, capability);
    ASSERT_EQ(once.size(), twice.size());
    for (std::size_t i = 0; i < once.size(); ++i) {
      ASSERT_EQ(once.points.points[i].x, twice.points.points[i].x);
      ASSERT_EQ(once.points.points[i].y, twice.points.points[i].y);
    }
  }
}

TEST(Inject, EmptyCloudBecomesTrace) {
  const SensorModel sensor = testing::small_sensor();
  auto gen = substream(157, 0);
  AttackTrace trace = random_vehicle_trace(gen, 80, 6, 0);
  trace = calibrate_to_rays(sensor, trace);
  const AttackCapability capability;
  trace = prune_to_capability(trace, capability);
  const InjectionReport report =
      inject(PointCloud{}, sensor, trace, capability);
  EXPECT_EQ(report.spoofed_cloud.size(), trace.size());
  EXPECT_EQ(report.replaced_ray_count, 0);
  EXPECT_EQ(report.injected_point_count, static_cast<int>(trace.size()));
  EXPECT_NEAR(report.target_box.dims.x(), kDefaultCarLength, 1e-12);
}

TEST(Inject, OverridesPristineReturnOnSpoofedRay) {
  const SensorModel sensor = testing::small_sensor();
  // One spoofed point at 6 m on a known ray; one pristine return at 20 m on
  // the same ray, plus an unrelated return elsewhere.
  const RayId ray{7, 90};
  const Vec3 dir = sensor.ray_direction(ray);
  AttackTrace trace = trace_from_points({Point(6.0 * dir, 0.5)});

  PointCloud cloud;
  cloud.points.emplace_back(20.0 * dir, 0.3);
  cloud.points.emplace_back(from_spherical(15.0, 90.0, 0.0), 0.3);

  const AttackCapability capability;
  const InjectionReport report = inject(cloud, sensor, trace, capability);
  EXPECT_EQ(report.replaced_ray_count, 1);
  ASSERT_EQ(report.spoofed_cloud.size(), 2u);  // one removed, one injected

  // Count conserved per ray: the spoofed ray has exactly one return at 6 m.
  int on_ray = 0;
  for (const Point& p : report.spoofed_cloud.points) {
    if (sensor.nearest_ray(p.position()) == ray) {
      ++on_ray;
      EXPECT_NEAR(p.position().norm(), 6.0, 1e-9);
    }
  }
  EXPECT_EQ(on_ray, 1);
}

TEST(Inject, RestoreReproducesPristineExactly) {
  const SensorModel sensor = testing::load_vlp16();
  // A rendered scene provides a physically consistent pristine cloud.
  Scene scene;
  scene.target =
      MeshInstance{testing::load_car_mesh(), Pose{Vec3(14, 3, -1.73), 0.7}};
  scene.ground_z = -1.73;
  const PointCloud pristine = render(sensor, scene).cloud;

  auto gen = substream(163, 0);
  AttackTrace trace = random_vehicle_trace(gen, 120, 6.5, 2.0);
  trace = calibrate_to_rays(sensor, trace);
  trace = prune_to_capability(trace, AttackCapability{});

  const InjectionReport report =
      inject(pristine, sensor, trace, AttackCapability{});
  EXPECT_GT(report.replaced_ray_count, 0);  // ground returns were overridden

  const PointCloud restored = restore_pristine(report);
  ASSERT_EQ(restored.size(), pristine.size());
  for (std::size_t i = 0; i < pristine.size(); ++i) {
    ASSERT_EQ(restored.points[i].x, pristine.points[i].x);
    ASSERT_EQ(restored.points[i].y, pristine.points[i].y);
    ASSERT_EQ(restored.points[i].z, pristine.points[i].z);
    ASSERT_EQ(restored.points[i].intensity, pristine.points[i].intensity);
  }
}

TEST(Inject, SingleReturnLawOnRenderedFrames) {
  const SensorModel sensor = testing::load_vlp16();
  const TriangleMesh car = testing::load_car_mesh();
  auto gen = substream(167, 0);
  const AttackCapability capability;

  for (int frame = 0; frame < 20; ++frame) {
    Scene scene;
    scene.target = MeshInstance{
        car, Pose{Vec3(uniform_in(gen, 10, 30), uniform_in(gen, -8, 8), -1.73),
                  uniform_in(gen, -kPi, kPi)}};
    scene.ground_z = -1.73;
    const PointCloud pristine = render(sensor, scene).cloud;

    AttackTrace trace =
        random_vehicle_trace(gen, 100, uniform_in(gen, 5, 8), 0.0);
    trace = calibrate_to_rays(sensor, trace);
    trace = prune_to_capability(trace, capability);
    const InjectionReport report = inject(pristine, sensor, trace, capability);

    std::map<std::int64_t, int> per_ray;
    for (const Point& p : report.spoofed_cloud.points) {
      const RayId id = sensor.nearest_ray(p.position());
      ++per_ray[sensor.ray_key(id)];
    }
    for (const auto& [key, count] : per_ray) {
      ASSERT_EQ(count, 1) << "frame " << frame;
    }
  }
}

TEST(Inject, CapabilityViolationRejected) {
  const SensorModel sensor = testing::small_sensor();
  auto gen = substream(173, 0);
  std::vector<Point> too_many;
  for (int i = 0; i < 250; ++i) {
    too_many.emplace_back(from_spherical(6.0, uniform_in(gen, -4, 4),
                                         uniform_in(gen, -8, 0)),
                          0.5);
  }
  const AttackTrace trace = trace_from_points(std::move(too_many));
  EXPECT_THROW(inject(PointCloud{}, sensor, trace, AttackCapability{}),
               CapabilityViolationError);
}

TEST(PerturbScale, IdentityAndFixedScale) {
  auto gen = substream(179, 0);
  const AttackTrace trace = random_vehicle_trace(gen, 50, 12, 10);
  const auto [same, zero_l2] = perturb_scale(trace, 0.0, 42);
  EXPECT_DOUBLE_EQ(zero_l2, 0.0);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    EXPECT_DOUBLE_EQ(same.points.points[i].x, trace.points.points[i].x);
  }

  // Degenerate distribution via a direct check of the scaling law.
  const AttackTrace unit = trace_from_points({Point(1, 1, 1, 0.5)});
  const Vec3 scaled = 1.1 * unit.points.points[0].position();
  EXPECT_LT((scaled - Vec3(1.1, 1.1, 1.1)).norm(), 1e-12);
}

TEST(PerturbScale, MeanDisplacementTracksRadius) {
  auto gen = substream(181, 0);
  const double range = 20.0;
  const AttackTrace trace = random_vehicle_trace(gen, 4000, range, 0.0);
  const double epsilon = 0.1;
  const auto [perturbed, mean_l2] = perturb_scale(trace, epsilon, 7);
  // E[|s-1|] = eps/2, so the mean displacement is ~ mean_radius * eps / 2.
  double mean_radius = 0.0;
  for (const Point& p : trace.points.points) {
    mean_radius += p.position().norm();
  }
  mean_radius /= static_cast<double>(trace.size());
  EXPECT_NEAR(mean_l2, mean_radius * epsilon / 2.0,
              0.05 * mean_radius * epsilon);
  EXPECT_THROW(perturb_scale(trace, 1.0, 7), Error);
}

}  // namespace
}  // namespace spoofbench
