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
#include <random>
#include <vector>

#include "spoofbench/carlo.hpp"
#include "spoofbench/harness.hpp"
#include "spoofbench/renderer.hpp"
#include "spoofbench/types.hpp"

namespace spoofbench {

// Synthetic benchmark generation: rendered valid vehicles (front-near,
// mid-range, distant, some partially occluded) and capability-constrained
// spoofed scenes, the desk-scale stand-in for a labeled capture dataset.
struct BenchmarkOptions {
  int n_valid = 60;
  int n_spoofed = 60;
  bool ground = true;
  double ground_z = kDefaultGroundZ;
  // At least this fraction of valid vehicles is placed front-near (the
  // attack's target zone); the rest spreads over mid and far ranges.
  double front_near_fraction = 0.55;
  // Detector-error emulation: scene boxes are jittered while keeping at
  // least this IoU with the ground truth, mirroring how real detections at
  // the 0.7-IoU matching level wander around the vehicle. >= 1 disables.
  double box_error_iou = 0.7;
};

// Which detector-error model to draw from. Boxes fitted to dense valid
// surfaces wander in the plane (shift, yaw, footprint); boxes fitted to a
// floating spoofed cluster also sink toward the ground and inflate
// vertically, the classic bad fit on fake vehicles.
enum class BoxErrorModel { kValidSurface, kSpoofedCluster };

/// Jitters `box` under the given error model so that iou3d(result, box)
/// stays within [min_iou, 1). Deterministic given the generator state.
Box3D perturb_box_to_iou(const Box3D& box, double min_iou, BoxErrorModel model,
                         std::mt19937_64& gen);

/// Rendered valid-vehicle scenes with their ground-truth boxes.
std::vector<CalibrationScene> build_valid_scenes(const SensorModel& sensor,
                                                 const TriangleMesh& mesh,
                                                 const BenchmarkOptions& options,
                                                 std::uint64_t seed);

/// Spoofed scenes: each trace is placed front-near, calibrated, pruned, and
/// injected into a bare-ground cloud; the box is the injection target box.
std::vector<CalibrationScene> build_spoofed_scenes(
    const SensorModel& sensor, const std::vector<AttackTrace>& traces,
    const AttackCapability& capability, const BenchmarkOptions& options,
    std::uint64_t seed);

/// Pristine campaign frames: ground plane plus vehicles placed outside the
/// front-near attack zone, with their boxes as ground truth.
std::vector<CampaignFrame> build_campaign_frames(const SensorModel& sensor,
                                                 const TriangleMesh& mesh,
                                                 int n_frames,
                                                 double ground_z,
                                                 std::uint64_t seed);

/// Ground-plane-only sweep (no objects).
PointCloud render_ground_cloud(const SensorModel& sensor, double ground_z);

}  // namespace spoofbench
