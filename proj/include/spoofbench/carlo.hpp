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

#include "spoofbench/geometry.hpp"
#include "spoofbench/sensor_model.hpp"
#include "spoofbench/types.hpp"

namespace spoofbench {

class EmptyEvidenceError : public Error {
 public:
  using Error::Error;
};

class DegenerateBoxError : public Error {
 public:
  using Error::Error;
};

class NonSeparableError : public Error {
 public:
  using Error::Error;
};

// Thresholds for the two-stage verdict. lpd_low/lpd_high bracket the
// uncertain band of the penetration ratio g; boxes inside the band go to the
// free-space check against fsd_threshold. Defaults route everything to the
// free-space stage until calibrate() tightens them.
struct CarloConfig {
  double cell_size = 0.25;
  double lpd_low = 0.0;        // a' - epsilon
  double lpd_high = 1.0;       // b' + epsilon
  double fsd_threshold = 0.5;  // (a + b) / 2
  double epsilon = 0.05;
};

/// Fraction of a frustum's returns that land behind the box: counts points
/// past t_exit over all returns. No-return rays contribute nothing. Throws
/// EmptyEvidenceError when the frustum holds no returns (callers route that
/// to the free-space stage).
double lpd_ratio(const Frustum& frustum);

/// Free-space ratio of the box: a voxel grid covering the box starts fully
/// occluded, every frustum ray is traversed from the sensor origin to its
/// return (to max range when there is none), and f is the freed fraction of
/// the cells whose centers lie inside the box. Throws DegenerateBoxError
/// when no cell center falls inside the box.
double fsd_ratio(const SensorModel& sensor, const Frustum& frustum,
                 const CarloConfig& config);

enum class VerdictLabel { kValid, kSpoofed };
enum class VerdictStage { kLpd, kFsd };

std::string to_string(VerdictLabel label);
std::string to_string(VerdictStage stage);

// Outcome of the hierarchical check for one box. f is present exactly when
// the free-space stage ran; g is NaN when the frustum had no returns.
struct Verdict {
  VerdictLabel label = VerdictLabel::kValid;
  VerdictStage stage = VerdictStage::kLpd;
  std::optional<double> f;
  double g = 0.0;
  double elapsed_ms = 0.0;
};

/// The hierarchical verdict: g below the band is certainly valid, above it
/// certainly spoofed, and the uncertain band (or missing evidence) falls
/// through to the free-space stage, which flags f >= fsd_threshold.
/// Propagates EmptyFrustumError for boxes outside the FOV.
Verdict carlo_verdict(const SensorModel& sensor, const PointCloud& cloud,
                      const Box3D& box, const CarloConfig& config);

struct BatchVerdict {
  std::optional<Verdict> verdict;
  std::string error;  // set when the per-box check failed
};

/// Independent verdicts for every detection; per-box failures are reported
/// inline without aborting the batch. Output order matches the input.
std::vector<BatchVerdict> carlo_batch(const SensorModel& sensor,
                                      const PointCloud& cloud,
                                      const std::vector<Detection>& detections,
                                      const CarloConfig& config);

// Empirical f/g samples for valid and spoofed scenes with CDF evaluation.
struct RatioDistributions {
  std::vector<double> f_valid;
  std::vector<double> f_spoofed;
  std::vector<double> g_valid;
  std::vector<double> g_spoofed;

  /// Empirical CDF of `samples` at x (samples need not be sorted).
  static double cdf(const std::vector<double>& samples, double x);
};

struct CalibrationScene {
  PointCloud cloud;
  Box3D box;
};

struct CalibrationResult {
  RatioDistributions distributions;
  CarloConfig config;
  double a = 0.0;        // 0.5th percentile of f_spoofed
  double b = 0.0;        // 99.5th percentile of f_valid
  double a_prime = 0.0;  // 0.5th percentile of g_spoofed
  double b_prime = 0.0;  // 99.5th percentile of g_valid
  bool fsd_separated = false;
  bool lpd_overlapped = false;
  int skipped_valid = 0;
  int skipped_spoofed = 0;
};

/// Estimates the f/g distributions over both scene sets and derives the
/// thresholds: fsd_threshold = (a+b)/2 and the LPD band [a'-eps, b'+eps]
/// clamped to [0, 1]. Scenes whose frustum is empty are skipped and counted.
/// Throws NonSeparableError (with the fitted values in the message) when
/// a <= b.
CalibrationResult calibrate(const SensorModel& sensor,
                            const std::vector<CalibrationScene>& valid_scenes,
                            const std::vector<CalibrationScene>& spoofed_scenes,
                            const CarloConfig& base_config);

/// Nearest-rank percentile (p in [0, 100]) of an unsorted sample set.
double percentile(std::vector<double> samples, double p);

/// Persists/loads a calibration profile as JSON, including the percentile
/// choices and FNV-1a hashes of the calibration sets.
void save_carlo_profile(const std::string& path, const CalibrationResult& result,
                        std::uint64_t valid_hash, std::uint64_t spoofed_hash);
CarloConfig load_carlo_profile(const std::string& path);

}  // namespace spoofbench
