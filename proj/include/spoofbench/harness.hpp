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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spoofbench/attack.hpp"
#include "spoofbench/carlo.hpp"
#include "spoofbench/sensor_model.hpp"
#include "spoofbench/types.hpp"

namespace spoofbench {

// The deliberately occlusion-blind proxy detector: density clustering on a
// ground-stripped BEV grid. It stands in for the neural models so the
// attack/defense dynamic is measurable at desk scale; its numbers are
// proxy-scale, never the paper's model-scale results.
struct ProxyDetectorConfig {
  double bev_cell_m = 0.4;
  int min_points = 5;
  double n_sat = 100.0;  // score = min(1, n / n_sat)
  double ground_z = kDefaultGroundZ;
  double ground_margin_m = 0.2;  // strip points below ground_z + margin
  double z_band_m = 3.0;         // and above ground_z + margin + band
};

/// Clusters the ground-stripped cloud on a BEV occupancy grid (8-connected),
/// fits a PCA-yaw box per cluster, and scores by point count. Deterministic;
/// detections are ordered by (x, y) of the box center.
std::vector<Detection> proxy_detect(const PointCloud& cloud,
                                    const ProxyDetectorConfig& config);

// When an attack counts as successful: a detection above the score threshold
// whose position matches the target, either by BEV center distance or by 3D
// IoU.
struct SuccessRule {
  enum class Mode { kCenterDistance, kIou };
  Mode mode = Mode::kCenterDistance;
  double center_distance_m = 1.0;
  double iou_threshold = 0.7;
  double score_threshold = 0.5;
};

bool judge_success(const std::vector<Detection>& detections,
                   const Box3D& target, const SuccessRule& rule);

/// Best score among detections that position-match the target (ignoring the
/// score threshold); nullopt when none matches.
std::optional<double> best_matching_score(
    const std::vector<Detection>& detections, const Box3D& target,
    const SuccessRule& rule);

/// Successes over total. Throws Error on an empty set.
double asr(const std::vector<bool>& successes);

struct GroundTruthBox {
  std::string frame_id;
  Box3D box;
};

/// 11-point interpolated average precision with greedy score-ordered
/// matching at iou3d >= iou_threshold (one detection per ground truth).
double average_precision(const std::vector<Detection>& detections,
                         const std::vector<GroundTruthBox>& ground_truth,
                         double iou_threshold);

// Inputs for the threshold-averaged attack success rate: the detector's
// scored TP flags on ground-truth data fix the recall curve, and each attack
// sample contributes its best position-matched score.
struct A2srInput {
  std::vector<std::optional<double>> attack_scores;
  std::vector<Detection> gt_detections;
  std::vector<GroundTruthBox> ground_truth;
  double iou_threshold = 0.7;
};

/// Averages the attack success rate over the 11 recall levels {0.0 .. 1.0}:
/// t_r is the highest detection score still reaching recall >= r, and levels
/// the detector cannot reach contribute 0. Throws Error without ground
/// truth.
double a2sr(const A2srInput& input);

struct CampaignFrame {
  std::string frame_id;
  PointCloud cloud;
  std::vector<Box3D> valid_boxes;  // ground truth for AP and false-spoof rate
};

struct CampaignPairRow {
  std::string frame_id;
  std::size_t trace_index = 0;
  int group = 0;  // 1-based 10-point group of the injected size
  int injected_points = 0;
  double azimuth_deg = 0.0;
  double range_m = 0.0;
  bool success = false;
  std::optional<double> best_score;
  bool defense_removed = false;  // the matching detection was flagged spoofed
  std::string error;             // nonempty when the pair failed
};

struct CampaignSettings {
  AttackCapability capability;
  SuccessRule rule;
  ProxyDetectorConfig proxy;
  std::optional<CarloConfig> defense;
  double azimuth_spread_deg = 4.0;  // placement azimuth ~ U(-spread, spread)
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct ExperimentResult {
  std::vector<CampaignPairRow> rows;
  std::map<int, double> group_asr;       // 10-point group -> ASR
  std::map<int, int> group_totals;
  double overall_asr = 0.0;
  int valid_box_count = 0;               // false-spoof stats (defended runs)
  int valid_box_spoofed = 0;
  double false_spoof_rate = 0.0;
  std::optional<double> ap;              // proxy AP on pristine frames
  std::optional<double> a2sr_value;

  /// Recomputes the aggregate ASR from the raw rows (consistency oracle).
  double recount_asr() const;
};

/// Runs the full pipeline for every (frame, trace) pair: place at a seeded
/// front-near azimuth/range, calibrate to rays, prune, inject, detect,
/// optionally filter through the defense, and judge. Pair failures are
/// recorded inline and the campaign continues. Bit-reproducible for a fixed
/// seed regardless of `jobs`.
ExperimentResult run_campaign(const SensorModel& sensor,
                              const std::vector<CampaignFrame>& frames,
                              const std::vector<AttackTrace>& traces,
                              const CampaignSettings& settings);

// One source scene for the score-error experiment: a vehicle's points in
// their original surroundings plus its box.
struct ScoreErrorScene {
  PointCloud cloud;
  Box3D box;
};

/// Moves each scene's vehicle point set to a front-near location and
/// compares the proxy detector's confidence before and after. Returns the
/// relative errors |s' - s| / s for scenes where both sides were detected.
std::vector<double> score_error_experiment(const SensorModel& sensor,
                                           const std::vector<ScoreErrorScene>& scenes,
                                           const AttackCapability& capability,
                                           const ProxyDetectorConfig& proxy,
                                           const SuccessRule& rule,
                                           std::uint64_t seed);

/// Writes a plot-ready CDF table: `value,cdf` rows under a provenance
/// header.
void write_cdf_csv(const std::string& path, std::vector<double> samples,
                   const std::string& provenance);

/// Per-pair rows and per-group ASR tables for a campaign result.
void write_campaign_csvs(const std::string& out_dir,
                         const ExperimentResult& result,
                         const std::string& provenance);

/// FNV-1a hash of a byte string, used for provenance stamping.
std::uint64_t fnv1a(const std::string& bytes);

}  // namespace spoofbench
