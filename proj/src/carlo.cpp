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

#include "spoofbench/carlo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "spoofbench/kitti_io.hpp"

namespace spoofbench {

double lpd_ratio(const Frustum& frustum) {
  std::size_t before = 0, inside = 0, behind = 0;
  for (const FrustumEntry& e : frustum.entries) {
    if (!e.hit_range) continue;
    const double r = *e.hit_range;
    if (r < e.box_interval.t_enter) {
      ++before;
    } else if (r > e.box_interval.t_exit) {
      ++behind;
    } else {
      ++inside;
    }
  }
  const std::size_t total = before + inside + behind;
  if (total == 0) {
    throw EmptyEvidenceError("lpd_ratio: frustum has no returns");
  }
  return static_cast<double>(behind) / static_cast<double>(total);
}

double fsd_ratio(const SensorModel& sensor, const Frustum& frustum,
                 const CarloConfig& config) {
  VoxelGrid grid = VoxelGrid::covering(frustum.box, config.cell_size);

  // |B| counts cells by their centers; boundary-straddling cells whose
  // centers fall outside do not dilute the ratio.
  std::vector<CellIndex> box_cells;
  const auto& dims = grid.dims();
  for (int z = 0; z < dims[2]; ++z) {
    for (int y = 0; y < dims[1]; ++y) {
      for (int x = 0; x < dims[0]; ++x) {
        const CellIndex c{x, y, z};
        if (point_in_box(grid.cell_center(c), frustum.box)) {
          box_cells.push_back(c);
        }
      }
    }
  }
  if (box_cells.empty()) {
    throw DegenerateBoxError("fsd_ratio: box contains no cell centers");
  }

  const Vec3 origin = sensor.origin();
  for (const FrustumEntry& e : frustum.entries) {
    const Vec3 dir = sensor.ray_direction(e.ray);
    // No return means air along the whole ray, so traverse to max range.
    const double reach = e.hit_range ? *e.hit_range : sensor.max_range_m();
    grid.mark_segment_free(origin, origin + reach * dir);
  }

  std::size_t free_in_box = 0;
  for (const CellIndex& c : box_cells) free_in_box += grid.is_free(c);
  return static_cast<double>(free_in_box) /
         static_cast<double>(box_cells.size());
}

std::string to_string(VerdictLabel label) {
  return label == VerdictLabel::kValid ? "Valid" : "Spoofed";
}

std::string to_string(VerdictStage stage) {
  return stage == VerdictStage::kLpd ? "LPD" : "FSD";
}

Verdict carlo_verdict(const SensorModel& sensor, const PointCloud& cloud,
                      const Box3D& box, const CarloConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const Frustum frustum = extract_frustum(sensor, cloud, box);

  Verdict verdict;
  bool need_fsd = false;
  try {
    verdict.g = lpd_ratio(frustum);
    if (verdict.g < config.lpd_low) {
      verdict.label = VerdictLabel::kValid;
      verdict.stage = VerdictStage::kLpd;
    } else if (verdict.g > config.lpd_high) {
      verdict.label = VerdictLabel::kSpoofed;
      verdict.stage = VerdictStage::kLpd;
    } else {
      need_fsd = true;
    }
  } catch (const EmptyEvidenceError&) {
    verdict.g = std::numeric_limits<double>::quiet_NaN();
    need_fsd = true;
  }

  if (need_fsd) {
    verdict.stage = VerdictStage::kFsd;
    verdict.f = fsd_ratio(sensor, frustum, config);
    verdict.label = *verdict.f >= config.fsd_threshold ? VerdictLabel::kSpoofed
                                                       : VerdictLabel::kValid;
  }

  verdict.elapsed_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                start)
          .count();
  return verdict;
}

std::vector<BatchVerdict> carlo_batch(const SensorModel& sensor,
                                      const PointCloud& cloud,
                                      const std::vector<Detection>& detections,
                                      const CarloConfig& config) {
  std::vector<BatchVerdict> out;
  out.reserve(detections.size());
  for (const Detection& det : detections) {
    BatchVerdict entry;
    try {
      entry.verdict = carlo_verdict(sensor, cloud, det.box, config);
    } catch (const Error& e) {
      entry.error = e.what();
    }
    out.push_back(std::move(entry));
  }
  return out;
}

double RatioDistributions::cdf(const std::vector<double>& samples, double x) {
  if (samples.empty()) return 0.0;
  std::size_t n = 0;
  for (const double v : samples) n += (v <= x);
  return static_cast<double>(n) / static_cast<double>(samples.size());
}

double percentile(std::vector<double> samples, double p) {
  if (samples.empty()) throw Error("percentile: empty sample set");
  std::sort(samples.begin(), samples.end());
  const double rank = p / 100.0 * static_cast<double>(samples.size());
  std::size_t k = static_cast<std::size_t>(std::ceil(rank));
  if (k < 1) k = 1;
  if (k > samples.size()) k = samples.size();
  return samples[k - 1];
}

CalibrationResult calibrate(const SensorModel& sensor,
                            const std::vector<CalibrationScene>& valid_scenes,
                            const std::vector<CalibrationScene>& spoofed_scenes,
                            const CarloConfig& base_config) {
  if (valid_scenes.empty() || spoofed_scenes.empty()) {
    throw Error("calibrate: both scene sets must be nonempty");
  }

  CalibrationResult result;
  result.config = base_config;

  auto measure = [&](const std::vector<CalibrationScene>& scenes,
                     std::vector<double>& f_out, std::vector<double>& g_out,
                     int& skipped) {
    for (const CalibrationScene& scene : scenes) {
      Frustum frustum;
      try {
        frustum = extract_frustum(sensor, scene.cloud, scene.box);
      } catch (const EmptyFrustumError&) {
        ++skipped;
        continue;
      }
      f_out.push_back(fsd_ratio(sensor, frustum, base_config));
      try {
        g_out.push_back(lpd_ratio(frustum));
      } catch (const EmptyEvidenceError&) {
        // g is undefined without returns; the scene still contributes to f.
      }
    }
  };
  measure(valid_scenes, result.distributions.f_valid,
          result.distributions.g_valid, result.skipped_valid);
  measure(spoofed_scenes, result.distributions.f_spoofed,
          result.distributions.g_spoofed, result.skipped_spoofed);

  if (result.distributions.f_valid.empty() ||
      result.distributions.f_spoofed.empty()) {
    throw Error("calibrate: a scene set produced no usable frustums");
  }

  result.b = percentile(result.distributions.f_valid, 99.5);
  result.a = percentile(result.distributions.f_spoofed, 0.5);
  result.b_prime = percentile(result.distributions.g_valid, 99.5);
  result.a_prime = percentile(result.distributions.g_spoofed, 0.5);

  if (result.a <= result.b) {
    throw NonSeparableError(
        "calibrate: f distributions are not separable (a = " +
        std::to_string(result.a) + " <= b = " + std::to_string(result.b) +
        ")");
  }
  result.fsd_separated = true;
  result.lpd_overlapped = result.a_prime < result.b_prime;

  result.config.fsd_threshold = (result.a + result.b) / 2.0;
  result.config.lpd_low =
      std::clamp(result.a_prime - base_config.epsilon, 0.0, 1.0);
  result.config.lpd_high =
      std::clamp(result.b_prime + base_config.epsilon, 0.0, 1.0);
  if (result.config.lpd_low > result.config.lpd_high) {
    // Non-overlapping g distributions: the uncertain band is empty, so the
    // two thresholds collapse to the midpoint and LPD decides everything.
    const double mid = (result.config.lpd_low + result.config.lpd_high) / 2.0;
    result.config.lpd_low = mid;
    result.config.lpd_high = mid;
  }
  return result;
}

void save_carlo_profile(const std::string& path,
                        const CalibrationResult& result,
                        std::uint64_t valid_hash, std::uint64_t spoofed_hash) {
  nlohmann::json j;
  j["cell_size"] = result.config.cell_size;
  j["epsilon"] = result.config.epsilon;
  j["fsd_threshold"] = result.config.fsd_threshold;
  j["lpd_low"] = result.config.lpd_low;
  j["lpd_high"] = result.config.lpd_high;
  j["a"] = result.a;
  j["b"] = result.b;
  j["a_prime"] = result.a_prime;
  j["b_prime"] = result.b_prime;
  j["percentiles"] = {0.5, 99.5};
  j["fsd_separated"] = result.fsd_separated;
  j["lpd_overlapped"] = result.lpd_overlapped;
  j["valid_set_hash"] = valid_hash;
  j["spoofed_set_hash"] = spoofed_hash;
  write_text_file(path, j.dump(2) + "\n");
}

CarloConfig load_carlo_profile(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
    CarloConfig config;
    config.cell_size = j.at("cell_size").get<double>();
    config.epsilon = j.at("epsilon").get<double>();
    config.fsd_threshold = j.at("fsd_threshold").get<double>();
    config.lpd_low = j.at("lpd_low").get<double>();
    config.lpd_high = j.at("lpd_high").get<double>();
    if (!(config.cell_size > 0.0) || config.lpd_low < 0.0 ||
        config.lpd_high > 1.0 || config.lpd_low > config.lpd_high ||
        !(config.fsd_threshold > 0.0 && config.fsd_threshold < 1.0)) {
      throw Error("load_carlo_profile: invalid thresholds in " + path);
    }
    return config;
  } catch (const nlohmann::json::exception& e) {
    throw Error("load_carlo_profile: malformed profile " + path + ": " +
                e.what());
  }
}

}  // namespace spoofbench
