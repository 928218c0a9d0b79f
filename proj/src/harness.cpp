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

#include "spoofbench/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "spoofbench/kitti_io.hpp"
#include "spoofbench/rng.hpp"

namespace spoofbench {

namespace {

std::int64_t bev_key(int x, int y) {
  return (static_cast<std::int64_t>(x) << 32) ^ static_cast<std::uint32_t>(y);
}

std::string fmt_g9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

std::vector<Detection> proxy_detect(const PointCloud& cloud,
                                    const ProxyDetectorConfig& config) {
  const double z_lo = config.ground_z + config.ground_margin_m;
  const double z_hi = z_lo + config.z_band_m;

  std::vector<std::size_t> kept;
  kept.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const double z = cloud.points[i].z;
    if (z >= z_lo && z <= z_hi) kept.push_back(i);
  }
  if (kept.empty()) return {};

  // BEV occupancy cells -> member points.
  std::unordered_map<std::int64_t, std::vector<std::size_t>> cells;
  for (const std::size_t i : kept) {
    const Point& p = cloud.points[i];
    const int cx = static_cast<int>(std::floor(p.x / config.bev_cell_m));
    const int cy = static_cast<int>(std::floor(p.y / config.bev_cell_m));
    cells[bev_key(cx, cy)].push_back(i);
  }

  // 8-connected flood fill over occupied cells.
  std::unordered_map<std::int64_t, int> component;
  int n_components = 0;
  std::vector<std::int64_t> stack;
  for (const auto& [key, members] : cells) {
    if (component.count(key)) continue;
    const int id = n_components++;
    stack.push_back(key);
    component[key] = id;
    while (!stack.empty()) {
      const std::int64_t cur = stack.back();
      stack.pop_back();
      const int cx = static_cast<int>(cur >> 32);
      const int cy = static_cast<int>(static_cast<std::uint32_t>(cur));
      for (int dx = -1; dx <= 1; ++dx) {
        for (int dy = -1; dy <= 1; ++dy) {
          if (dx == 0 && dy == 0) continue;
          const std::int64_t nb = bev_key(cx + dx, cy + dy);
          if (cells.count(nb) && !component.count(nb)) {
            component[nb] = id;
            stack.push_back(nb);
          }
        }
      }
    }
  }

  std::vector<std::vector<std::size_t>> clusters(n_components);
  for (const auto& [key, members] : cells) {
    auto& cluster = clusters[component[key]];
    cluster.insert(cluster.end(), members.begin(), members.end());
  }

  std::vector<Detection> detections;
  for (auto& cluster : clusters) {
    if (static_cast<int>(cluster.size()) < config.min_points) continue;
    std::sort(cluster.begin(), cluster.end());

    double mx = 0.0, my = 0.0;
    for (const std::size_t i : cluster) {
      mx += cloud.points[i].x;
      my += cloud.points[i].y;
    }
    mx /= cluster.size();
    my /= cluster.size();

    // PCA yaw from the BEV covariance; the principal axis is the box length.
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const std::size_t i : cluster) {
      const double dx = cloud.points[i].x - mx;
      const double dy = cloud.points[i].y - my;
      sxx += dx * dx;
      sxy += dx * dy;
      syy += dy * dy;
    }
    const double yaw = 0.5 * std::atan2(2.0 * sxy, sxx - syy);

    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    double lo_u = 0.0, hi_u = 0.0, lo_v = 0.0, hi_v = 0.0, lo_z = 0.0,
           hi_z = 0.0;
    bool first = true;
    for (const std::size_t i : cluster) {
      const Point& p = cloud.points[i];
      const double u = c * (p.x - mx) + s * (p.y - my);
      const double v = -s * (p.x - mx) + c * (p.y - my);
      if (first) {
        lo_u = hi_u = u;
        lo_v = hi_v = v;
        lo_z = hi_z = p.z;
        first = false;
      } else {
        lo_u = std::min(lo_u, u);
        hi_u = std::max(hi_u, u);
        lo_v = std::min(lo_v, v);
        hi_v = std::max(hi_v, v);
        lo_z = std::min(lo_z, p.z);
        hi_z = std::max(hi_z, p.z);
      }
    }
    constexpr double kMinExtent = 0.05;
    Detection det;
    det.frame_id = cloud.frame_id;
    const double cu = (lo_u + hi_u) / 2.0;
    const double cv = (lo_v + hi_v) / 2.0;
    det.box.center = Vec3(mx + c * cu - s * cv, my + s * cu + c * cv,
                          (lo_z + hi_z) / 2.0);
    det.box.dims = Vec3(std::max(hi_u - lo_u, kMinExtent),
                        std::max(hi_v - lo_v, kMinExtent),
                        std::max(hi_z - lo_z, kMinExtent));
    det.box.yaw = wrap_rad(yaw);
    det.score = std::min(1.0, static_cast<double>(cluster.size()) / config.n_sat);
    detections.push_back(std::move(det));
  }

  std::sort(detections.begin(), detections.end(),
            [](const Detection& a, const Detection& b) {
              if (a.box.center.x() != b.box.center.x()) {
                return a.box.center.x() < b.box.center.x();
              }
              return a.box.center.y() < b.box.center.y();
            });
  return detections;
}

namespace {

bool position_match(const Detection& det, const Box3D& target,
                    const SuccessRule& rule) {
  if (rule.mode == SuccessRule::Mode::kCenterDistance) {
    const double d = std::hypot(det.box.center.x() - target.center.x(),
                                det.box.center.y() - target.center.y());
    return d <= rule.center_distance_m;
  }
  return iou3d(det.box, target) >= rule.iou_threshold;
}

}  // namespace

bool judge_success(const std::vector<Detection>& detections,
                   const Box3D& target, const SuccessRule& rule) {
  for (const Detection& det : detections) {
    if (det.score >= rule.score_threshold && position_match(det, target, rule)) {
      return true;
    }
  }
  return false;
}

std::optional<double> best_matching_score(
    const std::vector<Detection>& detections, const Box3D& target,
    const SuccessRule& rule) {
  std::optional<double> best;
  for (const Detection& det : detections) {
    if (position_match(det, target, rule)) {
      if (!best || det.score > *best) best = det.score;
    }
  }
  return best;
}

double asr(const std::vector<bool>& successes) {
  if (successes.empty()) throw Error("asr: empty result set");
  std::size_t n = 0;
  for (const bool s : successes) n += s;
  return static_cast<double>(n) / static_cast<double>(successes.size());
}

namespace {

// Greedy score-ordered matching; returns per-detection TP flags aligned with
// the score-descending order, plus that order.
struct MatchResult {
  std::vector<std::size_t> order;  // detection indices, score descending
  std::vector<bool> tp;
};

MatchResult greedy_match(const std::vector<Detection>& detections,
                         const std::vector<GroundTruthBox>& ground_truth,
                         double iou_threshold) {
  MatchResult result;
  result.order.resize(detections.size());
  std::iota(result.order.begin(), result.order.end(), 0);
  std::stable_sort(result.order.begin(), result.order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return detections[a].score > detections[b].score;
                   });

  std::unordered_map<std::string, std::vector<std::size_t>> gt_by_frame;
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    gt_by_frame[ground_truth[i].frame_id].push_back(i);
  }
  std::vector<bool> gt_used(ground_truth.size(), false);
  result.tp.assign(detections.size(), false);

  for (std::size_t k = 0; k < result.order.size(); ++k) {
    const Detection& det = detections[result.order[k]];
    const auto it = gt_by_frame.find(det.frame_id);
    if (it == gt_by_frame.end()) continue;
    double best_iou = 0.0;
    std::size_t best_gt = 0;
    bool found = false;
    for (const std::size_t gi : it->second) {
      if (gt_used[gi]) continue;
      const double iou = iou3d(det.box, ground_truth[gi].box);
      if (iou >= iou_threshold && iou > best_iou) {
        best_iou = iou;
        best_gt = gi;
        found = true;
      }
    }
    if (found) {
      gt_used[best_gt] = true;
      result.tp[k] = true;
    }
  }
  return result;
}

}  // namespace

double average_precision(const std::vector<Detection>& detections,
                         const std::vector<GroundTruthBox>& ground_truth,
                         double iou_threshold) {
  if (ground_truth.empty()) {
    throw Error("average_precision: no ground truth");
  }
  if (detections.empty()) return 0.0;

  const MatchResult match = greedy_match(detections, ground_truth, iou_threshold);
  const double n_gt = static_cast<double>(ground_truth.size());

  std::vector<double> precision(match.order.size());
  std::vector<double> recall(match.order.size());
  std::size_t tp = 0;
  for (std::size_t k = 0; k < match.order.size(); ++k) {
    tp += match.tp[k];
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
    recall[k] = static_cast<double>(tp) / n_gt;
  }

  double sum = 0.0;
  for (int i = 0; i <= 10; ++i) {
    const double r = i / 10.0;
    double best = 0.0;
    for (std::size_t k = 0; k < recall.size(); ++k) {
      if (recall[k] >= r - 1e-12) best = std::max(best, precision[k]);
    }
    sum += best;
  }
  return sum / 11.0;
}

double a2sr(const A2srInput& input) {
  if (input.ground_truth.empty()) {
    throw Error("a2sr: ground truth required to derive recall thresholds");
  }
  if (input.attack_scores.empty()) {
    throw Error("a2sr: empty attack result set");
  }

  const MatchResult match =
      greedy_match(input.gt_detections, input.ground_truth, input.iou_threshold);
  const double n_gt = static_cast<double>(input.ground_truth.size());
  const double n_attacks = static_cast<double>(input.attack_scores.size());

  // Candidate thresholds are the detector's own scores, descending; recall
  // grows as the threshold sweeps down.
  double sum = 0.0;
  for (int i = 0; i <= 10; ++i) {
    const double r = i / 10.0;
    std::optional<double> t_r;
    std::size_t tp = 0;
    for (std::size_t k = 0; k < match.order.size(); ++k) {
      tp += match.tp[k];
      // Threshold at this detection's score keeps everything seen so far.
      const double recall = static_cast<double>(tp) / n_gt;
      if (recall >= r - 1e-12) {
        t_r = input.gt_detections[match.order[k]].score;
        break;
      }
    }
    if (!t_r) continue;  // unreachable recall level: ASR contribution 0
    std::size_t hits = 0;
    for (const auto& score : input.attack_scores) {
      if (score && *score >= *t_r) ++hits;
    }
    sum += static_cast<double>(hits) / n_attacks;
  }
  return sum / 11.0;
}

double ExperimentResult::recount_asr() const {
  std::size_t total = 0, wins = 0;
  for (const CampaignPairRow& row : rows) {
    if (!row.error.empty()) continue;
    ++total;
    wins += row.success;
  }
  return total == 0 ? 0.0 : static_cast<double>(wins) / static_cast<double>(total);
}

ExperimentResult run_campaign(const SensorModel& sensor,
                              const std::vector<CampaignFrame>& frames,
                              const std::vector<AttackTrace>& traces,
                              const CampaignSettings& settings) {
  ExperimentResult result;
  const std::size_t n_pairs = frames.size() * traces.size();
  result.rows.resize(n_pairs);
  if (n_pairs == 0) return result;

  auto run_pair = [&](std::size_t pair_index) {
    const std::size_t fi = pair_index / traces.size();
    const std::size_t ti = pair_index % traces.size();
    const CampaignFrame& frame = frames[fi];
    const AttackTrace& trace = traces[ti];

    CampaignPairRow row;
    row.frame_id = frame.frame_id;
    row.trace_index = ti;

    auto gen = substream(settings.seed, pair_index);
    row.azimuth_deg = uniform_in(gen, -settings.azimuth_spread_deg,
                                 settings.azimuth_spread_deg);
    row.range_m = uniform_in(gen, settings.capability.min_range_m,
                             settings.capability.max_range_m);
    try {
      AttackTrace placed = place_front_near(trace, settings.capability,
                                            row.azimuth_deg, row.range_m);
      placed = calibrate_to_rays(sensor, placed);
      placed = prune_to_capability(placed, settings.capability);
      if (placed.empty()) throw EmptyTraceError("trace vanished in pruning");
      const InjectionReport report =
          inject(frame.cloud, sensor, placed, settings.capability);
      row.injected_points = report.injected_point_count;
      row.group = (report.injected_point_count - 1) / 10 + 1;

      std::vector<Detection> detections =
          proxy_detect(report.spoofed_cloud, settings.proxy);
      if (settings.defense) {
        const auto verdicts = carlo_batch(sensor, report.spoofed_cloud,
                                          detections, *settings.defense);
        std::vector<Detection> surviving;
        for (std::size_t i = 0; i < detections.size(); ++i) {
          const bool spoofed = verdicts[i].verdict &&
                               verdicts[i].verdict->label ==
                                   VerdictLabel::kSpoofed;
          if (spoofed &&
              position_match(detections[i], report.target_box, settings.rule)) {
            row.defense_removed = true;
          }
          if (!spoofed) surviving.push_back(detections[i]);
        }
        detections = std::move(surviving);
      }
      row.success = judge_success(detections, report.target_box, settings.rule);
      row.best_score =
          best_matching_score(detections, report.target_box, settings.rule);
    } catch (const Error& e) {
      row.error = e.what();
    }
    result.rows[pair_index] = std::move(row);
  };

  const int jobs = std::max(1, settings.jobs);
  if (jobs == 1) {
    for (std::size_t i = 0; i < n_pairs; ++i) run_pair(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < n_pairs;
             i = next.fetch_add(1)) {
          run_pair(i);
        }
      });
    }
    for (auto& t : workers) t.join();
  }

  std::map<int, std::pair<int, int>> group_counts;  // group -> (wins, total)
  for (const CampaignPairRow& row : result.rows) {
    if (!row.error.empty()) continue;
    auto& [wins, total] = group_counts[row.group];
    ++total;
    wins += row.success;
  }
  for (const auto& [group, counts] : group_counts) {
    result.group_totals[group] = counts.second;
    result.group_asr[group] =
        static_cast<double>(counts.first) / static_cast<double>(counts.second);
  }
  result.overall_asr = result.recount_asr();

  // False-spoof rate of the defense over the pristine frames' ground truth.
  if (settings.defense) {
    for (const CampaignFrame& frame : frames) {
      for (const Box3D& box : frame.valid_boxes) {
        try {
          const Verdict v =
              carlo_verdict(sensor, frame.cloud, box, *settings.defense);
          ++result.valid_box_count;
          result.valid_box_spoofed += (v.label == VerdictLabel::kSpoofed);
        } catch (const Error&) {
          // Out-of-FOV ground truth carries no evidence either way.
        }
      }
    }
    if (result.valid_box_count > 0) {
      result.false_spoof_rate =
          static_cast<double>(result.valid_box_spoofed) /
          static_cast<double>(result.valid_box_count);
    }
  }

  // Proxy AP over the pristine frames, when ground truth is present.
  std::vector<GroundTruthBox> gt;
  std::vector<Detection> gt_detections;
  for (const CampaignFrame& frame : frames) {
    for (const Box3D& box : frame.valid_boxes) {
      gt.push_back(GroundTruthBox{frame.frame_id, box});
    }
    auto dets = proxy_detect(frame.cloud, settings.proxy);
    gt_detections.insert(gt_detections.end(), dets.begin(), dets.end());
  }
  if (!gt.empty()) {
    result.ap = average_precision(gt_detections, gt, 0.5);
    A2srInput input;
    input.gt_detections = gt_detections;
    input.ground_truth = gt;
    input.iou_threshold = 0.5;
    for (const CampaignPairRow& row : result.rows) {
      if (row.error.empty()) input.attack_scores.push_back(row.best_score);
    }
    if (!input.attack_scores.empty()) result.a2sr_value = a2sr(input);
  }
  return result;
}

std::vector<double> score_error_experiment(
    const SensorModel& sensor, const std::vector<ScoreErrorScene>& scenes,
    const AttackCapability& capability, const ProxyDetectorConfig& proxy,
    const SuccessRule& rule, std::uint64_t seed) {
  std::vector<double> errors;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const ScoreErrorScene& scene = scenes[i];
    const auto before =
        best_matching_score(proxy_detect(scene.cloud, proxy), scene.box, rule);
    if (!before || *before <= 0.0) continue;

    auto gen = substream(seed, i);
    try {
      AttackTrace trace =
          extract_vehicle_points(scene.cloud, scene.box, 0.0, TraceKind::kOccluded);
      AttackTrace placed = place_front_near(
          trace, capability, uniform_in(gen, -3.0, 3.0),
          uniform_in(gen, capability.min_range_m, capability.max_range_m));
      placed = calibrate_to_rays(sensor, placed);

      PointCloud moved;
      moved.frame_id = scene.cloud.frame_id;
      for (const Point& p : placed.points.points) moved.points.push_back(p);

      const Vec3 centroid = [&] {
        Vec3 sum = Vec3::Zero();
        for (const Point& p : placed.points.points) sum += p.position();
        return Vec3(sum / static_cast<double>(placed.size()));
      }();
      const Box3D target = default_target_box(centroid, proxy.ground_z);
      const auto after =
          best_matching_score(proxy_detect(moved, proxy), target, rule);
      if (!after) continue;
      errors.push_back(std::abs(*after - *before) / *before);
    } catch (const Error&) {
      continue;
    }
  }
  return errors;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

void write_cdf_csv(const std::string& path, std::vector<double> samples,
                   const std::string& provenance) {
  std::sort(samples.begin(), samples.end());
  std::ostringstream out;
  out << "# " << provenance << "\n";
  out << "value,cdf\n";
  const double n = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out << fmt_g9(samples[i]) << ',' << fmt_g9((i + 1) / n) << '\n';
  }
  write_text_file(path, out.str());
}

void write_campaign_csvs(const std::string& out_dir,
                         const ExperimentResult& result,
                         const std::string& provenance) {
  std::filesystem::create_directories(out_dir);

  std::ostringstream pairs;
  pairs << "# " << provenance << "\n";
  pairs << "frame_id,trace_index,group,injected_points,azimuth_deg,range_m,"
           "success,best_score,defense_removed,error\n";
  for (const CampaignPairRow& row : result.rows) {
    pairs << row.frame_id << ',' << row.trace_index << ',' << row.group << ','
          << row.injected_points << ',' << fmt_g9(row.azimuth_deg) << ','
          << fmt_g9(row.range_m) << ',' << (row.success ? 1 : 0) << ','
          << (row.best_score ? fmt_g9(*row.best_score) : std::string()) << ','
          << (row.defense_removed ? 1 : 0) << ','
          << row.error << '\n';
  }
  write_text_file(out_dir + "/pairs.csv", pairs.str());

  std::ostringstream groups;
  groups << "# " << provenance << "\n";
  groups << "group,max_points,total,asr\n";
  for (const auto& [group, asr_value] : result.group_asr) {
    groups << group << ',' << group * 10 << ','
           << result.group_totals.at(group) << ',' << fmt_g9(asr_value)
           << '\n';
  }
  write_text_file(out_dir + "/group_asr.csv", groups.str());

  std::ostringstream summary;
  summary << "# " << provenance << "\n";
  summary << "metric,value\n";
  summary << "overall_asr," << fmt_g9(result.overall_asr) << '\n';
  summary << "false_spoof_rate," << fmt_g9(result.false_spoof_rate) << '\n';
  summary << "valid_box_count," << result.valid_box_count << '\n';
  if (result.ap) summary << "proxy_ap," << fmt_g9(*result.ap) << '\n';
  if (result.a2sr_value) summary << "a2sr," << fmt_g9(*result.a2sr_value) << '\n';
  write_text_file(out_dir + "/summary.csv", summary.str());
}

}  // namespace spoofbench
