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

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace spoofbench::oracles {

RayId brute_force_nearest_ray(const SensorModel& sensor, const Vec3& p) {
  const Vec3 dir = (p - sensor.origin()).normalized();
  double best = std::numeric_limits<double>::infinity();
  RayId best_id{0, 0};
  for (int ch = 0; ch < sensor.channel_count(); ++ch) {
    for (int az = 0; az < sensor.azimuth_count(); ++az) {
      const RayId id{ch, az};
      const double d = angular_distance(dir, sensor.ray_direction(id));
      if (d < best - 1e-12) {
        best = d;
        best_id = id;
      }
    }
  }
  return best_id;
}

bool halfspace_point_in_box(const Vec3& p, const Box3D& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const Vec3 axes[3] = {Vec3(c, s, 0.0), Vec3(-s, c, 0.0), Vec3(0.0, 0.0, 1.0)};
  for (int i = 0; i < 3; ++i) {
    const double half = box.dims[i] / 2.0;
    const double proj = axes[i].dot(p - box.center);
    if (proj > half || proj < -half) return false;
  }
  return true;
}

SampledRayBox sampled_ray_box(const Vec3& origin, const Vec3& dir,
                              const Box3D& box, double max_range,
                              double step_m) {
  SampledRayBox result;
  for (double t = 0.0; t <= max_range; t += step_m) {
    if (halfspace_point_in_box(origin + t * dir, box)) {
      if (!result.hit) {
        result.hit = true;
        result.t_first = t;
      }
      result.t_last = t;
    }
  }
  return result;
}

std::optional<double> plane_barycentric_triangle(const Vec3& origin,
                                                 const Vec3& dir, const Vec3& a,
                                                 const Vec3& b,
                                                 const Vec3& c) {
  const Vec3 n = (b - a).cross(c - a);
  const double denom = n.dot(dir);
  if (denom == 0.0) return std::nullopt;
  const double t = n.dot(a - origin) / denom;
  if (t <= 0.0) return std::nullopt;
  const Vec3 q = origin + t * dir;
  // Signed sub-areas against the face normal; all same-signed (or zero)
  // means q is inside or on an edge.
  const double w0 = n.dot((b - q).cross(c - q));
  const double w1 = n.dot((c - q).cross(a - q));
  const double w2 = n.dot((a - q).cross(b - q));
  const double total = n.squaredNorm();
  if (w0 < -1e-12 * total || w1 < -1e-12 * total || w2 < -1e-12 * total) {
    return std::nullopt;
  }
  return t;
}

std::set<CellIndex> sampled_traversal_cells(const VoxelGrid& grid,
                                            const Vec3& start,
                                            const Vec3& end) {
  std::set<CellIndex> candidates;
  const double seg_len = (end - start).norm();
  const double step = grid.cell_size() / 100.0;
  const int n = seg_len == 0.0 ? 1 : static_cast<int>(seg_len / step) + 1;
  const Vec3 lo = grid.min_corner();
  const Vec3 hi = grid.max_corner();
  for (int i = 0; i <= n; ++i) {
    const double t = std::min(1.0, static_cast<double>(i) / n);
    const Vec3 p = start + t * (end - start);
    if ((p.array() < lo.array()).any() || (p.array() > hi.array()).any()) {
      continue;
    }
    candidates.insert(grid.cell_of(p));
  }
  std::set<CellIndex> kept;
  for (const CellIndex& c : candidates) {
    if (exact_cell_clip(grid, c, start, end).length > 1e-9) kept.insert(c);
  }
  return kept;
}

CellClip exact_cell_clip(const VoxelGrid& grid, const CellIndex& cell,
                         const Vec3& start, const Vec3& end) {
  CellClip result;
  const Vec3 lo = grid.min_corner() +
                  grid.cell_size() * Vec3(cell.x, cell.y, cell.z);
  const Vec3 hi = lo + Vec3::Constant(grid.cell_size());
  double t0 = 0.0, t1 = 1.0;
  const Vec3 d = end - start;
  for (int i = 0; i < 3; ++i) {
    if (d[i] == 0.0) {
      if (start[i] < lo[i] || start[i] > hi[i]) return result;
      continue;
    }
    double ta = (lo[i] - start[i]) / d[i];
    double tb = (hi[i] - start[i]) / d[i];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return result;
  }
  result.length = (t1 - t0) * d.norm();
  const Vec3 mid = start + 0.5 * (t0 + t1) * d;
  for (int i = 0; i < 3; ++i) {
    const double tol = 1e-12 * std::max(1.0, std::abs(mid[i]));
    if (std::abs(mid[i] - lo[i]) <= tol || std::abs(mid[i] - hi[i]) <= tol) {
      result.boundary_only = true;
    }
  }
  return result;
}

bool traversal_mismatch_is_degenerate(const VoxelGrid& grid,
                                      const CellIndex& cell, const Vec3& start,
                                      const Vec3& end) {
  const CellClip clip = exact_cell_clip(grid, cell, start, end);
  if (clip.length <= 1e-9 || clip.boundary_only) return true;
  // Near-corner clips shorter than the sampling step sit below the oracle's
  // resolution; the traversal legitimately sees them while sampling cannot.
  return clip.length <= grid.cell_size() / 100.0;
}

double raster_iou3d(const Box3D& a, const Box3D& b, double cell_m) {
  const double z_overlap =
      std::min(a.top(), b.top()) - std::max(a.bottom(), b.bottom());
  if (z_overlap <= 0.0) return 0.0;

  auto bev_aabb = [](const Box3D& box, double& x0, double& x1, double& y0,
                     double& y1) {
    const double c = std::abs(std::cos(box.yaw));
    const double s = std::abs(std::sin(box.yaw));
    const double ex = c * box.dims.x() / 2.0 + s * box.dims.y() / 2.0;
    const double ey = s * box.dims.x() / 2.0 + c * box.dims.y() / 2.0;
    x0 = box.center.x() - ex;
    x1 = box.center.x() + ex;
    y0 = box.center.y() - ey;
    y1 = box.center.y() + ey;
  };
  double ax0, ax1, ay0, ay1, bx0, bx1, by0, by1;
  bev_aabb(a, ax0, ax1, ay0, ay1);
  bev_aabb(b, bx0, bx1, by0, by1);
  const double x0 = std::max(ax0, bx0), x1 = std::min(ax1, bx1);
  const double y0 = std::max(ay0, by0), y1 = std::min(ay1, by1);
  if (x0 >= x1 || y0 >= y1) return 0.0;

  const double z_mid_a = a.center.z();
  std::size_t inside = 0;
  const int nx = static_cast<int>(std::ceil((x1 - x0) / cell_m));
  const int ny = static_cast<int>(std::ceil((y1 - y0) / cell_m));
  for (int ix = 0; ix < nx; ++ix) {
    const double x = x0 + (ix + 0.5) * cell_m;
    for (int iy = 0; iy < ny; ++iy) {
      const double y = y0 + (iy + 0.5) * cell_m;
      const Vec3 pa(x, y, z_mid_a);
      const Vec3 pb(x, y, b.center.z());
      if (halfspace_point_in_box(pa, a) && halfspace_point_in_box(pb, b)) {
        ++inside;
      }
    }
  }
  const double inter_area = static_cast<double>(inside) * cell_m * cell_m;
  const double inter = inter_area * z_overlap;
  const double uni = a.volume() + b.volume() - inter;
  return inter / uni;
}

double dense_visibility_count(const SensorModel& sensor,
                              const TriangleMesh& mesh, const Vec3& translation,
                              double yaw, int subdiv) {
  std::vector<Vec3> verts;
  verts.reserve(mesh.vertices.size());
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  for (const Vec3& v : mesh.vertices) {
    verts.emplace_back(c * v.x() - s * v.y() + translation.x(),
                       s * v.x() + c * v.y() + translation.y(),
                       v.z() + translation.z());
  }

  double az_min = 360.0, az_max = -360.0, el_min = 90.0, el_max = -90.0;
  for (const Vec3& v : verts) {
    const Spherical sph = to_spherical(v, sensor.origin());
    az_min = std::min(az_min, sph.azimuth_deg);
    az_max = std::max(az_max, sph.azimuth_deg);
    el_min = std::min(el_min, sph.elevation_deg);
    el_max = std::max(el_max, sph.elevation_deg);
  }
  az_min -= 1.0;
  az_max += 1.0;
  el_min -= 3.0;
  el_max += 3.0;

  double total = 0.0;
  const double weight = 1.0 / (subdiv * subdiv);
  for (int ch = 0; ch < sensor.channel_count(); ++ch) {
    const double el = sensor.elevation_of(ch);
    if (el < el_min || el > el_max) continue;
    for (int az = 0; az < sensor.azimuth_count(); ++az) {
      const double az_deg = wrap_deg(sensor.azimuth_of(az));
      if (az_deg < az_min || az_deg > az_max) continue;
      for (int i = 0; i < subdiv; ++i) {
        for (int j = 0; j < subdiv; ++j) {
          const double a = az_deg + (i + 0.5) / subdiv * sensor.azimuth_step_deg() -
                           sensor.azimuth_step_deg() / 2.0;
          // Sub-sampling in elevation uses the local channel spacing.
          double gap = 0.5;
          if (ch + 1 < sensor.channel_count()) {
            gap = sensor.elevation_of(ch + 1) - el;
          } else if (ch > 0) {
            gap = el - sensor.elevation_of(ch - 1);
          }
          const double e = el + (j + 0.5) / subdiv * gap - gap / 2.0;
          const Vec3 dir = from_spherical(1.0, a, e) - Vec3::Zero();
          double best = std::numeric_limits<double>::infinity();
          for (const auto& tri : mesh.triangles) {
            const auto t = plane_barycentric_triangle(
                sensor.origin(), dir, verts[tri[0]], verts[tri[1]],
                verts[tri[2]]);
            if (t && *t < best) best = *t;
          }
          if (std::isfinite(best) && best <= sensor.max_range_m()) {
            total += weight;
          }
        }
      }
    }
  }
  return total;
}

namespace {

struct ThresholdEval {
  double precision = 0.0;
  double recall = 0.0;
};

ThresholdEval evaluate_at_threshold(const std::vector<Detection>& detections,
                                    const std::vector<GroundTruthBox>& gt,
                                    double iou_threshold, double t) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    if (detections[i].score >= t) kept.push_back(i);
  }
  std::stable_sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].score > detections[b].score;
  });
  std::vector<bool> used(gt.size(), false);
  std::size_t tp = 0;
  for (const std::size_t i : kept) {
    double best_iou = 0.0;
    std::size_t best = 0;
    bool found = false;
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (used[g] || gt[g].frame_id != detections[i].frame_id) continue;
      const double iou = iou3d(detections[i].box, gt[g].box);
      if (iou >= iou_threshold && iou > best_iou) {
        best_iou = iou;
        best = g;
        found = true;
      }
    }
    if (found) {
      used[best] = true;
      ++tp;
    }
  }
  ThresholdEval eval;
  if (!kept.empty()) {
    eval.precision = static_cast<double>(tp) / static_cast<double>(kept.size());
  }
  eval.recall = gt.empty() ? 0.0
                           : static_cast<double>(tp) / static_cast<double>(gt.size());
  return eval;
}

std::vector<double> candidate_thresholds(const std::vector<Detection>& dets) {
  std::vector<double> scores;
  scores.reserve(dets.size());
  for (const auto& d : dets) scores.push_back(d.score);
  std::sort(scores.begin(), scores.end(), std::greater<double>());
  scores.erase(std::unique(scores.begin(), scores.end()), scores.end());
  return scores;
}

}  // namespace

double brute_force_average_precision(const std::vector<Detection>& detections,
                                     const std::vector<GroundTruthBox>& gt,
                                     double iou_threshold) {
  if (detections.empty()) return 0.0;

  // Every operating point is a prefix of the score-ordered detection list;
  // each prefix is re-matched from scratch.
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].score > detections[b].score;
  });

  std::vector<ThresholdEval> evals;
  for (std::size_t len = 1; len <= order.size(); ++len) {
    std::vector<bool> used(gt.size(), false);
    std::size_t tp = 0;
    for (std::size_t k = 0; k < len; ++k) {
      const Detection& det = detections[order[k]];
      double best_iou = 0.0;
      std::size_t best = 0;
      bool found = false;
      for (std::size_t g = 0; g < gt.size(); ++g) {
        if (used[g] || gt[g].frame_id != det.frame_id) continue;
        const double iou = iou3d(det.box, gt[g].box);
        if (iou >= iou_threshold && iou > best_iou) {
          best_iou = iou;
          best = g;
          found = true;
        }
      }
      if (found) {
        used[best] = true;
        ++tp;
      }
    }
    ThresholdEval eval;
    eval.precision = static_cast<double>(tp) / static_cast<double>(len);
    eval.recall = static_cast<double>(tp) / static_cast<double>(gt.size());
    evals.push_back(eval);
  }

  double sum = 0.0;
  for (int i = 0; i <= 10; ++i) {
    const double r = i / 10.0;
    double best = 0.0;
    for (const ThresholdEval& eval : evals) {
      if (eval.recall >= r - 1e-12) best = std::max(best, eval.precision);
    }
    sum += best;
  }
  return sum / 11.0;
}

double brute_force_a2sr(const A2srInput& input) {
  const auto thresholds = candidate_thresholds(input.gt_detections);
  const double n_attacks = static_cast<double>(input.attack_scores.size());
  double sum = 0.0;
  for (int i = 0; i <= 10; ++i) {
    const double r = i / 10.0;
    std::optional<double> t_r;
    for (const double t : thresholds) {  // descending
      const ThresholdEval eval = evaluate_at_threshold(
          input.gt_detections, input.ground_truth, input.iou_threshold, t);
      if (eval.recall >= r - 1e-12) {
        t_r = t;
        break;
      }
    }
    if (!t_r) continue;
    std::size_t hits = 0;
    for (const auto& s : input.attack_scores) {
      if (s && *s >= *t_r) ++hits;
    }
    sum += hits / n_attacks;
  }
  return sum / 11.0;
}

}  // namespace spoofbench::oracles
