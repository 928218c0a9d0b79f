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

#include "spoofbench/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace spoofbench {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSliverArea = 1e-12;

Vec3 to_box_frame(const Vec3& p, const Box3D& box) {
  const Vec3 d = p - box.center;
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  return {c * d.x() + s * d.y(), -s * d.x() + c * d.y(), d.z()};
}

Vec3 rotate_dir_to_box_frame(const Vec3& v, const Box3D& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  return {c * v.x() + s * v.y(), -s * v.x() + c * v.y(), v.z()};
}

using Poly = std::vector<Eigen::Vector2d>;

Poly bev_corners(const Box3D& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double hl = box.dims.x() / 2.0;
  const double hw = box.dims.y() / 2.0;
  Poly out(4);
  const double lx[4] = {+hl, -hl, -hl, +hl};
  const double ly[4] = {+hw, +hw, -hw, -hw};
  for (int i = 0; i < 4; ++i) {
    out[i] = {box.center.x() + c * lx[i] - s * ly[i],
              box.center.y() + s * lx[i] + c * ly[i]};
  }
  return out;
}

double polygon_area(const Poly& p) {
  double twice = 0.0;
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = p[i];
    const auto& b = p[(i + 1) % n];
    twice += a.x() * b.y() - b.x() * a.y();
  }
  return std::abs(twice) / 2.0;
}

// Sutherland-Hodgman clip of `subject` against the CCW convex `clipper`.
Poly clip_polygon(Poly subject, const Poly& clipper) {
  for (std::size_t i = 0; i < clipper.size() && !subject.empty(); ++i) {
    const Eigen::Vector2d a = clipper[i];
    const Eigen::Vector2d b = clipper[(i + 1) % clipper.size()];
    const Eigen::Vector2d edge = b - a;
    Poly out;
    out.reserve(subject.size() + 4);
    for (std::size_t j = 0; j < subject.size(); ++j) {
      const Eigen::Vector2d& p = subject[j];
      const Eigen::Vector2d& q = subject[(j + 1) % subject.size()];
      const double side_p = edge.x() * (p.y() - a.y()) - edge.y() * (p.x() - a.x());
      const double side_q = edge.x() * (q.y() - a.y()) - edge.y() * (q.x() - a.x());
      if (side_p >= 0.0) out.push_back(p);
      if ((side_p > 0.0 && side_q < 0.0) || (side_p < 0.0 && side_q > 0.0)) {
        const double t = side_p / (side_p - side_q);
        out.push_back(p + t * (q - p));
      }
    }
    subject = std::move(out);
  }
  return subject;
}

// Liang-Barsky clip of the segment p0 + t*(p1-p0), t in [0,1], to an AABB.
bool clip_segment_to_aabb(const Vec3& p0, const Vec3& p1, const Vec3& lo,
                          const Vec3& hi, double& t0, double& t1) {
  t0 = 0.0;
  t1 = 1.0;
  for (int i = 0; i < 3; ++i) {
    const double d = p1[i] - p0[i];
    if (d == 0.0) {
      if (p0[i] < lo[i] || p0[i] > hi[i]) return false;
      continue;
    }
    double ta = (lo[i] - p0[i]) / d;
    double tb = (hi[i] - p0[i]) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

template <typename Emit>
void traverse_cells(const VoxelGrid& grid, const Vec3& start, const Vec3& end,
                    Emit&& emit) {
  double t0 = 0.0, t1 = 0.0;
  if (!clip_segment_to_aabb(start, end, grid.min_corner(), grid.max_corner(),
                            t0, t1)) {
    return;
  }
  const Vec3 seg = end - start;
  const Vec3 sp = start + t0 * seg;
  const Vec3 ep = start + t1 * seg;

  // Everything below runs in grid units (cell size 1).
  const double h = grid.cell_size();
  const Vec3 a = (sp - grid.min_corner()) / h;
  const Vec3 b = (ep - grid.min_corner()) / h;
  const Vec3 d = b - a;

  CellIndex cur = grid.cell_of(sp);
  const CellIndex stop = grid.cell_of(ep);

  int cell[3] = {cur.x, cur.y, cur.z};
  int step[3];
  double t_max[3];
  double t_delta[3];
  for (int i = 0; i < 3; ++i) {
    if (d[i] > 0.0) {
      step[i] = 1;
      t_max[i] = (static_cast<double>(cell[i]) + 1.0 - a[i]) / d[i];
      t_delta[i] = 1.0 / d[i];
    } else if (d[i] < 0.0) {
      step[i] = -1;
      t_max[i] = (static_cast<double>(cell[i]) - a[i]) / d[i];
      t_delta[i] = -1.0 / d[i];
    } else {
      step[i] = 0;
      t_max[i] = kInf;
      t_delta[i] = kInf;
    }
  }

  emit(cur);
  const auto& dims = grid.dims();
  int guard = 4 * (dims[0] + dims[1] + dims[2]) + 8;
  while (!(cur == stop) && guard-- > 0) {
    int axis = 0;
    for (int i = 1; i < 3; ++i) {
      if (t_max[i] < t_max[axis]) {
        axis = i;
      } else if (t_max[i] == t_max[axis] &&
                 std::abs(d[i]) > std::abs(d[axis])) {
        // Exact corner crossing: resolve toward the dominant axis.
        axis = i;
      }
    }
    if (t_max[axis] > 1.0 + 1e-12) break;
    cell[axis] += step[axis];
    cur = {cell[0], cell[1], cell[2]};
    if (!grid.in_bounds(cur)) return;
    t_max[axis] += t_delta[axis];
    emit(cur);
  }
  if (!(cur == stop) && grid.in_bounds(stop)) {
    // Floating-point residue at the clipped end; the stop cell is adjacent.
    emit(stop);
  }
}

}  // namespace

bool point_in_box(const Vec3& p, const Box3D& box) {
  // Closed box; the tolerance absorbs rotation round-off so exact boundary
  // points stay inside.
  constexpr double kBoundaryTol = 1e-9;
  const Vec3 local = to_box_frame(p, box);
  return std::abs(local.x()) <= box.dims.x() / 2.0 + kBoundaryTol &&
         std::abs(local.y()) <= box.dims.y() / 2.0 + kBoundaryTol &&
         std::abs(local.z()) <= box.dims.z() / 2.0 + kBoundaryTol;
}

std::optional<RayInterval> ray_box_intersect(const Vec3& origin,
                                             const Vec3& dir,
                                             const Box3D& box) {
  const Vec3 o = to_box_frame(origin, box);
  const Vec3 d = rotate_dir_to_box_frame(dir, box);
  double t_enter = -kInf;
  double t_exit = kInf;
  for (int i = 0; i < 3; ++i) {
    const double half = box.dims[i] / 2.0;
    if (d[i] == 0.0) {
      // A ray lying exactly on a face plane is zero-measure contact.
      if (std::abs(o[i]) >= half) return std::nullopt;
      continue;
    }
    double ta = (-half - o[i]) / d[i];
    double tb = (half - o[i]) / d[i];
    if (ta > tb) std::swap(ta, tb);
    t_enter = std::max(t_enter, ta);
    t_exit = std::min(t_exit, tb);
  }
  if (!(t_enter < t_exit)) return std::nullopt;  // miss or grazing contact
  if (t_exit <= 0.0) return std::nullopt;        // box behind the origin
  return RayInterval{std::max(t_enter, 0.0), t_exit};
}

std::optional<double> ray_triangle_intersect(const Vec3& origin,
                                             const Vec3& dir, const Vec3& a,
                                             const Vec3& b, const Vec3& c) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 pvec = dir.cross(e2);
  const double det = e1.dot(pvec);
  if (std::abs(det) < 1e-300) return std::nullopt;  // parallel
  const double inv_det = 1.0 / det;
  const Vec3 tvec = origin - a;
  const double u = tvec.dot(pvec) * inv_det;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 qvec = tvec.cross(e1);
  const double v = dir.dot(qvec) * inv_det;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = e2.dot(qvec) * inv_det;
  if (t <= 0.0) return std::nullopt;
  return t;
}

double bev_intersection_area(const Box3D& a, const Box3D& b) {
  const Poly clipped = clip_polygon(bev_corners(a), bev_corners(b));
  if (clipped.size() < 3) return 0.0;
  const double area = polygon_area(clipped);
  return area < kSliverArea ? 0.0 : area;
}

double iou3d(const Box3D& a, const Box3D& b) {
  if (a.center == b.center && a.dims == b.dims) {
    const double dyaw = wrap_rad(a.yaw - b.yaw);
    if (dyaw == 0.0 || dyaw == kPi || dyaw == -kPi) return 1.0;
  }
  const double z_overlap =
      std::min(a.top(), b.top()) - std::max(a.bottom(), b.bottom());
  if (z_overlap <= 0.0) return 0.0;
  const double inter = bev_intersection_area(a, b) * z_overlap;
  if (inter <= 0.0) return 0.0;
  const double uni = a.volume() + b.volume() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

VoxelGrid::VoxelGrid(const Vec3& min_corner, double cell_size,
                     const std::array<int, 3>& dims)
    : min_corner_(min_corner), cell_size_(cell_size), dims_(dims) {
  if (!(cell_size_ > 0.0)) throw Error("VoxelGrid: cell size must be positive");
  if (dims_[0] <= 0 || dims_[1] <= 0 || dims_[2] <= 0) {
    throw Error("VoxelGrid: dims must be positive");
  }
  free_.assign(cell_count(), 0);
}

VoxelGrid VoxelGrid::covering(const Box3D& box, double cell_size) {
  const double c = std::abs(std::cos(box.yaw));
  const double s = std::abs(std::sin(box.yaw));
  const double hl = box.dims.x() / 2.0;
  const double hw = box.dims.y() / 2.0;
  const Vec3 ext(c * hl + s * hw, s * hl + c * hw, box.dims.z() / 2.0);
  std::array<int, 3> dims;
  for (int i = 0; i < 3; ++i) {
    dims[i] = std::max(
        1, static_cast<int>(std::ceil(2.0 * ext[i] / cell_size - 1e-12)));
  }
  return VoxelGrid(box.center - ext, cell_size, dims);
}

CellIndex VoxelGrid::cell_of(const Vec3& p) const {
  CellIndex c;
  const Vec3 g = (p - min_corner_) / cell_size_;
  c.x = std::clamp(static_cast<int>(std::floor(g.x())), 0, dims_[0] - 1);
  c.y = std::clamp(static_cast<int>(std::floor(g.y())), 0, dims_[1] - 1);
  c.z = std::clamp(static_cast<int>(std::floor(g.z())), 0, dims_[2] - 1);
  return c;
}

std::size_t VoxelGrid::free_count() const {
  std::size_t n = 0;
  for (const auto v : free_) n += v;
  return n;
}

void VoxelGrid::mark_segment_free(const Vec3& start, const Vec3& end) {
  traverse_cells(*this, start, end,
                 [this](const CellIndex& c) { free_[linear(c)] = 1; });
}

std::vector<CellIndex> bresenham3d(const VoxelGrid& grid, const Vec3& start,
                                   const Vec3& end) {
  std::vector<CellIndex> out;
  traverse_cells(grid, start, end,
                 [&out](const CellIndex& c) { out.push_back(c); });
  return out;
}

std::size_t Frustum::return_count() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.hit.has_value();
  return n;
}

std::optional<LatticeWindow> lattice_window(const SensorModel& sensor,
                                            const Box3D& box) {
  const auto& elevations = sensor.elevations_deg();
  const int channels = sensor.channel_count();
  LatticeWindow w;

  if (point_in_box(sensor.origin(), box)) {
    w.channel_begin = 0;
    w.channel_end = channels;
    w.azimuth_begin = 0;
    w.azimuth_steps = sensor.azimuth_count();
    return w;
  }

  // Angular bounds of the eight corners as seen from the origin.
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  double el_min = kInf, el_max = -kInf;
  std::array<double, 8> azimuths;
  int k = 0;
  for (int ix = -1; ix <= 1; ix += 2) {
    for (int iy = -1; iy <= 1; iy += 2) {
      for (int iz = -1; iz <= 1; iz += 2) {
        const double lx = ix * box.dims.x() / 2.0;
        const double ly = iy * box.dims.y() / 2.0;
        const Vec3 corner(box.center.x() + c * lx - s * ly,
                          box.center.y() + s * lx + c * ly,
                          box.center.z() + iz * box.dims.z() / 2.0);
        const Spherical sph = to_spherical(corner, sensor.origin());
        el_min = std::min(el_min, sph.elevation_deg);
        el_max = std::max(el_max, sph.elevation_deg);
        azimuths[k++] = sph.azimuth_deg;
      }
    }
  }

  double az_min = *std::min_element(azimuths.begin(), azimuths.end());
  double az_max = *std::max_element(azimuths.begin(), azimuths.end());
  if (az_max - az_min > 180.0) {
    // The box straddles the +-180 branch cut; redo the bounds in [0, 360).
    az_min = kInf;
    az_max = -kInf;
    for (double az : azimuths) {
      const double shifted = az < 0.0 ? az + 360.0 : az;
      az_min = std::min(az_min, shifted);
      az_max = std::max(az_max, shifted);
    }
  }

  // One-channel margin so nearest-ray bucketing at the rim is covered.
  double max_gap = 1.0;
  for (int i = 1; i < channels; ++i) {
    max_gap = std::max(max_gap, elevations[i] - elevations[i - 1]);
  }
  int ch_begin = channels, ch_end = 0;
  for (int i = 0; i < channels; ++i) {
    if (elevations[i] >= el_min - max_gap && elevations[i] <= el_max + max_gap) {
      ch_begin = std::min(ch_begin, i);
      ch_end = std::max(ch_end, i + 1);
    }
  }
  if (ch_begin >= ch_end) return std::nullopt;
  w.channel_begin = ch_begin;
  w.channel_end = ch_end;

  const double step = sensor.azimuth_step_deg();
  const double start = sensor.azimuth_start_deg();
  int lo = static_cast<int>(std::floor((az_min - start) / step)) - 1;
  int hi = static_cast<int>(std::ceil((az_max - start) / step)) + 1;
  if (sensor.full_circle()) {
    const int count = sensor.azimuth_count();
    int steps = hi - lo + 1;
    if (steps >= count) {
      w.azimuth_begin = 0;
      w.azimuth_steps = count;
    } else {
      lo %= count;
      if (lo < 0) lo += count;
      w.azimuth_begin = lo;
      w.azimuth_steps = steps;
    }
  } else {
    lo = std::clamp(lo, 0, sensor.azimuth_count() - 1);
    hi = std::clamp(hi, 0, sensor.azimuth_count() - 1);
    w.azimuth_begin = lo;
    w.azimuth_steps = hi - lo + 1;
  }
  return w;
}

Frustum extract_frustum(const SensorModel& sensor, const PointCloud& cloud,
                        const Box3D& box) {
  Frustum frustum;
  frustum.box = box;

  const auto window = lattice_window(sensor, box);
  if (!window) {
    throw EmptyFrustumError("extract_frustum: box outside sensor FOV");
  }

  const int count = sensor.azimuth_count();
  std::unordered_map<std::int64_t, std::size_t> by_ray;
  for (int ch = window->channel_begin; ch < window->channel_end; ++ch) {
    for (int s = 0; s < window->azimuth_steps; ++s) {
      int az = window->azimuth_begin + s;
      if (sensor.full_circle()) az %= count;
      if (az >= count) continue;
      const RayId id{ch, az};
      const auto interval =
          ray_box_intersect(sensor.origin(), sensor.ray_direction(id), box);
      if (!interval) continue;
      by_ray.emplace(sensor.ray_key(id), frustum.entries.size());
      frustum.entries.push_back(FrustumEntry{id, *interval, {}, {}});
    }
  }
  if (frustum.entries.empty()) {
    throw EmptyFrustumError("extract_frustum: no lattice ray intersects box");
  }
  std::sort(frustum.entries.begin(), frustum.entries.end(),
            [](const FrustumEntry& a, const FrustumEntry& b) {
              return a.ray < b.ray;
            });
  by_ray.clear();
  for (std::size_t i = 0; i < frustum.entries.size(); ++i) {
    by_ray.emplace(sensor.ray_key(frustum.entries[i].ray), i);
  }

  // Attach each frustum ray's return. Points bucket to their nearest lattice
  // ray; when several land on one ray the nearest return wins (ties resolve
  // lexicographically so the result is order-independent). Only points whose
  // direction falls inside the window (plus one lattice step) can bucket to
  // a frustum ray, so everything else is skipped before the lattice search.
  const auto [fov_lo, fov_hi] = sensor.elevation_fov_deg();
  const auto& elevations = sensor.elevations_deg();
  double gap = 1.0;
  for (int i = 1; i < sensor.channel_count(); ++i) {
    gap = std::max(gap, elevations[i] - elevations[i - 1]);
  }
  const double el_lo = elevations[window->channel_begin] - gap;
  const double el_hi = elevations[window->channel_end - 1] + gap;
  const double az_begin_deg = sensor.azimuth_of(window->azimuth_begin);
  const double az_span_deg =
      (window->azimuth_steps - 1) * sensor.azimuth_step_deg();
  const double az_margin = 2.0 * sensor.azimuth_step_deg();
  const bool full_sweep = window->azimuth_steps >= sensor.azimuth_count();

  for (const Point& p : cloud.points) {
    const Vec3 pos = p.position();
    const Vec3 rel = pos - sensor.origin();
    const double range = rel.norm();
    if (range <= 0.0 || range > sensor.max_range_m()) continue;
    const double el = rad2deg(std::atan2(rel.z(), std::hypot(rel.x(), rel.y())));
    if (el < fov_lo || el > fov_hi) continue;
    if (el < el_lo || el > el_hi) continue;
    if (!full_sweep) {
      const double az = rad2deg(std::atan2(rel.y(), rel.x()));
      double offset = az - az_begin_deg;
      offset -= 360.0 * std::floor(offset / 360.0);  // [0, 360)
      if (offset > az_span_deg + az_margin && offset < 360.0 - az_margin) {
        continue;
      }
    }
    const RayId id = sensor.nearest_ray(pos);
    const auto it = by_ray.find(sensor.ray_key(id));
    if (it == by_ray.end()) continue;
    FrustumEntry& entry = frustum.entries[it->second];
    if (!entry.hit) {
      entry.hit = p;
      entry.hit_range = range;
      continue;
    }
    const Point& q = *entry.hit;
    const auto key = [](double r, const Point& pt) {
      return std::array<double, 4>{r, pt.x, pt.y, pt.z};
    };
    if (key(range, p) < key(*entry.hit_range, q)) {
      entry.hit = p;
      entry.hit_range = range;
    }
  }
  return frustum;
}

}  // namespace spoofbench
