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

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "spoofbench/sensor_model.hpp"
#include "spoofbench/types.hpp"

namespace spoofbench {

class EmptyFrustumError : public Error {
 public:
  using Error::Error;
};

/// True iff `p` lies inside `box` (boundary counts as inside).
bool point_in_box(const Vec3& p, const Box3D& box);

struct RayInterval {
  double t_enter = 0.0;
  double t_exit = 0.0;
};

/// Slab test in the box's yaw-aligned local frame. `dir` must be unit
/// length. Returns the parametric interval clamped to t >= 0, or nullopt for
/// misses; grazing (zero-measure) contact counts as a miss.
std::optional<RayInterval> ray_box_intersect(const Vec3& origin,
                                             const Vec3& dir,
                                             const Box3D& box);

/// Moeller-Trumbore test; returns the smallest positive t or nullopt. Edge
/// and vertex hits count as hits.
std::optional<double> ray_triangle_intersect(const Vec3& origin,
                                             const Vec3& dir, const Vec3& a,
                                             const Vec3& b, const Vec3& c);

/// BEV intersection-over-union of yaw-rotated boxes times vertical overlap.
/// Symmetric, in [0, 1], and exactly 1 for boxes identical up to a yaw flip
/// of pi (which describes the same solid).
double iou3d(const Box3D& a, const Box3D& b);

/// Area of the BEV intersection polygon of two boxes (Sutherland-Hodgman
/// clipping; slivers below 1e-12 m^2 snap to zero).
double bev_intersection_area(const Box3D& a, const Box3D& b);

struct CellIndex {
  int x = 0;
  int y = 0;
  int z = 0;

  bool operator==(const CellIndex&) const = default;
  bool operator<(const CellIndex& o) const {
    if (x != o.x) return x < o.x;
    if (y != o.y) return y < o.y;
    return z < o.z;
  }
};

// Axis-aligned lattice of cubic cells. Cells hold the free/occluded state
// used by free-space scoring; everything starts Occluded and traversal marks
// cells Free. Mutation is confined to whoever owns the grid.
class VoxelGrid {
 public:
  VoxelGrid(const Vec3& min_corner, double cell_size,
            const std::array<int, 3>& dims);

  /// Smallest grid of `cell_size` cells covering the world-space AABB of
  /// `box`.
  static VoxelGrid covering(const Box3D& box, double cell_size);

  const Vec3& min_corner() const { return min_corner_; }
  double cell_size() const { return cell_size_; }
  const std::array<int, 3>& dims() const { return dims_; }
  std::size_t cell_count() const {
    return static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
  }

  Vec3 max_corner() const {
    return min_corner_ + cell_size_ * Vec3(dims_[0], dims_[1], dims_[2]);
  }

  bool in_bounds(const CellIndex& c) const {
    return c.x >= 0 && c.x < dims_[0] && c.y >= 0 && c.y < dims_[1] &&
           c.z >= 0 && c.z < dims_[2];
  }

  Vec3 cell_center(const CellIndex& c) const {
    return min_corner_ + cell_size_ * Vec3(c.x + 0.5, c.y + 0.5, c.z + 0.5);
  }

  /// Cell containing `p`; points on the max boundary clamp to the last cell.
  CellIndex cell_of(const Vec3& p) const;

  bool is_free(const CellIndex& c) const { return free_[linear(c)] != 0; }
  void mark_free(const CellIndex& c) { free_[linear(c)] = 1; }
  std::size_t free_count() const;

  /// Marks every cell traversed by the segment as Free (the segment is
  /// clipped to the grid bounds first).
  void mark_segment_free(const Vec3& start, const Vec3& end);

 private:
  std::size_t linear(const CellIndex& c) const {
    return (static_cast<std::size_t>(c.z) * dims_[1] + c.y) * dims_[0] + c.x;
  }

  Vec3 min_corner_;
  double cell_size_;
  std::array<int, 3> dims_;
  std::vector<std::uint8_t> free_;
};

/// Exact voxel traversal of the segment [start, end], clipped to the grid
/// bounds. Returns the visited cells in traversal order; the set always
/// contains the cells of the (clipped) endpoints and consecutive cells
/// differ by one step along one axis. Corner crossings resolve toward the
/// dominant direction axis.
std::vector<CellIndex> bresenham3d(const VoxelGrid& grid, const Vec3& start,
                                   const Vec3& end);

struct FrustumEntry {
  RayId ray;
  RayInterval box_interval;          // where the ray crosses the box
  std::optional<Point> hit;          // the cloud's return on this ray
  std::optional<double> hit_range;   // distance from the sensor origin
};

// All lattice rays that geometrically intersect a box, with the cloud's
// return on each ray (if any within max range). Entries are ordered by
// (channel, azimuth_index).
struct Frustum {
  Box3D box;
  std::vector<FrustumEntry> entries;

  std::size_t return_count() const;
};

/// Enumerates every lattice ray intersecting `box` and attaches the cloud's
/// return on that ray (points bucket to their nearest ray; the closest point
/// wins when several share one). Throws EmptyFrustumError when no lattice
/// ray intersects the box.
Frustum extract_frustum(const SensorModel& sensor, const PointCloud& cloud,
                        const Box3D& box);

/// The (channel, azimuth index) ranges of lattice rays that can intersect
/// `box`, expanded by one step on each side. The azimuth range may wrap:
/// iterate count steps starting at `azimuth_begin`. Returns nullopt when the
/// box is entirely outside the vertical FOV.
struct LatticeWindow {
  int channel_begin = 0;
  int channel_end = 0;  // exclusive
  int azimuth_begin = 0;
  int azimuth_steps = 0;
};
std::optional<LatticeWindow> lattice_window(const SensorModel& sensor,
                                            const Box3D& box);

}  // namespace spoofbench
