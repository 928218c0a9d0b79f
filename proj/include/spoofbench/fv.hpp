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

#include <string>
#include <utility>
#include <vector>

#include "spoofbench/sensor_model.hpp"
#include "spoofbench/types.hpp"

namespace spoofbench {

class RasterMismatchError : public Error {
 public:
  using Error::Error;
};

// Angular lattice of the front-view (range-image) projection. Pixel (0, 0)
// sits at the configured minimum elevation and azimuth.
struct FvConfig {
  double azimuth_step_deg = 0.2;    // delta-theta
  double elevation_step_deg = 0.4;  // delta-phi
  double azimuth_min_deg = -180.0;
  double azimuth_max_deg = 180.0;
  double elevation_min_deg = -24.9;
  double elevation_max_deg = 2.0;

  int rows() const;
  int cols() const;

  /// Lattice matching a sensor's channel span and azimuth step. The
  /// elevation step is the mean channel spacing.
  static FvConfig from_sensor(const SensorModel& sensor);
};

/// Front-view pixel of a point: floor-divided azimuth/elevation shifted so
/// the configured minimum angles map to index 0. The result can fall outside
/// [0, rows) x [0, cols); image building discards those points.
std::pair<int, int> fv_project(const Vec3& p, const FvConfig& config);

// Range image: per-pixel nearest range, the intensity of that nearest
// return, and the occupancy count.
struct FvImage {
  FvConfig config;
  int rows = 0;
  int cols = 0;
  std::vector<double> range;      // min over points; +inf when unoccupied
  std::vector<double> intensity;  // of the nearest return
  std::vector<int> count;

  std::size_t index(int r, int c) const {
    return static_cast<std::size_t>(r) * cols + c;
  }
  bool occupied(int r, int c) const { return count[index(r, c)] > 0; }
  std::size_t occupied_count() const;
  std::size_t total_count() const;
};

/// Bins every in-span point by fv_project; per-pixel range keeps the
/// minimum. Points outside the configured span are discarded.
FvImage build_fv_image(const PointCloud& cloud, const FvConfig& config);

/// 1 - (largest 8-connected component / occupied pixels): 0 for a fully
/// clustered blob, approaching 1 for fully scattered pixels. Throws Error on
/// an empty pixel set.
double scatter_score(const std::vector<std::pair<int, int>>& pixels);

/// Occupied pixels of a cloud under `config` (helper for scatter scoring).
std::vector<std::pair<int, int>> occupied_pixels(const PointCloud& cloud,
                                                 const FvConfig& config);

struct ScoreRaster {
  int rows = 0;
  int cols = 0;
  std::vector<double> scores;
};

struct ScoredCloud {
  PointCloud cloud;
  std::vector<double> scores;  // parallel to cloud.points
};

/// Attaches each point the score of its front-view pixel; geometry is
/// untouched and out-of-span points score 0. Throws RasterMismatchError when
/// the raster does not match the config lattice.
ScoredCloud augment_with_scores(const PointCloud& cloud,
                                const ScoreRaster& raster,
                                const FvConfig& config);

/// CSV raster of per-pixel ranges (empty pixels blank), row 0 first.
void write_fv_csv(const std::string& path, const FvImage& image);

/// Binary PGM (P5) of ranges normalized to [0, 255]; unoccupied pixels map
/// to 0 and nearer returns are brighter. Row 0 (minimum elevation) is at the
/// bottom of the image.
void write_fv_pgm(const std::string& path, const FvImage& image);

/// Reads a score raster CSV (rows of comma-separated scores, row 0 first).
ScoreRaster read_score_raster_csv(const std::string& text);

}  // namespace spoofbench
