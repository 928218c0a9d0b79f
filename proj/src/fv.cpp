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

#include "spoofbench/fv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "spoofbench/kitti_io.hpp"

namespace spoofbench {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::int64_t pixel_key(int r, int c) {
  return (static_cast<std::int64_t>(r) << 32) ^ static_cast<std::uint32_t>(c);
}

}  // namespace

int FvConfig::rows() const {
  return static_cast<int>(std::ceil(
      (elevation_max_deg - elevation_min_deg) / elevation_step_deg - 1e-9));
}

int FvConfig::cols() const {
  return static_cast<int>(
      std::ceil((azimuth_max_deg - azimuth_min_deg) / azimuth_step_deg - 1e-9));
}

FvConfig FvConfig::from_sensor(const SensorModel& sensor) {
  FvConfig config;
  config.azimuth_step_deg = sensor.azimuth_step_deg();
  config.azimuth_min_deg = sensor.azimuth_start_deg();
  config.azimuth_max_deg = sensor.azimuth_end_deg();
  const auto& el = sensor.elevations_deg();
  config.elevation_min_deg = el.front();
  if (el.size() > 1) {
    config.elevation_step_deg = (el.back() - el.front()) / (el.size() - 1);
    config.elevation_max_deg = el.back() + config.elevation_step_deg;
  } else {
    config.elevation_step_deg = 1.0;
    config.elevation_max_deg = el.front() + 1.0;
  }
  return config;
}

std::pair<int, int> fv_project(const Vec3& p, const FvConfig& config) {
  const double az = rad2deg(std::atan2(p.y(), p.x()));
  const double el = rad2deg(std::atan2(p.z(), std::hypot(p.x(), p.y())));
  const int c = static_cast<int>(
      std::floor((az - config.azimuth_min_deg) / config.azimuth_step_deg));
  const int r = static_cast<int>(
      std::floor((el - config.elevation_min_deg) / config.elevation_step_deg));
  return {r, c};
}

std::size_t FvImage::occupied_count() const {
  std::size_t n = 0;
  for (const int c : count) n += (c > 0);
  return n;
}

std::size_t FvImage::total_count() const {
  std::size_t n = 0;
  for (const int c : count) n += c;
  return n;
}

FvImage build_fv_image(const PointCloud& cloud, const FvConfig& config) {
  FvImage image;
  image.config = config;
  image.rows = config.rows();
  image.cols = config.cols();
  const std::size_t n = static_cast<std::size_t>(image.rows) * image.cols;
  image.range.assign(n, kInf);
  image.intensity.assign(n, 0.0);
  image.count.assign(n, 0);

  for (const Point& p : cloud.points) {
    if (p.x == 0.0 && p.y == 0.0 && p.z == 0.0) continue;
    const auto [r, c] = fv_project(p.position(), config);
    if (r < 0 || r >= image.rows || c < 0 || c >= image.cols) continue;
    const std::size_t i = image.index(r, c);
    ++image.count[i];
    const double range = p.position().norm();
    if (range < image.range[i]) {
      image.range[i] = range;
      image.intensity[i] = p.intensity;
    }
  }
  return image;
}

std::vector<std::pair<int, int>> occupied_pixels(const PointCloud& cloud,
                                                 const FvConfig& config) {
  std::unordered_set<std::int64_t> seen;
  std::vector<std::pair<int, int>> out;
  for (const Point& p : cloud.points) {
    if (p.x == 0.0 && p.y == 0.0 && p.z == 0.0) continue;
    const auto [r, c] = fv_project(p.position(), config);
    if (seen.insert(pixel_key(r, c)).second) out.emplace_back(r, c);
  }
  return out;
}

double scatter_score(const std::vector<std::pair<int, int>>& pixels) {
  if (pixels.empty()) throw Error("scatter_score: empty pixel set");

  std::unordered_map<std::int64_t, std::size_t> index;
  index.reserve(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    index.emplace(pixel_key(pixels[i].first, pixels[i].second), i);
  }

  // Largest 8-connected component by BFS over the sparse pixel set.
  std::vector<char> visited(pixels.size(), 0);
  std::vector<std::size_t> stack;
  std::size_t largest = 0;
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    if (visited[i]) continue;
    std::size_t size = 0;
    stack.push_back(i);
    visited[i] = 1;
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      ++size;
      const auto [r, c] = pixels[cur];
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const auto it = index.find(pixel_key(r + dr, c + dc));
          if (it != index.end() && !visited[it->second]) {
            visited[it->second] = 1;
            stack.push_back(it->second);
          }
        }
      }
    }
    largest = std::max(largest, size);
  }
  return 1.0 - static_cast<double>(largest) / static_cast<double>(pixels.size());
}

ScoredCloud augment_with_scores(const PointCloud& cloud,
                                const ScoreRaster& raster,
                                const FvConfig& config) {
  if (raster.rows != config.rows() || raster.cols != config.cols()) {
    throw RasterMismatchError(
        "augment_with_scores: raster dims do not match the FV lattice");
  }
  ScoredCloud out;
  out.cloud = cloud;
  out.scores.reserve(cloud.size());
  for (const Point& p : cloud.points) {
    double score = 0.0;
    if (!(p.x == 0.0 && p.y == 0.0 && p.z == 0.0)) {
      const auto [r, c] = fv_project(p.position(), config);
      if (r >= 0 && r < raster.rows && c >= 0 && c < raster.cols) {
        score = raster.scores[static_cast<std::size_t>(r) * raster.cols + c];
      }
    }
    out.scores.push_back(score);
  }
  return out;
}

void write_fv_csv(const std::string& path, const FvImage& image) {
  std::ostringstream out;
  out << "# rows=" << image.rows << " cols=" << image.cols
      << " azimuth_step_deg=" << image.config.azimuth_step_deg
      << " elevation_step_deg=" << image.config.elevation_step_deg << "\n";
  for (int r = 0; r < image.rows; ++r) {
    for (int c = 0; c < image.cols; ++c) {
      if (c > 0) out << ',';
      const std::size_t i = image.index(r, c);
      if (image.count[i] > 0) out << image.range[i];
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

void write_fv_pgm(const std::string& path, const FvImage& image) {
  double max_range = 0.0;
  for (std::size_t i = 0; i < image.range.size(); ++i) {
    if (image.count[i] > 0) max_range = std::max(max_range, image.range[i]);
  }
  if (max_range <= 0.0) max_range = 1.0;

  std::string out = "P5\n" + std::to_string(image.cols) + " " +
                    std::to_string(image.rows) + "\n255\n";
  out.reserve(out.size() + image.range.size());
  for (int r = image.rows - 1; r >= 0; --r) {
    for (int c = 0; c < image.cols; ++c) {
      const std::size_t i = image.index(r, c);
      unsigned char v = 0;
      if (image.count[i] > 0) {
        v = static_cast<unsigned char>(
            std::clamp(255.0 * (1.0 - image.range[i] / max_range), 1.0, 255.0));
      }
      out.push_back(static_cast<char>(v));
    }
  }
  write_text_file(path, out);
}

ScoreRaster read_score_raster_csv(const std::string& text) {
  ScoreRaster raster;
  std::istringstream iss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(iss, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string col;
    int cols = 0;
    while (std::getline(ls, col, ',')) {
      try {
        raster.scores.push_back(col.empty() ? 0.0 : std::stod(col));
      } catch (const std::exception&) {
        throw ParseError("bad score value '" + col + "'", lineno);
      }
      ++cols;
    }
    if (raster.cols == 0) {
      raster.cols = cols;
    } else if (cols != raster.cols) {
      throw ParseError("ragged score raster row", lineno);
    }
    ++raster.rows;
  }
  return raster;
}

}  // namespace spoofbench
