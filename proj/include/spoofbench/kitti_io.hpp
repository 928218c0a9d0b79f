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

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

#include "spoofbench/types.hpp"

namespace spoofbench {

// Malformed bytes in a binary payload. `offset` points at the offending
// record.
class MalformedFileError : public Error {
 public:
  MalformedFileError(const std::string& msg, std::size_t offset)
      : Error(msg + " (offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Malformed text input. `line` is 1-based; 0 means the position is unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t line)
      : Error(line > 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Decodes consecutive little-endian f32 (x, y, z, reflectance) quadruples.
/// Throws MalformedFileError on trailing partial records or non-finite
/// values.
PointCloud read_velodyne_bin(const std::vector<std::uint8_t>& bytes,
                             const std::string& frame_id = "");

/// Exact inverse encoding of read_velodyne_bin.
std::vector<std::uint8_t> write_velodyne_bin(const PointCloud& cloud);

PointCloud read_velodyne_file(const std::string& path,
                              const std::string& frame_id = "");
void write_velodyne_file(const std::string& path, const PointCloud& cloud);

// One row of a KITTI object label file. Locations are camera-frame
// bottom-center coordinates; dims are (height, width, length).
struct LabelRecord {
  std::string object_type;
  double truncated = 0.0;
  int occluded = 0;
  double alpha = 0.0;
  std::array<double, 4> bbox2d{};
  Vec3 dims_hwl = Vec3::Zero();
  Vec3 location_cam = Vec3::Zero();
  double rotation_y = 0.0;
  bool dont_care = false;
};

/// Parses whitespace-separated 15-field label lines (an optional 16th score
/// field is ignored). "DontCare" rows are retained with the flag set.
/// Throws ParseError with the offending line number.
std::vector<LabelRecord> parse_label_file(const std::string& text);

// Rectification and LiDAR-to-camera extrinsics from a KITTI calib file.
struct Calibration {
  Eigen::Matrix3d R0_rect = Eigen::Matrix3d::Identity();
  Eigen::Matrix<double, 3, 4> Tr_velo_to_cam =
      Eigen::Matrix<double, 3, 4>::Zero();
};

/// Reads the R0_rect and Tr_velo_to_cam entries of a calib file and checks
/// that the rotation blocks are orthonormal within 1e-3.
Calibration parse_calib_file(const std::string& text);

/// Maps a camera-frame label into a LiDAR-frame box: the bottom-center
/// location goes through the inverse rectified extrinsics, the center lifts
/// by h/2, and yaw becomes -rotation_y - pi/2 (wrapped). Throws Error for
/// singular calibrations.
Box3D label_to_lidar_box(const LabelRecord& rec, const Calibration& calib);

/// Inverse of label_to_lidar_box for round-trip checks; produces a record
/// with the given type and box geometry.
LabelRecord lidar_box_to_label(const Box3D& box, const Calibration& calib,
                               const std::string& object_type = "Car");

/// Parses the `v x y z` / `f i j k...` subset of Wavefront OBJ. Polygon
/// faces fan-triangulate; negative indices resolve relative to the vertices
/// seen so far; zero-area triangles are dropped. Throws ParseError.
TriangleMesh read_obj_mesh(const std::string& text);

TriangleMesh read_obj_file(const std::string& path);

struct DetectionDumpRow {
  std::string frame_id;
  double x = 0, y = 0, z = 0;
  double l = 0, w = 0, h = 0;
  double yaw = 0;
  double score = 0;
};

/// Parses the `frame_id,x,y,z,l,w,h,yaw,score` CSV format. Throws ParseError
/// on column mismatches.
std::vector<DetectionDumpRow> read_detection_dump(const std::string& text);

/// Writes rows with 9 significant digits; write-read-write is byte-stable.
std::string write_detection_dump(const std::vector<DetectionDumpRow>& rows);

std::vector<Detection> dump_rows_to_detections(
    const std::vector<DetectionDumpRow>& rows);
std::vector<DetectionDumpRow> detections_to_dump_rows(
    const std::vector<Detection>& detections);

/// Persists a trace as a velodyne-format .bin next to a JSON metadata
/// sidecar (`<path>.json`).
void save_trace(const std::string& bin_path, const AttackTrace& trace);
AttackTrace load_trace(const std::string& bin_path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace spoofbench
