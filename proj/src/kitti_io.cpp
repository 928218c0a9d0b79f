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

#include "spoofbench/kitti_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace spoofbench {

namespace {

constexpr std::size_t kRecordBytes = 16;

float read_f32_le(const std::uint8_t* p) {
  std::uint32_t u = static_cast<std::uint32_t>(p[0]) |
                    (static_cast<std::uint32_t>(p[1]) << 8) |
                    (static_cast<std::uint32_t>(p[2]) << 16) |
                    (static_cast<std::uint32_t>(p[3]) << 24);
  float f;
  std::memcpy(&f, &u, sizeof(f));
  return f;
}

void write_f32_le(std::uint8_t* p, float f) {
  std::uint32_t u;
  std::memcpy(&u, &f, sizeof(u));
  p[0] = static_cast<std::uint8_t>(u & 0xff);
  p[1] = static_cast<std::uint8_t>((u >> 8) & 0xff);
  p[2] = static_cast<std::uint8_t>((u >> 16) & 0xff);
  p[3] = static_cast<std::uint8_t>((u >> 24) & 0xff);
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream iss(line);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

double parse_double(const std::string& tok, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError("not a number: '" + tok + "'", line);
  }
}

std::string fmt_g9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

PointCloud read_velodyne_bin(const std::vector<std::uint8_t>& bytes,
                             const std::string& frame_id) {
  if (bytes.size() % kRecordBytes != 0) {
    throw MalformedFileError(
        "velodyne payload has a trailing partial record",
        bytes.size() - bytes.size() % kRecordBytes);
  }
  PointCloud cloud;
  cloud.frame_id = frame_id;
  cloud.points.reserve(bytes.size() / kRecordBytes);
  for (std::size_t off = 0; off < bytes.size(); off += kRecordBytes) {
    const float x = read_f32_le(bytes.data() + off);
    const float y = read_f32_le(bytes.data() + off + 4);
    const float z = read_f32_le(bytes.data() + off + 8);
    const float r = read_f32_le(bytes.data() + off + 12);
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z) ||
        !std::isfinite(r)) {
      throw MalformedFileError("non-finite value in velodyne record", off);
    }
    cloud.points.emplace_back(x, y, z, r);
  }
  return cloud;
}

std::vector<std::uint8_t> write_velodyne_bin(const PointCloud& cloud) {
  std::vector<std::uint8_t> bytes(cloud.size() * kRecordBytes);
  std::size_t off = 0;
  for (const Point& p : cloud.points) {
    write_f32_le(bytes.data() + off, static_cast<float>(p.x));
    write_f32_le(bytes.data() + off + 4, static_cast<float>(p.y));
    write_f32_le(bytes.data() + off + 8, static_cast<float>(p.z));
    write_f32_le(bytes.data() + off + 12, static_cast<float>(p.intensity));
    off += kRecordBytes;
  }
  return bytes;
}

PointCloud read_velodyne_file(const std::string& path,
                              const std::string& frame_id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return read_velodyne_bin(bytes, frame_id);
}

void write_velodyne_file(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  const auto bytes = write_velodyne_bin(cloud);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("short write to " + path);
}

std::vector<LabelRecord> parse_label_file(const std::string& text) {
  std::vector<LabelRecord> records;
  std::istringstream iss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(iss, line)) {
    ++lineno;
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks.size() != 15 && toks.size() != 16) {
      throw ParseError("expected 15 or 16 fields, got " +
                           std::to_string(toks.size()),
                       lineno);
    }
    LabelRecord rec;
    rec.object_type = toks[0];
    rec.dont_care = (rec.object_type == "DontCare");
    rec.truncated = parse_double(toks[1], lineno);
    const double occ = parse_double(toks[2], lineno);
    rec.occluded = static_cast<int>(occ);
    if (rec.occluded < 0 || rec.occluded > 3 || occ != rec.occluded) {
      // DontCare rows legitimately carry -1.
      if (!rec.dont_care) {
        throw ParseError("occluded flag must be an integer in {0,1,2,3}",
                         lineno);
      }
      rec.occluded = 3;
    }
    rec.alpha = parse_double(toks[3], lineno);
    for (int i = 0; i < 4; ++i) {
      rec.bbox2d[i] = parse_double(toks[4 + i], lineno);
    }
    rec.dims_hwl = Vec3(parse_double(toks[8], lineno),
                        parse_double(toks[9], lineno),
                        parse_double(toks[10], lineno));
    rec.location_cam = Vec3(parse_double(toks[11], lineno),
                            parse_double(toks[12], lineno),
                            parse_double(toks[13], lineno));
    rec.rotation_y = parse_double(toks[14], lineno);
    if (!rec.dont_care &&
        (rec.dims_hwl.minCoeff() < 0.0 || !rec.dims_hwl.allFinite())) {
      throw ParseError("dimensions must be nonnegative", lineno);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

namespace {

bool roughly_orthonormal(const Eigen::Matrix3d& m, double tol) {
  return (m.transpose() * m - Eigen::Matrix3d::Identity())
             .cwiseAbs()
             .maxCoeff() <= tol;
}

}  // namespace

Calibration parse_calib_file(const std::string& text) {
  Calibration calib;
  bool saw_r0 = false;
  bool saw_tr = false;
  std::istringstream iss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(iss, line)) {
    ++lineno;
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string key = line.substr(0, colon);
    const auto toks = split_ws(line.substr(colon + 1));
    if (key == "R0_rect" || key == "R_rect") {
      if (toks.size() != 9) {
        throw ParseError("R0_rect needs 9 values", lineno);
      }
      for (int i = 0; i < 9; ++i) {
        calib.R0_rect(i / 3, i % 3) = parse_double(toks[i], lineno);
      }
      saw_r0 = true;
    } else if (key == "Tr_velo_to_cam" || key == "Tr_velo_cam") {
      if (toks.size() != 12) {
        throw ParseError("Tr_velo_to_cam needs 12 values", lineno);
      }
      for (int i = 0; i < 12; ++i) {
        calib.Tr_velo_to_cam(i / 4, i % 4) = parse_double(toks[i], lineno);
      }
      saw_tr = true;
    }
  }
  if (!saw_r0 || !saw_tr) {
    throw ParseError("calib file missing R0_rect or Tr_velo_to_cam", 0);
  }
  if (!roughly_orthonormal(calib.R0_rect, 1e-3) ||
      !roughly_orthonormal(calib.Tr_velo_to_cam.leftCols<3>(), 1e-3)) {
    throw ParseError("calibration rotation blocks are not orthonormal", 0);
  }
  return calib;
}

Box3D label_to_lidar_box(const LabelRecord& rec, const Calibration& calib) {
  const Eigen::Matrix3d R = calib.R0_rect * calib.Tr_velo_to_cam.leftCols<3>();
  if (std::abs(R.determinant()) < 1e-6) {
    throw Error("label_to_lidar_box: singular calibration");
  }
  const Vec3 t = calib.R0_rect * calib.Tr_velo_to_cam.col(3);
  const Vec3 bottom_velo = R.inverse() * (rec.location_cam - t);
  Box3D box;
  box.dims = Vec3(rec.dims_hwl.z(), rec.dims_hwl.y(), rec.dims_hwl.x());
  box.center = bottom_velo + Vec3(0.0, 0.0, rec.dims_hwl.x() / 2.0);
  box.yaw = wrap_rad(-rec.rotation_y - kPi / 2.0);
  return box;
}

LabelRecord lidar_box_to_label(const Box3D& box, const Calibration& calib,
                               const std::string& object_type) {
  const Eigen::Matrix3d R = calib.R0_rect * calib.Tr_velo_to_cam.leftCols<3>();
  const Vec3 t = calib.R0_rect * calib.Tr_velo_to_cam.col(3);
  LabelRecord rec;
  rec.object_type = object_type;
  rec.dims_hwl = Vec3(box.dims.z(), box.dims.y(), box.dims.x());
  const Vec3 bottom_velo = box.center - Vec3(0.0, 0.0, box.dims.z() / 2.0);
  rec.location_cam = R * bottom_velo + t;
  rec.rotation_y = wrap_rad(-box.yaw - kPi / 2.0);
  return rec;
}

TriangleMesh read_obj_mesh(const std::string& text) {
  TriangleMesh mesh;
  std::istringstream iss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(iss, line)) {
    ++lineno;
    const auto toks = split_ws(line);
    if (toks.empty() || toks[0].empty() || toks[0][0] == '#') continue;
    if (toks[0] == "v") {
      if (toks.size() < 4) throw ParseError("vertex needs 3 coordinates", lineno);
      mesh.vertices.emplace_back(parse_double(toks[1], lineno),
                                 parse_double(toks[2], lineno),
                                 parse_double(toks[3], lineno));
    } else if (toks[0] == "f") {
      if (toks.size() < 4) throw ParseError("face needs >= 3 indices", lineno);
      std::vector<int> idx;
      idx.reserve(toks.size() - 1);
      for (std::size_t i = 1; i < toks.size(); ++i) {
        // `i/t/n` forms: only the vertex index matters here.
        const std::string head = toks[i].substr(0, toks[i].find('/'));
        long raw = 0;
        try {
          std::size_t used = 0;
          raw = std::stol(head, &used);
          if (used != head.size()) throw std::invalid_argument(head);
        } catch (const std::exception&) {
          throw ParseError("bad face index '" + toks[i] + "'", lineno);
        }
        long resolved =
            raw < 0 ? static_cast<long>(mesh.vertices.size()) + raw : raw - 1;
        if (resolved < 0 ||
            resolved >= static_cast<long>(mesh.vertices.size())) {
          throw ParseError("face index out of range", lineno);
        }
        idx.push_back(static_cast<int>(resolved));
      }
      for (std::size_t i = 1; i + 1 < idx.size(); ++i) {
        mesh.triangles.push_back({idx[0], idx[i], idx[i + 1]});
      }
    }
    // Other directives (vn, vt, usemtl, ...) are ignored.
  }
  // Drop zero-area faces so downstream intersection code never sees them.
  std::vector<std::array<int, 3>> kept;
  kept.reserve(mesh.triangles.size());
  for (const auto& tri : mesh.triangles) {
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    if ((b - a).cross(c - a).norm() > 1e-12) kept.push_back(tri);
  }
  mesh.triangles = std::move(kept);
  return mesh;
}

TriangleMesh read_obj_file(const std::string& path) {
  return read_obj_mesh(read_text_file(path));
}

std::vector<DetectionDumpRow> read_detection_dump(const std::string& text) {
  std::istringstream iss(text);
  std::string line;
  if (!std::getline(iss, line)) {
    throw ParseError("detection dump is empty (header expected)", 0);
  }
  if (line != "frame_id,x,y,z,l,w,h,yaw,score") {
    throw ParseError("bad detection dump header: '" + line + "'", 1);
  }
  std::vector<DetectionDumpRow> rows;
  std::size_t lineno = 1;
  while (std::getline(iss, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::string col;
    std::istringstream ls(line);
    while (std::getline(ls, col, ',')) cols.push_back(col);
    if (cols.size() != 9) {
      throw ParseError("expected 9 columns, got " + std::to_string(cols.size()),
                       lineno);
    }
    DetectionDumpRow row;
    row.frame_id = cols[0];
    row.x = parse_double(cols[1], lineno);
    row.y = parse_double(cols[2], lineno);
    row.z = parse_double(cols[3], lineno);
    row.l = parse_double(cols[4], lineno);
    row.w = parse_double(cols[5], lineno);
    row.h = parse_double(cols[6], lineno);
    row.yaw = parse_double(cols[7], lineno);
    row.score = parse_double(cols[8], lineno);
    if (!(row.l > 0.0 && row.w > 0.0 && row.h > 0.0)) {
      throw ParseError("dimensions must be positive", lineno);
    }
    if (row.score < 0.0 || row.score > 1.0) {
      throw ParseError("score must be in [0, 1]", lineno);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string write_detection_dump(const std::vector<DetectionDumpRow>& rows) {
  std::string out = "frame_id,x,y,z,l,w,h,yaw,score\n";
  for (const auto& r : rows) {
    out += r.frame_id;
    for (double v : {r.x, r.y, r.z, r.l, r.w, r.h, r.yaw, r.score}) {
      out += ',';
      out += fmt_g9(v);
    }
    out += '\n';
  }
  return out;
}

std::vector<Detection> dump_rows_to_detections(
    const std::vector<DetectionDumpRow>& rows) {
  std::vector<Detection> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    Detection d;
    d.frame_id = r.frame_id;
    d.box = Box3D(Vec3(r.x, r.y, r.z), Vec3(r.l, r.w, r.h), r.yaw);
    d.score = r.score;
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<DetectionDumpRow> detections_to_dump_rows(
    const std::vector<Detection>& detections) {
  std::vector<DetectionDumpRow> rows;
  rows.reserve(detections.size());
  for (const auto& d : detections) {
    DetectionDumpRow r;
    r.frame_id = d.frame_id;
    r.x = d.box.center.x();
    r.y = d.box.center.y();
    r.z = d.box.center.z();
    r.l = d.box.dims.x();
    r.w = d.box.dims.y();
    r.h = d.box.dims.z();
    r.yaw = d.box.yaw;
    r.score = d.score;
    rows.push_back(std::move(r));
  }
  return rows;
}

void save_trace(const std::string& bin_path, const AttackTrace& trace) {
  write_velodyne_file(bin_path, trace.points);
  nlohmann::json meta;
  meta["kind"] = to_string(trace.meta.kind);
  meta["point_count"] = trace.meta.point_count;
  meta["azimuth_extent_deg"] = trace.meta.azimuth_extent_deg;
  meta["source_range_m"] = trace.meta.source_range_m;
  write_text_file(bin_path + ".json", meta.dump(2) + "\n");
}

AttackTrace load_trace(const std::string& bin_path) {
  AttackTrace trace;
  trace.points = read_velodyne_file(bin_path);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_text_file(bin_path + ".json"));
    trace.meta.kind = trace_kind_from_string(meta.at("kind").get<std::string>());
    trace.meta.point_count = meta.at("point_count").get<int>();
    trace.meta.azimuth_extent_deg = meta.at("azimuth_extent_deg").get<double>();
    trace.meta.source_range_m = meta.at("source_range_m").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error("load_trace: bad metadata sidecar for " + bin_path + ": " +
                e.what());
  }
  return trace;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << content;
  if (!out) throw Error("short write to " + path);
}

}  // namespace spoofbench
