// Copyright 2026 The meshloc Authors
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

#include <filesystem>
#include <vector>

#include "meshloc/geometry.hpp"
#include "meshloc/mesh_map.hpp"
#include "meshloc/range_image.hpp"
#include "meshloc/tile_grid.hpp"

namespace meshloc {

namespace fs = std::filesystem;

/// Binary scan: little-endian float32 quadruples (x, y, z, intensity).
PointCloud load_scan(const fs::path& path);
void save_scan(const fs::path& path, const PointCloud& cloud);

/// Pose list: one line per pose, 12 numbers, the row-major upper 3x4 of a homogeneous transform.
std::vector<Isometry3> load_poses(const fs::path& path);
void save_poses(const fs::path& path, const std::vector<Isometry3>& poses);

/// Odometry list: one "trans rot1 rot2" line per frame.
std::vector<MotionCommand> load_odometry(const fs::path& path);
void save_odometry(const fs::path& path, const std::vector<MotionCommand>& odometry);

enum class PlyFormat { kAscii, kBinaryLittleEndian };

/// Vertices x, y, z (float32) with red, green, blue (uint8); pure red marks ground.
/// Faces are uint8-counted int32 index lists of length 3.
TriangleMesh read_ply(const fs::path& path);
void write_ply(const fs::path& path, const TriangleMesh& mesh, PlyFormat format = PlyFormat::kBinaryLittleEndian);

/// Oriented, labeled point cloud (x y z nx ny nz red green blue) as input for an external
/// surface reconstruction.
void write_oriented_cloud_ply(const fs::path& path, const Eigen::Matrix3Xd& points, const Eigen::Matrix3Xd& normals,
                              const std::vector<VertexLabel>& labels);

/// Versioned text sidecar with the tile size, origin and per-tile triangle lists.
void save_tile_index(const fs::path& path, const TileGrid& grid);
TileGrid load_tile_index(const fs::path& path);

/// 16-bit binary PGM with ranges in millimeters; invalid pixels are 0.
void write_pgm16(const fs::path& path, const RangeImage& image);

struct TrajectoryRecord {
  std::size_t frame = 0;
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  double n_eff = 0.0;
  bool converged = false;
  std::size_t occupied_tiles = 0;
};

/// Comma-separated, one record per frame, after a header line.
void write_trajectory_log(const fs::path& path, const std::vector<TrajectoryRecord>& records);
std::vector<TrajectoryRecord> read_trajectory_log(const fs::path& path);

}  // namespace meshloc
