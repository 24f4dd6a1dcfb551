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

#include <cstdint>
#include <vector>

#include <Eigen/Geometry>

#include "meshloc/geometry.hpp"
#include "meshloc/mesh_map.hpp"
#include "meshloc/range_image.hpp"

namespace meshloc {

/// Synthetic town: a flat ground grid with box buildings placed around a
/// closed driving loop (a rounded rectangle inset from the world border).
struct WorldSpec {
  Eigen::Vector2d extent{200.0, 200.0};
  int building_count = 20;
  /// Side length range of building footprints.
  Eigen::Vector2d footprint_range{8.0, 25.0};
  Eigen::Vector2d height_range{5.0, 20.0};
  double ground_z = 0.0;
  double ground_resolution = 5.0;
  /// Distance from the world border to the loop centerline.
  double corridor_inset = 50.0;
  double corridor_half_width = 8.0;
  double corner_radius = 15.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrajectorySpec {
  double length = 299.0;
  double speed = 1.0;
  double sigma_trans = 0.02;
  double sigma_rot = 0.002;
  std::uint64_t seed = 0;

  std::size_t frame_count() const;
  void validate() const;
};

/// Axis-aligned building footprints of a world (generation side product, for tests and tooling).
struct Building {
  Eigen::AlignedBox2d footprint;
  double height = 0.0;
};

std::vector<Building> place_buildings(const WorldSpec& spec);

TriangleMesh build_world(const WorldSpec& spec);

/// Point on the loop centerline at arc length s, with the heading of travel.
Pose2 corridor_point(const WorldSpec& spec, double s);
double corridor_length(const WorldSpec& spec);

/// Brute-force nearest hit of one ray over every triangle. Returns the triangle
/// index and writes the range, or -1 when nothing is hit within [min_range, max_range].
int raycast(const TriangleMesh& mesh, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
            double min_range, double max_range, double& range);

/// Exhaustive per-pixel ray casting. Optional triangle-id image (-1 for misses).
RangeImage raycast_range_image(const TriangleMesh& mesh, const Isometry3& pose, const SensorIntrinsics& intr,
                               Eigen::ArrayXXi* hit_triangles = nullptr);

/// Sensor-frame scan: one point per pixel-center ray hit, perturbed radially by N(0, sigma).
PointCloud simulate_scan(const TriangleMesh& mesh, const Isometry3& pose, const SensorIntrinsics& intr,
                         double noise_sigma, std::uint64_t seed, std::vector<int>* hit_triangles = nullptr);

/// Turns a range image (rendered or ray cast) into a sensor-frame scan, one point per
/// valid pixel along its pixel-center ray, with radial N(0, sigma) noise.
PointCloud scan_from_range_image(const RangeImage& image, const SensorIntrinsics& intr, double noise_sigma,
                                 std::uint64_t seed);

struct Trajectory {
  std::vector<Pose2> poses;
  /// odometry[i] moves frame i-1 to frame i; odometry[0] is zero.
  std::vector<MotionCommand> odometry;
};

Trajectory generate_trajectory(const WorldSpec& world, const TrajectorySpec& spec);

}  // namespace meshloc
