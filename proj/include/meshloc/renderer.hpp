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

#include <span>
#include <vector>

#include "meshloc/geometry.hpp"
#include "meshloc/mesh_map.hpp"
#include "meshloc/range_image.hpp"
#include "meshloc/tile_grid.hpp"

namespace meshloc {

struct RenderRequest {
  Isometry3 pose = Isometry3::Identity();
  SensorIntrinsics intr;
  std::vector<TileCoord> tiles;
};

/// Software range renderer.
///
/// Every pixel receives the smallest ray-triangle distance in [min_range, max_range]
/// along its pixel-center ray, over the triangles of the requested tiles. Triangles
/// are rasterized over conservative image-space bounds on the sphere and tested per
/// pixel, so the output equals exhaustive ray casting. Both faces are rendered.
///
/// The renderer keeps references to the mesh and grid; they must outlive it.
class MeshRenderer {
 public:
  /// Per-thread working memory, reusable across calls.
  struct Scratch {
    std::vector<std::uint32_t> stamp;
    std::uint32_t epoch = 0;
  };

  MeshRenderer(const TriangleMesh& mesh, const TileGrid& grid, const SensorIntrinsics& intr);

  const SensorIntrinsics& intrinsics() const { return intr_; }
  const TriangleMesh& mesh() const { return mesh_; }
  const TileGrid& grid() const { return grid_; }

  RangeImage render(const Isometry3& pose, std::span<const TileCoord> tiles) const;
  void render_into(const Isometry3& pose, std::span<const TileCoord> tiles, RangeImage& out,
                   Scratch& scratch) const;

  /// Renders using the tiles within max_range of the pose.
  RangeImage render(const Isometry3& pose) const;

 private:
  void rasterize(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1, const Eigen::Vector3d& p2,
                 float* depth) const;

  const TriangleMesh& mesh_;
  const TileGrid& grid_;
  SensorIntrinsics intr_;
  // Pixel-center ray directions, row-major.
  std::vector<double> ray_x_, ray_y_, ray_z_;
  // Per-triangle bounds in the map frame for range culling.
  std::vector<Eigen::AlignedBox3d> bounds_;
};

RangeImage render_range_image(const TriangleMesh& mesh, const TileGrid& grid, const RenderRequest& req);

/// Element i equals render_range_image at poses[i] over tiles_near(pose, max_range).
/// Work is split across up to `threads` workers; results do not depend on the split.
std::vector<RangeImage> render_batch(const TriangleMesh& mesh, const TileGrid& grid,
                                     std::span<const Isometry3> poses, const SensorIntrinsics& intr,
                                     int threads = 1);

/// Sensor pose of a particle: sensor_height above the local map ground (0 where none).
Isometry3 particle_sensor_pose(const Pose2& pose, const GroundHeightIndex& ground, double sensor_height);

/// Runs fn(i, worker) for i in [0, n) over up to `threads` workers, interleaved statically.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn);

}  // namespace meshloc

#include <thread>

namespace meshloc {

template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, std::max(1, threads));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i, std::size_t{0});
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i, w);
    });
  }
}

}  // namespace meshloc
