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

#include <compare>
#include <map>
#include <vector>

#include <Eigen/Geometry>

#include "meshloc/mesh_map.hpp"

namespace meshloc {

struct TileCoord {
  int ix = 0;
  int iy = 0;
  auto operator<=>(const TileCoord&) const = default;
};

/// Square partition of the map plane into half-open cells. A triangle belongs to
/// every cell its xy bounding box overlaps, so border triangles repeat; a box that
/// only touches the lower edge of a cell is not added to it.
class TileGrid {
 public:
  TileGrid() = default;
  TileGrid(double tile_size, Eigen::Vector2d origin);

  double tile_size() const { return tile_size_; }
  const Eigen::Vector2d& origin() const { return origin_; }
  const std::map<TileCoord, std::vector<int>>& tiles() const { return tiles_; }
  bool empty() const { return tiles_.empty(); }

  TileCoord tile_of(double x, double y) const;
  Eigen::AlignedBox2d bounds(const TileCoord& c) const;
  const std::vector<int>* triangles_in(const TileCoord& c) const;

  void add(const TileCoord& c, int triangle) { tiles_[c].push_back(triangle); }
  void set_tile(const TileCoord& c, std::vector<int> triangles) { tiles_[c] = std::move(triangles); }

  bool operator==(const TileGrid&) const = default;

 private:
  double tile_size_ = 100.0;
  Eigen::Vector2d origin_ = Eigen::Vector2d::Zero();
  std::map<TileCoord, std::vector<int>> tiles_;
};

/// Tiles the mesh with the grid origin at the minimum xy corner of its vertices,
/// unless an origin is given.
TileGrid build_tile_grid(const TriangleMesh& mesh, double tile_size,
                         std::optional<Eigen::Vector2d> origin = std::nullopt);

/// Non-empty tiles whose closed square intersects the closed disc, in sorted order.
std::vector<TileCoord> tiles_near(const TileGrid& grid, const Eigen::Vector2d& position, double radius);

}  // namespace meshloc
