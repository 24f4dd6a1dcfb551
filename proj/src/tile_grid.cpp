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

#include "meshloc/tile_grid.hpp"

#include <algorithm>
#include <cmath>

namespace meshloc {

TileGrid::TileGrid(double tile_size, Eigen::Vector2d origin) : tile_size_(tile_size), origin_(origin) {
  if (!(tile_size > 0.0)) throw ContractError("tile grid: tile_size must be positive");
}

TileCoord TileGrid::tile_of(double x, double y) const {
  return {static_cast<int>(std::floor((x - origin_.x()) / tile_size_)),
          static_cast<int>(std::floor((y - origin_.y()) / tile_size_))};
}

Eigen::AlignedBox2d TileGrid::bounds(const TileCoord& c) const {
  const Eigen::Vector2d lo = origin_ + tile_size_ * Eigen::Vector2d(c.ix, c.iy);
  return {lo, lo + Eigen::Vector2d::Constant(tile_size_)};
}

const std::vector<int>* TileGrid::triangles_in(const TileCoord& c) const {
  const auto it = tiles_.find(c);
  return it == tiles_.end() ? nullptr : &it->second;
}

namespace {

// Index of the last tile a closed interval ending at v reaches. An interval that
// only touches the lower edge of a tile does not enter it.
int last_index(double v, double origin, double size, int first) {
  const double q = (v - origin) / size;
  const int k = static_cast<int>(std::floor(q));
  return (k > first && q == double(k)) ? k - 1 : k;
}

}  // namespace

TileGrid build_tile_grid(const TriangleMesh& mesh, double tile_size, std::optional<Eigen::Vector2d> origin) {
  if (!origin) {
    Eigen::AlignedBox2d box;
    for (const auto& v : mesh.vertices) box.extend(v.head<2>());
    origin = box.isEmpty() ? Eigen::Vector2d::Zero() : box.min();
  }
  TileGrid grid(tile_size, *origin);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    Eigen::AlignedBox2d box;
    for (int k = 0; k < 3; ++k) box.extend(mesh.vertices[tri[k]].head<2>());
    const TileCoord lo = grid.tile_of(box.min().x(), box.min().y());
    const TileCoord hi{last_index(box.max().x(), grid.origin().x(), tile_size, lo.ix),
                       last_index(box.max().y(), grid.origin().y(), tile_size, lo.iy)};
    for (int iy = lo.iy; iy <= hi.iy; ++iy) {
      for (int ix = lo.ix; ix <= hi.ix; ++ix) grid.add({ix, iy}, static_cast<int>(t));
    }
  }
  return grid;
}

std::vector<TileCoord> tiles_near(const TileGrid& grid, const Eigen::Vector2d& position, double radius) {
  if (!(radius >= 0.0)) throw ContractError("tiles_near: radius must be non-negative");
  std::vector<TileCoord> out;
  const TileCoord lo = grid.tile_of(position.x() - radius, position.y() - radius);
  const TileCoord hi = grid.tile_of(position.x() + radius, position.y() + radius);
  const double r2 = radius * radius;
  // Candidate range is small near the query; fall back to scanning the map when it is not.
  const long long span = (long long)(hi.ix - lo.ix + 1) * (hi.iy - lo.iy + 1);
  auto consider = [&](const TileCoord& c) {
    if (grid.bounds(c).squaredExteriorDistance(position) <= r2) out.push_back(c);
  };
  if (span > (long long)grid.tiles().size()) {
    for (const auto& [c, tris] : grid.tiles()) consider(c);
  } else {
    for (int iy = lo.iy - 1; iy <= hi.iy + 1; ++iy) {
      for (int ix = lo.ix - 1; ix <= hi.ix + 1; ++ix) {
        if (grid.triangles_in({ix, iy})) consider({ix, iy});
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace meshloc
