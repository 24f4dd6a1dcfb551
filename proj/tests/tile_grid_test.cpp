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

#include <random>
#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "scenes.hpp"

namespace meshloc {
namespace {

TriangleMesh single_triangle(Eigen::Vector3d a, Eigen::Vector3d b, Eigen::Vector3d c) {
  TriangleMesh m;
  m.vertices = {a, b, c};
  m.labels.assign(3, VertexLabel::kNonGround);
  m.triangles = {{0, 1, 2}};
  return m;
}

TriangleMesh random_mesh(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> c(-250, 250), d(-30, 30);
  TriangleMesh m;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d a(c(rng), c(rng), d(rng));
    m.vertices.push_back(a);
    m.vertices.push_back(a + Eigen::Vector3d(d(rng), d(rng), d(rng)));
    m.vertices.push_back(a + Eigen::Vector3d(d(rng), d(rng), d(rng)));
    m.triangles.emplace_back(3 * i, 3 * i + 1, 3 * i + 2);
  }
  m.labels.assign(m.vertices.size(), VertexLabel::kNonGround);
  return m;
}

TEST(TileGrid, RejectsNonPositiveSize) { EXPECT_THROW(TileGrid(0.0, Eigen::Vector2d::Zero()), ContractError); }

TEST(TileGrid, TileOfUsesHalfOpenCells) {
  const TileGrid g(100.0, Eigen::Vector2d(-50, -50));
  EXPECT_EQ(g.tile_of(-50, -50), (TileCoord{0, 0}));
  EXPECT_EQ(g.tile_of(49.999, 0), (TileCoord{0, 0}));
  EXPECT_EQ(g.tile_of(50, 0), (TileCoord{1, 0}));
  EXPECT_EQ(g.tile_of(-50.001, 0), (TileCoord{-1, 0}));
  const auto b = g.bounds({1, -1});
  EXPECT_EQ(b.min(), Eigen::Vector2d(50, -150));
  EXPECT_EQ(b.max(), Eigen::Vector2d(150, -50));
}

TEST(BuildTileGrid, TriangleInsideOneTile) {
  const auto m = single_triangle({10, 10, 0}, {20, 10, 0}, {10, 20, 0});
  const TileGrid g = build_tile_grid(m, 100.0, Eigen::Vector2d::Zero());
  ASSERT_EQ(g.tiles().size(), 1u);
  EXPECT_EQ(g.tiles().begin()->first, (TileCoord{0, 0}));
}

TEST(BuildTileGrid, StraddlingTriangleInBothTiles) {
  const auto m = single_triangle({90, 10, 0}, {110, 10, 0}, {95, 20, 0});
  const TileGrid g = build_tile_grid(m, 100.0, Eigen::Vector2d::Zero());
  ASSERT_EQ(g.tiles().size(), 2u);
  EXPECT_TRUE(g.triangles_in({0, 0}));
  EXPECT_TRUE(g.triangles_in({1, 0}));
}

TEST(BuildTileGrid, TouchingTheLowerEdgeOfATileDoesNotEnterIt) {
  const auto m = single_triangle({90, 10, 0}, {100, 10, 0}, {95, 100, 0});
  const TileGrid g = build_tile_grid(m, 100.0, Eigen::Vector2d::Zero());
  ASSERT_EQ(g.tiles().size(), 1u);
  EXPECT_TRUE(g.triangles_in({0, 0}));
  // A wall lying exactly on a tile edge belongs to the tile that contains it.
  const auto wall = single_triangle({100, 10, 0}, {100, 30, 0}, {100, 20, 5});
  const TileGrid gw = build_tile_grid(wall, 100.0, Eigen::Vector2d::Zero());
  ASSERT_EQ(gw.tiles().size(), 1u);
  EXPECT_TRUE(gw.triangles_in({1, 0}));
}

TEST(BuildTileGrid, WorldOfWholeTilesHasNoEdgeSlivers) {
  const auto m = testing::ground_grid(-100, -100, 8, 8, 25.0);
  const TileGrid g = build_tile_grid(m, 100.0);
  EXPECT_EQ(g.tiles().size(), 4u);
}

TEST(BuildTileGrid, DefaultOriginIsMeshMinimum) {
  const auto m = single_triangle({-7, 3, 0}, {5, 9, 0}, {1, 12, 0});
  EXPECT_EQ(build_tile_grid(m, 10.0).origin(), Eigen::Vector2d(-7, 3));
}

TEST(BuildTileGrid, MatchesBruteForceBoxOverlap) {
  const TriangleMesh m = random_mesh(400, 17);
  const double s = 60.0;
  const Eigen::Vector2d origin(-13.0, 7.0);
  const TileGrid g = build_tile_grid(m, s, origin);
  std::set<std::pair<int, int>> expected_pairs;  // (tile key, triangle)
  std::map<std::pair<int, int>, std::vector<int>> expected;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
    for (int k = 0; k < 3; ++k) {
      const auto& v = m.vertices[m.triangles[t][k]];
      x0 = std::min(x0, v.x());
      y0 = std::min(y0, v.y());
      x1 = std::max(x1, v.x());
      y1 = std::max(y1, v.y());
    }
    for (int iy = -10; iy <= 10; ++iy) {
      for (int ix = -10; ix <= 10; ++ix) {
        const double tx = origin.x() + ix * s, ty = origin.y() + iy * s;
        // Tile is [tx, tx + s) x [ty, ty + s); the box is closed.
        if (x0 < tx + s && (x1 > tx || x0 >= tx) && y0 < ty + s && (y1 > ty || y0 >= ty)) expected[{ix, iy}].push_back(int(t));
      }
    }
  }
  ASSERT_EQ(g.tiles().size(), expected.size());
  for (const auto& [key, tris] : expected) {
    const auto* got = g.triangles_in({key.first, key.second});
    ASSERT_TRUE(got);
    EXPECT_EQ(*got, tris);
  }
  std::set<int> covered;
  for (const auto& [c, tris] : g.tiles()) covered.insert(tris.begin(), tris.end());
  EXPECT_EQ(covered.size(), m.triangles.size());
}

TileGrid filled_grid(double s, int n) {
  TileGrid g(s, Eigen::Vector2d::Zero());
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) g.add({ix, iy}, iy * n + ix);
  }
  return g;
}

TEST(TilesNear, CenterWithSmallRadiusIsOneTile) {
  const TileGrid g = filled_grid(100.0, 4);
  const auto t = tiles_near(g, {150, 250}, 1.0);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0], (TileCoord{1, 2}));
}

TEST(TilesNear, CornerJunctionTouchesFourTiles) {
  const TileGrid g = filled_grid(100.0, 4);
  const auto t = tiles_near(g, {200, 200}, 1.0);
  EXPECT_EQ(t, (std::vector<TileCoord>{{1, 1}, {1, 2}, {2, 1}, {2, 2}}));
}

TEST(TilesNear, NegativeRadiusThrows) { EXPECT_THROW(tiles_near(filled_grid(10, 2), {0, 0}, -1.0), ContractError); }

TEST(TilesNear, MatchesBruteForceDiscSquareTest) {
  const TileGrid g = filled_grid(25.0, 12);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> p(-50, 350), r(0, 120);
  for (int q = 0; q < 300; ++q) {
    const Eigen::Vector2d pos(p(rng), p(rng));
    const double radius = r(rng);
    std::vector<TileCoord> want;
    for (const auto& [c, tris] : g.tiles()) {
      const double x0 = c.ix * 25.0, y0 = c.iy * 25.0;
      if (testing::ref_point_box_distance(pos.x(), pos.y(), x0, y0, x0 + 25.0, y0 + 25.0) <= radius) {
        want.push_back(c);
      }
    }
    EXPECT_EQ(tiles_near(g, pos, radius), want);
  }
}

TEST(TilesNear, EveryTriangleWithinRangeIsReachable) {
  const TriangleMesh m = random_mesh(200, 23);
  const TileGrid g = build_tile_grid(m, 50.0);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(0, 1), ang(-3.14159, 3.14159);
  const double max_range = 40.0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    // A point of the triangle, then a query position within max_range of it.
    double a = unit(rng), b = unit(rng);
    if (a + b > 1) {
      a = 1 - a;
      b = 1 - b;
    }
    const auto& tri = m.triangles[t];
    const Eigen::Vector3d on = m.vertices[tri[0]] + a * (m.vertices[tri[1]] - m.vertices[tri[0]]) +
                               b * (m.vertices[tri[2]] - m.vertices[tri[0]]);
    const double th = ang(rng), d = max_range * unit(rng);
    const Eigen::Vector2d pos = on.head<2>() + d * Eigen::Vector2d(std::cos(th), std::sin(th));
    bool found = false;
    for (const auto& c : tiles_near(g, pos, max_range)) {
      const auto* tris = g.triangles_in(c);
      found = found || std::find(tris->begin(), tris->end(), int(t)) != tris->end();
    }
    EXPECT_TRUE(found) << "triangle " << t;
  }
}

}  // namespace
}  // namespace meshloc
