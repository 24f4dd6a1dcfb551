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

#include "meshloc/renderer.hpp"

#include <random>

#include <gtest/gtest.h>

#include "meshloc/sim_world.hpp"
#include "oracles.hpp"
#include "scenes.hpp"

namespace meshloc {
namespace {

SensorIntrinsics small_intr() {
  SensorIntrinsics intr;
  intr.width = 180;
  intr.height = 24;
  return intr;
}

std::vector<TileCoord> all_tiles(const TileGrid& g) {
  std::vector<TileCoord> out;
  for (const auto& [c, t] : g.tiles()) out.push_back(c);
  return out;
}

/// Per-pixel brute force with the textbook intersection, independent of the library ray caster.
RangeImage reference_image(const TriangleMesh& m, const Isometry3& pose, const SensorIntrinsics& intr) {
  RangeImage img(intr.width, intr.height);
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      const double az = testing::kPiRef * (1.0 - 2.0 * (u + 0.5) / intr.width);
      const double el = (1.0 - (v + 0.5) / intr.height) * intr.fov() - intr.fov_up;
      const Eigen::Vector3d d = pose.linear() *
                                Eigen::Vector3d(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      double best = 1e300;
      for (const auto& t : m.triangles) {
        const auto hit = testing::ref_ray_triangle(pose.translation(), d, m.vertices[t[0]], m.vertices[t[1]],
                                                   m.vertices[t[2]]);
        if (hit && *hit >= intr.min_range && *hit <= intr.max_range) best = std::min(best, *hit);
      }
      if (best < 1e300) img.set(u, v, float(best));
    }
  }
  return img;
}

void expect_images_match(const RangeImage& got, const RangeImage& want, double tol) {
  ASSERT_EQ(got.width(), want.width());
  ASSERT_EQ(got.height(), want.height());
  int mismatched = 0;
  for (int v = 0; v < got.height(); ++v) {
    for (int u = 0; u < got.width(); ++u) {
      if (got.valid(u, v) != want.valid(u, v)) {
        ++mismatched;
        continue;
      }
      if (got.valid(u, v)) EXPECT_NEAR(got.range(u, v), want.range(u, v), tol) << "pixel " << u << "," << v;
    }
  }
  EXPECT_EQ(mismatched, 0);
}

TEST(Renderer, EmptyTileSetRendersNothing) {
  const TriangleMesh m = testing::urban_block(2.0);
  const TileGrid g = build_tile_grid(m, 50.0);
  const MeshRenderer r(m, g, small_intr());
  EXPECT_EQ(r.render(lift_pose({0, 0, 0}, 1.7), {}).valid_count(), 0);
}

TEST(Renderer, MatchesBruteForceOnUrbanScenes) {
  SensorIntrinsics intr = small_intr();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> pos(-30, 30), yaw(-3.14, 3.14);
  for (int scene = 0; scene < 3; ++scene) {
    const TriangleMesh m = testing::urban_block(2.0, scene + 1);
    const TileGrid g = build_tile_grid(m, 40.0);
    const MeshRenderer r(m, g, intr);
    for (int k = 0; k < 2; ++k) {
      const Isometry3 pose = lift_pose({pos(rng), pos(rng), yaw(rng)}, 1.73);
      expect_images_match(r.render(pose, all_tiles(g)), reference_image(m, pose, intr), 1e-4);
    }
  }
}

TEST(Renderer, MatchesBruteForceOnTriangleSoupAroundSensor) {
  // Triangles close to and around the sensor stress the seam and overhead cases.
  SensorIntrinsics intr = small_intr();
  intr.fov_up = deg2rad(60.0);
  intr.fov_down = deg2rad(60.0);
  intr.min_range = 0.1;
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> c(-6, 6);
  for (int scene = 0; scene < 6; ++scene) {
    TriangleMesh m;
    for (int i = 0; i < 40; ++i) {
      const Eigen::Vector3d a(c(rng), c(rng), c(rng));
      m.vertices.push_back(a);
      m.vertices.push_back(a + Eigen::Vector3d(c(rng), c(rng), 0.5 * c(rng)));
      m.vertices.push_back(a + Eigen::Vector3d(c(rng), c(rng), 0.5 * c(rng)));
      m.triangles.emplace_back(3 * i, 3 * i + 1, 3 * i + 2);
    }
    // A ceiling triangle directly above and a floor triangle surrounding the axis.
    const int b = int(m.vertices.size());
    m.vertices.insert(m.vertices.end(), {{-3, -3, 2}, {5, -1, 2.5}, {-1, 5, 3}, {-8, -8, -1}, {9, -2, -1}, {-2, 9, -1}});
    m.triangles.emplace_back(b, b + 1, b + 2);
    m.triangles.emplace_back(b + 3, b + 4, b + 5);
    m.labels.assign(m.vertices.size(), VertexLabel::kNonGround);
    const TileGrid g = build_tile_grid(m, 100.0);
    const MeshRenderer r(m, g, intr);
    Isometry3 pose = Isometry3::Identity();
    pose.linear() = Eigen::AngleAxisd(0.3 * scene, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    expect_images_match(r.render(pose, all_tiles(g)), reference_image(m, pose, intr), 1e-4);
  }
}

TEST(Renderer, AgreesWithLibraryRayCaster) {
  WorldSpec ws;
  ws.extent = {120, 120};
  ws.corridor_inset = 30;
  ws.building_count = 10;
  ws.seed = 3;
  const TriangleMesh m = build_world(ws);
  const TileGrid g = build_tile_grid(m, 100.0);
  const SensorIntrinsics intr = small_intr();
  const MeshRenderer r(m, g, intr);
  const Isometry3 pose = lift_pose(corridor_point(ws, 12.0), 1.73);
  expect_images_match(r.render(pose), raycast_range_image(m, pose, intr), 1e-4);
}

TEST(Renderer, FlatGroundClosedForm) {
  const TriangleMesh m = testing::ground_grid(-100, -100, 8, 8, 25.0);
  const TileGrid g = build_tile_grid(m, 100.0);
  SensorIntrinsics intr = small_intr();
  std::swap(intr.fov_up, intr.fov_down);  // look down
  intr.max_range = 80.0;
  const MeshRenderer r(m, g, intr);
  const RangeImage img = r.render(lift_pose({0, 0, 0.4}, 2.0), all_tiles(g));
  for (int v = 0; v < intr.height; ++v) {
    const double el = (1.0 - (v + 0.5) / intr.height) * intr.fov() - intr.fov_up;
    for (int u = 0; u < intr.width; ++u) {
      if (el < 0.0 && 2.0 / std::sin(-el) <= intr.max_range) {
        ASSERT_TRUE(img.valid(u, v));
        EXPECT_NEAR(img.range(u, v), 2.0 / std::sin(-el), 1e-4);
      } else {
        EXPECT_FALSE(img.valid(u, v));
      }
    }
  }
}

TEST(Renderer, YawByWholeColumnsShiftsImage) {
  // Closed room around the sensor: every pixel sees a wall, ceiling or floor.
  TriangleMesh room = testing::box_mesh({-7, -9, -1.5}, {11, 6, 4});
  const TileGrid g = build_tile_grid(room, 100.0);
  const SensorIntrinsics intr = small_intr();
  const MeshRenderer r(room, g, intr);
  const RangeImage base = r.render(Isometry3::Identity(), all_tiles(g));
  ASSERT_EQ(base.valid_count(), intr.pixel_count());
  for (int k : {1, 13, 90}) {
    Isometry3 pose = Isometry3::Identity();
    pose.linear() =
        Eigen::AngleAxisd(2.0 * testing::kPiRef * k / intr.width, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    const RangeImage rotated = r.render(pose, all_tiles(g));
    ASSERT_EQ(rotated.valid_count(), intr.pixel_count());
    for (int v = 0; v < intr.height; ++v) {
      for (int u = 0; u < intr.width; ++u) {
        // Turning the sensor left by k columns moves world content right by k columns.
        ASSERT_NEAR(rotated.range(u, v), base.range((u - k + intr.width) % intr.width, v), 1e-4);
      }
    }
  }
}

TEST(Renderer, AddingTrianglesNeverIncreasesRange) {
  const TriangleMesh base = testing::urban_block(2.0, 5);
  TriangleMesh more = base;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> c(-30, 30), h(0, 6);
  for (int i = 0; i < 30; ++i) {
    const Eigen::Vector3d lo(c(rng), c(rng), 0.0);
    more.append(testing::box_mesh(lo, lo + Eigen::Vector3d(1 + h(rng), 1 + h(rng), h(rng) + 0.5)));
  }
  const TileGrid g0 = build_tile_grid(base, 40.0, Eigen::Vector2d(-40, -40));
  const TileGrid g1 = build_tile_grid(more, 40.0, Eigen::Vector2d(-40, -40));
  const SensorIntrinsics intr = small_intr();
  const Isometry3 pose = lift_pose({2, 3, 0.5}, 1.73);
  const RangeImage a = MeshRenderer(base, g0, intr).render(pose, all_tiles(g0));
  const RangeImage b = MeshRenderer(more, g1, intr).render(pose, all_tiles(g1));
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      if (!a.valid(u, v)) continue;
      ASSERT_TRUE(b.valid(u, v));
      EXPECT_LE(b.range(u, v), a.range(u, v));
    }
  }
}

TEST(Renderer, RangeWindowIsRespected) {
  const TriangleMesh room = testing::box_mesh({-3, -3, -1}, {3, 3, 2});
  const TileGrid g = build_tile_grid(room, 100.0);
  SensorIntrinsics intr = small_intr();
  intr.min_range = 3.5;
  const RangeImage img = MeshRenderer(room, g, intr).render(Isometry3::Identity(), all_tiles(g));
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      if (img.valid(u, v)) {
        EXPECT_GE(img.range(u, v), 3.5f);
      } else {
        EXPECT_EQ(img.range(u, v), 0.0f);
      }
    }
  }
}

TEST(RenderBatch, MatchesSequentialRenders) {
  const TriangleMesh m = testing::urban_block(2.0, 7);
  const TileGrid g = build_tile_grid(m, 40.0);
  const SensorIntrinsics intr = small_intr();
  std::vector<Isometry3> poses;
  for (int i = 0; i < 6; ++i) poses.push_back(lift_pose({-20.0 + 7 * i, 3.0 - i, 0.4 * i}, 1.73));
  const auto seq = render_batch(m, g, poses, intr, 1);
  const auto par = render_batch(m, g, poses, intr, 3);
  ASSERT_EQ(seq.size(), poses.size());
  const MeshRenderer r(m, g, intr);
  for (std::size_t i = 0; i < poses.size(); ++i) {
    EXPECT_TRUE(seq[i] == par[i]);
    EXPECT_TRUE(seq[i] == r.render(poses[i]));
  }
}

TEST(RenderRangeImage, UsesRequestedTilesOnly) {
  const TriangleMesh m = testing::urban_block(2.0, 2);
  const TileGrid g = build_tile_grid(m, 40.0);
  RenderRequest req;
  req.intr = small_intr();
  req.pose = lift_pose({0, 0, 0}, 1.73);
  req.tiles = all_tiles(g);
  const RangeImage full = render_range_image(m, g, req);
  req.tiles.resize(1);
  const RangeImage part = render_range_image(m, g, req);
  EXPECT_GT(full.valid_count(), part.valid_count());
}

TEST(ParticleSensorPose, LiftsAboveLocalGround) {
  TriangleMesh m = testing::ground_grid(0, 0, 4, 4, 5.0);
  for (auto& v : m.vertices) v.z() = 0.1 * v.x();
  const GroundHeightIndex ground(m);
  const Isometry3 T = particle_sensor_pose({10, 5, 0.7}, ground, 1.73);
  EXPECT_NEAR(T.translation().z(), 1.0 + 1.73, 1e-12);
  EXPECT_NEAR(planar_pose(T).yaw, 0.7, 1e-12);
  EXPECT_NEAR(particle_sensor_pose({-50, 5, 0}, ground, 1.73).translation().z(), 1.73, 1e-12);
}

}  // namespace
}  // namespace meshloc
