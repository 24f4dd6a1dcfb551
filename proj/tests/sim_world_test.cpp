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

#include "meshloc/sim_world.hpp"

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "meshloc/error.hpp"
#include "meshloc/renderer.hpp"
#include "oracles.hpp"
#include "scenes.hpp"

namespace meshloc {
namespace {

WorldSpec small_world(std::uint64_t seed, int buildings = 8) {
  WorldSpec ws;
  ws.extent = {120, 100};
  ws.corridor_inset = 28;
  ws.corner_radius = 10;
  ws.building_count = buildings;
  ws.ground_resolution = 10;
  ws.seed = seed;
  return ws;
}

SensorIntrinsics small_intr() {
  SensorIntrinsics intr;
  intr.width = 120;
  intr.height = 16;
  return intr;
}

double total_area(const TriangleMesh& m, bool ground) {
  double a = 0.0;
  for (std::size_t t = 0; t < m.triangle_count(); ++t) {
    if (m.is_ground_triangle(t) == ground) a += triangle_area(m, t);
  }
  return a;
}

TEST(SimWorld, SpecValidation) {
  WorldSpec ws;
  ws.corridor_inset = 100;
  EXPECT_THROW(ws.validate(), ContractError);
  ws = WorldSpec{};
  ws.building_count = -1;
  EXPECT_THROW(ws.validate(), ContractError);
  TrajectorySpec ts;
  ts.speed = 0;
  EXPECT_THROW(ts.validate(), ContractError);
  EXPECT_EQ(TrajectorySpec{}.frame_count(), 300u);
}

TEST(SimWorld, NoBuildingsMeansOnlyGround) {
  const TriangleMesh m = build_world(small_world(1, 0));
  ASSERT_GT(m.vertex_count(), 0u);
  EXPECT_TRUE(std::all_of(m.labels.begin(), m.labels.end(), [](VertexLabel l) { return l == VertexLabel::kGround; }));
  EXPECT_NEAR(total_area(m, true), 120.0 * 100.0, 1e-6);
}

TEST(SimWorld, GroundCoversExtentAndBuildingsAreClosedBoxes) {
  const WorldSpec ws = small_world(5);
  const TriangleMesh m = build_world(ws);
  m.validate();
  EXPECT_NEAR(total_area(m, true), 120.0 * 100.0, 1e-6);
  const auto buildings = place_buildings(ws);
  ASSERT_FALSE(buildings.empty());
  double expected = 0.0;
  for (const auto& b : buildings) {
    const Eigen::Vector2d s = b.footprint.sizes();
    expected += s.x() * s.y() + 2.0 * (s.x() + s.y()) * b.height;  // roof and four walls
  }
  EXPECT_NEAR(total_area(m, false), expected, 1e-6 * expected);
}

TEST(SimWorld, Deterministic) {
  const TriangleMesh a = build_world(small_world(9));
  const TriangleMesh b = build_world(small_world(9));
  EXPECT_EQ(a.vertices, b.vertices);
  EXPECT_EQ(a.triangles, b.triangles);
  const TriangleMesh c = build_world(small_world(10));
  EXPECT_NE(a.vertices, c.vertices);
}

TEST(SimWorld, BuildingsKeepClearOfTheLoopAndEachOther) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const WorldSpec ws = small_world(seed, 15);
    const auto buildings = place_buildings(ws);
    const double total = corridor_length(ws);
    for (double s = 0.0; s < total; s += 0.25) {
      const Pose2 p = corridor_point(ws, s);
      for (const auto& b : buildings) {
        const auto& f = b.footprint;
        EXPECT_GE(testing::ref_point_box_distance(p.x, p.y, f.min().x(), f.min().y(), f.max().x(), f.max().y()),
                  ws.corridor_half_width);
      }
    }
    for (std::size_t i = 0; i < buildings.size(); ++i) {
      EXPECT_TRUE(buildings[i].footprint.min().x() >= -60 && buildings[i].footprint.max().x() <= 60);
      for (std::size_t j = i + 1; j < buildings.size(); ++j) {
        EXPECT_FALSE(buildings[i].footprint.intersects(buildings[j].footprint));
      }
    }
  }
}

TEST(Corridor, ClosedLoopWithContinuousHeading) {
  const WorldSpec ws = small_world(0);
  const double total = corridor_length(ws);
  const double a = 60 - 28, b = 50 - 28, r = 10;
  EXPECT_NEAR(total, 4 * (a - r) + 4 * (b - r) + 2 * testing::kPiRef * r, 1e-9);
  const Pose2 start = corridor_point(ws, 0.0), end = corridor_point(ws, total);
  EXPECT_NEAR(start.x, end.x, 1e-9);
  EXPECT_NEAR(start.y, end.y, 1e-9);
  EXPECT_NEAR(corridor_point(ws, -1.0).x, corridor_point(ws, total - 1.0).x, 1e-9);
  const double ds = 0.1;
  for (double s = 0.0; s < total; s += ds) {
    const Pose2 p = corridor_point(ws, s), q = corridor_point(ws, s + ds);
    // Unit speed along the path, moving in the direction of the heading.
    EXPECT_NEAR(std::hypot(q.x - p.x, q.y - p.y), ds, 1e-3);
    EXPECT_NEAR(wrap_angle(std::atan2(q.y - p.y, q.x - p.x) - p.yaw - wrap_angle(q.yaw - p.yaw) / 2), 0.0, 0.5 * ds / r);
    EXPECT_LE(std::abs(wrap_angle(q.yaw - p.yaw)), ds / r + 1e-9);
  }
}

TEST(Raycast, FlatGroundClosedForm) {
  const TriangleMesh m = testing::ground_grid(-60, -60, 6, 6, 20.0);
  for (double el : {-0.05, -0.2, -0.7, -1.5}) {
    const Eigen::Vector3d dir(std::cos(el) * std::cos(0.4), std::cos(el) * std::sin(0.4), std::sin(el));
    double range = 0.0;
    ASSERT_GE(raycast(m, {1.0, -2.0, 1.5}, dir, 0.0, 100.0, range), 0);
    EXPECT_NEAR(range, 1.5 / std::sin(-el), 1e-9);
  }
  double range = 0.0;
  EXPECT_EQ(raycast(m, {0, 0, 1.5}, {0, 0, 1}, 0.0, 100.0, range), -1);
  EXPECT_EQ(raycast(m, {0, 0, 1.5}, {0, 0, -1}, 2.0, 100.0, range), -1);
}

TEST(SimulateScan, EmptyMeshGivesEmptyCloud) {
  EXPECT_TRUE(simulate_scan(TriangleMesh{}, Isometry3::Identity(), small_intr(), 0.0, 1).empty());
}

TEST(SimulateScan, PointsLieOnTheirTriangles) {
  const WorldSpec ws = small_world(3);
  const TriangleMesh m = build_world(ws);
  const Isometry3 pose = lift_pose(corridor_point(ws, 20.0), 1.73);
  std::vector<int> hits;
  const PointCloud scan = simulate_scan(m, pose, small_intr(), 0.0, 1, &hits);
  ASSERT_GT(scan.size(), 100);
  ASSERT_EQ(hits.size(), std::size_t(scan.size()));
  for (Eigen::Index i = 0; i < scan.size(); ++i) {
    const Eigen::Vector3d p = pose * Eigen::Vector3d(scan.points.col(i));
    const auto& t = m.triangles[hits[i]];
    const Eigen::Vector3d a = m.vertices[t[0]], b = m.vertices[t[1]], c = m.vertices[t[2]];
    const Eigen::Vector3d n = (b - a).cross(c - a).normalized();
    EXPECT_LT(std::abs(n.dot(p - a)), 1e-6);
  }
}

TEST(SimulateScan, NoiselessScanMatchesRenderer) {
  const WorldSpec ws = small_world(4);
  const TriangleMesh m = build_world(ws);
  const SensorIntrinsics intr = small_intr();
  const Isometry3 pose = lift_pose(corridor_point(ws, 55.0), 1.73);
  const RangeImage from_scan = build_vertex_map(simulate_scan(m, pose, intr, 0.0, 1), intr).ranges;
  const TileGrid grid = build_tile_grid(m, 100.0);
  const RangeImage rendered = MeshRenderer(m, grid, intr).render(pose);
  ASSERT_EQ(from_scan.valid_count(), rendered.valid_count());
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      ASSERT_EQ(from_scan.valid(u, v), rendered.valid(u, v));
      if (rendered.valid(u, v)) EXPECT_NEAR(from_scan.range(u, v), rendered.range(u, v), 1e-4);
    }
  }
}

TEST(SimulateScan, NoiseIsRadialWithRequestedSpread) {
  const TriangleMesh room = testing::box_mesh({-20, -20, -2}, {20, 20, 8});
  SensorIntrinsics intr = small_intr();
  intr.width = 360;
  intr.height = 32;
  const PointCloud clean = simulate_scan(room, Isometry3::Identity(), intr, 0.0, 1);
  const PointCloud noisy = simulate_scan(room, Isometry3::Identity(), intr, 0.05, 2);
  ASSERT_EQ(clean.size(), noisy.size());
  double sum = 0.0, sq = 0.0;
  for (Eigen::Index i = 0; i < clean.size(); ++i) {
    const Eigen::Vector3d a = clean.points.col(i), b = noisy.points.col(i);
    EXPECT_LT(a.normalized().cross(b.normalized()).norm(), 1e-9);
    const double e = b.norm() - a.norm();
    sum += e;
    sq += e * e;
  }
  const double n = double(clean.size());
  EXPECT_NEAR(sum / n, 0.0, 4 * 0.05 / std::sqrt(n));
  EXPECT_NEAR(std::sqrt(sq / n), 0.05, 0.005);
}

TEST(ScanFromRangeImage, ReprojectsToTheSameImage) {
  const WorldSpec ws = small_world(6);
  const TriangleMesh m = build_world(ws);
  const SensorIntrinsics intr = small_intr();
  const RangeImage img = raycast_range_image(m, lift_pose(corridor_point(ws, 80.0), 1.73), intr);
  const PointCloud scan = scan_from_range_image(img, intr, 0.0, 1);
  EXPECT_EQ(scan.size(), img.valid_count());
  const RangeImage back = build_vertex_map(scan, intr).ranges;
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      ASSERT_EQ(back.valid(u, v), img.valid(u, v));
      if (img.valid(u, v)) EXPECT_NEAR(back.range(u, v), img.range(u, v), 1e-4);
    }
  }
}

TEST(Trajectory, NoiselessOdometryIntegratesToGroundTruth) {
  const WorldSpec ws = small_world(2);
  TrajectorySpec ts;
  ts.sigma_trans = 0.0;
  ts.sigma_rot = 0.0;
  ts.seed = 7;
  const Trajectory tr = generate_trajectory(ws, ts);
  ASSERT_EQ(tr.poses.size(), 300u);
  ASSERT_EQ(tr.odometry.size(), 300u);
  EXPECT_EQ(tr.odometry[0].trans, 0.0);
  Pose2 p = tr.poses[0];
  for (std::size_t i = 1; i < tr.poses.size(); ++i) {
    p = apply_odometry(p, tr.odometry[i]);
    ASSERT_NEAR(p.x, tr.poses[i].x, 1e-9);
    ASSERT_NEAR(p.y, tr.poses[i].y, 1e-9);
    ASSERT_NEAR(wrap_angle(p.yaw - tr.poses[i].yaw), 0.0, 1e-9);
  }
}

TEST(Trajectory, DriftGrowsWithOdometryNoise) {
  const WorldSpec ws = small_world(2);
  auto mean_drift = [&](double scale) {
    double sum = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      TrajectorySpec ts;
      ts.sigma_trans *= scale;
      ts.sigma_rot *= scale;
      ts.seed = seed;
      const Trajectory tr = generate_trajectory(ws, ts);
      Pose2 p = tr.poses[0];
      for (std::size_t i = 1; i < tr.poses.size(); ++i) p = apply_odometry(p, tr.odometry[i]);
      sum += std::hypot(p.x - tr.poses.back().x, p.y - tr.poses.back().y);
    }
    return sum / 20.0;
  };
  const double d1 = mean_drift(1.0), d4 = mean_drift(4.0);
  EXPECT_GT(d1, 0.0);
  EXPECT_GT(d4, 2.0 * d1);
}

}  // namespace
}  // namespace meshloc
