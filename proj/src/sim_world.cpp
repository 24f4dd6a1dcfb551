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
#include <limits>
#include <numbers>
#include <random>

namespace meshloc {
namespace {

constexpr double kBaryEps = 1e-10;

void add_box(TriangleMesh& mesh, const Building& b, double ground_z) {
  const int base = static_cast<int>(mesh.vertices.size());
  const Eigen::Vector2d lo = b.footprint.min();
  const Eigen::Vector2d hi = b.footprint.max();
  const Eigen::Vector2d corners[4] = {{lo.x(), lo.y()}, {hi.x(), lo.y()}, {hi.x(), hi.y()}, {lo.x(), hi.y()}};
  for (const auto& c : corners) mesh.vertices.emplace_back(c.x(), c.y(), ground_z);
  for (const auto& c : corners) mesh.vertices.emplace_back(c.x(), c.y(), ground_z + b.height);
  mesh.labels.insert(mesh.labels.end(), 8, VertexLabel::kNonGround);
  for (int k = 0; k < 4; ++k) {
    const int k1 = (k + 1) % 4;
    mesh.triangles.emplace_back(base + k, base + k1, base + 4 + k1);
    mesh.triangles.emplace_back(base + k, base + 4 + k1, base + 4 + k);
  }
  mesh.triangles.emplace_back(base + 4, base + 5, base + 6);
  mesh.triangles.emplace_back(base + 4, base + 6, base + 7);
}

}  // namespace

void WorldSpec::validate() const {
  if (!(extent.x() > 0.0) || !(extent.y() > 0.0)) throw ContractError("world: extent must be positive");
  if (building_count < 0) throw ContractError("world: building_count must be non-negative");
  if (!(ground_resolution > 0.0)) throw ContractError("world: ground_resolution must be positive");
  if (!(footprint_range.x() > 0.0) || footprint_range.y() < footprint_range.x()) {
    throw ContractError("world: invalid footprint range");
  }
  if (!(height_range.x() > 0.0) || height_range.y() < height_range.x()) {
    throw ContractError("world: invalid height range");
  }
  const double half = 0.5 * std::min(extent.x(), extent.y());
  if (!(corridor_inset < half) || !(corner_radius >= 0.0) || corner_radius > half - corridor_inset) {
    throw ContractError("world: corridor does not fit inside the extent");
  }
}

std::size_t TrajectorySpec::frame_count() const {
  return static_cast<std::size_t>(std::llround(length / speed)) + 1;
}

void TrajectorySpec::validate() const {
  if (!(length > 0.0) || !(speed > 0.0)) throw ContractError("trajectory: length and speed must be positive");
  if (!(sigma_trans >= 0.0) || !(sigma_rot >= 0.0)) throw ContractError("trajectory: noise must be non-negative");
}

double corridor_length(const WorldSpec& spec) {
  const double a = 0.5 * spec.extent.x() - spec.corridor_inset;
  const double b = 0.5 * spec.extent.y() - spec.corridor_inset;
  const double r = spec.corner_radius;
  return 4.0 * (a - r) + 4.0 * (b - r) + 2.0 * std::numbers::pi * r;
}

Pose2 corridor_point(const WorldSpec& spec, double s) {
  const double a = 0.5 * spec.extent.x() - spec.corridor_inset;
  const double b = 0.5 * spec.extent.y() - spec.corridor_inset;
  const double r = spec.corner_radius;
  const double total = corridor_length(spec);
  s = std::fmod(s, total);
  if (s < 0.0) s += total;
  const double sx = 2.0 * (a - r);
  const double sy = 2.0 * (b - r);
  const double arc = 0.5 * std::numbers::pi * r;
  // Counter-clockwise, starting at the lower-left end of the bottom edge.
  struct Leg {
    double length;
    Eigen::Vector2d start;
    double heading;
    Eigen::Vector2d center;  // arcs only
  };
  const double h = std::numbers::pi / 2;
  const Leg legs[8] = {
      {sx, {-a + r, -b}, 0.0, {}},          {arc, {}, 0.0, {a - r, -b + r}},
      {sy, {a, -b + r}, h, {}},             {arc, {}, h, {a - r, b - r}},
      {sx, {a - r, b}, 2 * h, {}},          {arc, {}, 2 * h, {-a + r, b - r}},
      {sy, {-a, b - r}, 3 * h, {}},         {arc, {}, 3 * h, {-a + r, -b + r}},
  };
  for (int i = 0; i < 8; ++i) {
    const Leg& leg = legs[i];
    if (s > leg.length && i < 7) {
      s -= leg.length;
      continue;
    }
    s = std::min(s, leg.length);
    if (i % 2 == 0) {
      return {leg.start.x() + s * std::cos(leg.heading), leg.start.y() + s * std::sin(leg.heading),
              wrap_angle(leg.heading)};
    }
    const double phi = r > 0.0 ? s / r : 0.0;
    const double radial = leg.heading - h + phi;  // direction from the arc center to the point
    return {leg.center.x() + r * std::cos(radial), leg.center.y() + r * std::sin(radial),
            wrap_angle(leg.heading + phi)};
  }
  return {};
}

std::vector<Building> place_buildings(const WorldSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> side(spec.footprint_range.x(), spec.footprint_range.y());
  std::uniform_real_distribution<double> height(spec.height_range.x(), spec.height_range.y());
  std::uniform_real_distribution<double> ux(-0.5 * spec.extent.x(), 0.5 * spec.extent.x());
  std::uniform_real_distribution<double> uy(-0.5 * spec.extent.y(), 0.5 * spec.extent.y());

  // Dense samples of the loop centerline for corridor clearance.
  std::vector<Eigen::Vector2d> loop;
  const double total = corridor_length(spec);
  for (double s = 0.0; s < total; s += 0.5) {
    const Pose2 p = corridor_point(spec, s);
    loop.emplace_back(p.x, p.y);
  }
  const double clearance = spec.corridor_half_width + 0.5;
  const Eigen::AlignedBox2d world(-0.5 * spec.extent, 0.5 * spec.extent);

  std::vector<Building> out;
  const int max_attempts = 200 * std::max(1, spec.building_count);
  for (int attempt = 0; attempt < max_attempts && int(out.size()) < spec.building_count; ++attempt) {
    const double sx = side(rng), sy = side(rng), hz = height(rng);
    const Eigen::Vector2d c(ux(rng), uy(rng));
    const Eigen::Vector2d half(0.5 * sx, 0.5 * sy);
    const Eigen::AlignedBox2d box(c - half, c + half);
    if (!world.contains(box)) continue;
    const bool hits_corridor = std::any_of(loop.begin(), loop.end(), [&](const Eigen::Vector2d& p) {
      return box.squaredExteriorDistance(p) < clearance * clearance;
    });
    if (hits_corridor) continue;
    const bool overlaps = std::any_of(out.begin(), out.end(), [&](const Building& b) {
      Eigen::AlignedBox2d grown = b.footprint;
      grown.extend(b.footprint.min() - Eigen::Vector2d::Constant(1.0));
      grown.extend(b.footprint.max() + Eigen::Vector2d::Constant(1.0));
      return grown.intersects(box);
    });
    if (overlaps) continue;
    out.push_back({box, hz});
  }
  return out;
}

TriangleMesh build_world(const WorldSpec& spec) {
  spec.validate();
  TriangleMesh mesh;
  const int nx = std::max(1, static_cast<int>(std::ceil(spec.extent.x() / spec.ground_resolution - 1e-9)));
  const int ny = std::max(1, static_cast<int>(std::ceil(spec.extent.y() / spec.ground_resolution - 1e-9)));
  const double dx = spec.extent.x() / nx;
  const double dy = spec.extent.y() / ny;
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      mesh.vertices.emplace_back(-0.5 * spec.extent.x() + i * dx, -0.5 * spec.extent.y() + j * dy, spec.ground_z);
    }
  }
  mesh.labels.assign(mesh.vertices.size(), VertexLabel::kGround);
  const auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      mesh.triangles.emplace_back(id(i, j), id(i + 1, j), id(i + 1, j + 1));
      mesh.triangles.emplace_back(id(i, j), id(i + 1, j + 1), id(i, j + 1));
    }
  }
  for (const Building& b : place_buildings(spec)) add_box(mesh, b, spec.ground_z);
  return mesh;
}

int raycast(const TriangleMesh& mesh, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
            double min_range, double max_range, double& range) {
  int best = -1;
  double best_t = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < mesh.triangles.size(); ++k) {
    const auto& tri = mesh.triangles[k];
    const Eigen::Vector3d& v0 = mesh.vertices[tri[0]];
    const Eigen::Vector3d e1 = mesh.vertices[tri[1]] - v0;
    const Eigen::Vector3d e2 = mesh.vertices[tri[2]] - v0;
    const Eigen::Vector3d p = dir.cross(e2);
    const double det = e1.dot(p);
    if (det == 0.0) continue;
    const double inv = 1.0 / det;
    const Eigen::Vector3d tv = origin - v0;
    const double u = tv.dot(p) * inv;
    if (u < -kBaryEps || u > 1.0 + kBaryEps) continue;
    const Eigen::Vector3d q = tv.cross(e1);
    const double v = dir.dot(q) * inv;
    if (v < -kBaryEps || u + v > 1.0 + kBaryEps) continue;
    const double t = e2.dot(q) * inv;
    if (t < min_range || t > max_range || t >= best_t) continue;
    best_t = t;
    best = static_cast<int>(k);
  }
  if (best >= 0) range = best_t;
  return best;
}

RangeImage raycast_range_image(const TriangleMesh& mesh, const Isometry3& pose, const SensorIntrinsics& intr,
                               Eigen::ArrayXXi* hit_triangles) {
  intr.validate();
  RangeImage image(intr.width, intr.height);
  if (hit_triangles) hit_triangles->setConstant(intr.height, intr.width, -1);
  const Eigen::Vector3d origin = pose.translation();
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      const Eigen::Vector3d dir = pose.linear() * pixel_ray(u, v, intr);
      double r = 0.0;
      const int k = raycast(mesh, origin, dir, intr.min_range, intr.max_range, r);
      if (k < 0) continue;
      image.set(u, v, static_cast<float>(r));
      if (hit_triangles) (*hit_triangles)(v, u) = k;
    }
  }
  return image;
}

PointCloud simulate_scan(const TriangleMesh& mesh, const Isometry3& pose, const SensorIntrinsics& intr,
                         double noise_sigma, std::uint64_t seed, std::vector<int>* hit_triangles) {
  intr.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sigma > 0.0 ? noise_sigma : 1.0);
  std::vector<Eigen::Vector3d> pts;
  if (hit_triangles) hit_triangles->clear();
  const Eigen::Vector3d origin = pose.translation();
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      const Eigen::Vector3d ray = pixel_ray(u, v, intr);
      double r = 0.0;
      const int k = raycast(mesh, origin, pose.linear() * ray, intr.min_range, intr.max_range, r);
      if (k < 0) continue;
      if (noise_sigma > 0.0) r += noise(rng);
      pts.push_back(r * ray);
      if (hit_triangles) hit_triangles->push_back(k);
    }
  }
  PointCloud cloud;
  cloud.points.resize(3, Eigen::Index(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) cloud.points.col(Eigen::Index(i)) = pts[i];
  return cloud;
}

PointCloud scan_from_range_image(const RangeImage& image, const SensorIntrinsics& intr, double noise_sigma,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sigma > 0.0 ? noise_sigma : 1.0);
  PointCloud cloud;
  cloud.points.resize(3, image.valid_count());
  Eigen::Index k = 0;
  for (int v = 0; v < image.height(); ++v) {
    for (int u = 0; u < image.width(); ++u) {
      if (!image.valid(u, v)) continue;
      double r = image.range(u, v);
      if (noise_sigma > 0.0) r += noise(rng);
      cloud.points.col(k++) = r * pixel_ray(u, v, intr);
    }
  }
  return cloud;
}

Trajectory generate_trajectory(const WorldSpec& world, const TrajectorySpec& spec) {
  world.validate();
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> start(0.0, corridor_length(world));
  std::normal_distribution<double> n01(0.0, 1.0);
  const double s0 = start(rng);
  Trajectory out;
  const std::size_t n = spec.frame_count();
  out.poses.reserve(n);
  out.odometry.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.poses.push_back(corridor_point(world, s0 + double(i) * spec.speed));
  out.odometry.push_back({});
  for (std::size_t i = 1; i < n; ++i) {
    MotionCommand u = odometry_between(out.poses[i - 1], out.poses[i]);
    u.trans += spec.sigma_trans * n01(rng);
    u.rot1 += spec.sigma_rot * n01(rng);
    u.rot2 += spec.sigma_rot * n01(rng);
    out.odometry.push_back(u);
  }
  return out;
}

}  // namespace meshloc
