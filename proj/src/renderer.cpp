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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace meshloc {
namespace {

constexpr double kPi = std::numbers::pi;
// Barycentric slack shared with the brute-force ray caster; closes cracks on shared edges.
constexpr double kBaryEps = 1e-10;

/// Elevation extremes of the great-circle arc between unit directions a and b.
void arc_elevation_extremes(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double& e_lo, double& e_hi) {
  const Eigen::Vector3d n = a.cross(b);
  const double nn = n.norm();
  if (nn < 1e-12) {
    // Antipodal endpoints mean the edge passes through the sensor.
    if (a.dot(b) < 0.0) {
      e_lo = -kPi / 2;
      e_hi = kPi / 2;
    }
    return;
  }
  const Eigen::Vector3d nh = n / nn;
  Eigen::Vector3d top = Eigen::Vector3d::UnitZ() - nh.z() * nh;
  const double tn = top.norm();
  if (tn < 1e-12) return;  // Arc lies on the horizon.
  top /= tn;
  for (const Eigen::Vector3d& c : {top, Eigen::Vector3d(-top)}) {
    if (a.cross(c).dot(n) >= 0.0 && c.cross(b).dot(n) >= 0.0) {
      const double e = std::asin(std::clamp(c.z(), -1.0, 1.0));
      e_lo = std::min(e_lo, e);
      e_hi = std::max(e_hi, e);
    }
  }
}

}  // namespace

MeshRenderer::MeshRenderer(const TriangleMesh& mesh, const TileGrid& grid, const SensorIntrinsics& intr)
    : mesh_(mesh), grid_(grid), intr_(intr) {
  intr_.validate();
  const std::size_t n = std::size_t(intr_.pixel_count());
  ray_x_.resize(n);
  ray_y_.resize(n);
  ray_z_.resize(n);
  for (int v = 0; v < intr_.height; ++v) {
    for (int u = 0; u < intr_.width; ++u) {
      const Eigen::Vector3d d = pixel_ray(u, v, intr_);
      const std::size_t i = std::size_t(v) * intr_.width + u;
      ray_x_[i] = d.x();
      ray_y_[i] = d.y();
      ray_z_[i] = d.z();
    }
  }
  bounds_.reserve(mesh_.triangles.size());
  for (const auto& t : mesh_.triangles) {
    Eigen::AlignedBox3d box(mesh_.vertices[t[0]]);
    box.extend(mesh_.vertices[t[1]]);
    box.extend(mesh_.vertices[t[2]]);
    bounds_.push_back(box);
  }
}

RangeImage MeshRenderer::render(const Isometry3& pose, std::span<const TileCoord> tiles) const {
  RangeImage out(intr_.width, intr_.height);
  Scratch scratch;
  render_into(pose, tiles, out, scratch);
  return out;
}

RangeImage MeshRenderer::render(const Isometry3& pose) const {
  const auto tiles = tiles_near(grid_, pose.translation().head<2>(), intr_.max_range);
  return render(pose, tiles);
}

void MeshRenderer::render_into(const Isometry3& pose, std::span<const TileCoord> tiles, RangeImage& out,
                               Scratch& scratch) const {
  const std::size_t npix = std::size_t(intr_.pixel_count());
  if (out.width() != intr_.width || out.height() != intr_.height) out = RangeImage(intr_.width, intr_.height);
  float* depth = out.mutable_ranges().data();
  std::fill(depth, depth + npix, std::numeric_limits<float>::infinity());
  if (scratch.stamp.size() != mesh_.triangles.size()) {
    scratch.stamp.assign(mesh_.triangles.size(), 0);
    scratch.epoch = 0;
  }
  if (++scratch.epoch == 0) {
    std::fill(scratch.stamp.begin(), scratch.stamp.end(), 0);
    scratch.epoch = 1;
  }

  const Eigen::Matrix3d Rt = pose.linear().transpose();
  const Eigen::Vector3d origin = pose.translation();
  const double max_r2 = intr_.max_range * intr_.max_range;
  const double min_r2 = intr_.min_range * intr_.min_range;

  for (const TileCoord& c : tiles) {
    const std::vector<int>* tris = grid_.triangles_in(c);
    if (!tris) continue;
    for (int t : *tris) {
      if (scratch.stamp[t] == scratch.epoch) continue;
      scratch.stamp[t] = scratch.epoch;
      if (bounds_[t].squaredExteriorDistance(origin) > max_r2) continue;
      const auto& tri = mesh_.triangles[t];
      const Eigen::Vector3d p0 = Rt * (mesh_.vertices[tri[0]] - origin);
      const Eigen::Vector3d p1 = Rt * (mesh_.vertices[tri[1]] - origin);
      const Eigen::Vector3d p2 = Rt * (mesh_.vertices[tri[2]] - origin);
      // Distance is convex, so a triangle inside the min-range ball has all vertices inside.
      if (p0.squaredNorm() < min_r2 && p1.squaredNorm() < min_r2 && p2.squaredNorm() < min_r2) continue;
      rasterize(p0, p1, p2, depth);
    }
  }

  bool* valid = out.mutable_mask().data();
  for (std::size_t i = 0; i < npix; ++i) {
    const bool hit = depth[i] != std::numeric_limits<float>::infinity();
    valid[i] = hit;
    if (!hit) depth[i] = 0.0f;
  }
}

void MeshRenderer::rasterize(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1, const Eigen::Vector3d& p2,
                             float* depth) const {
  const int w = intr_.width;
  const int h = intr_.height;
  const double fov = intr_.fov();

  // Does the vertical axis through the sensor pierce the triangle's xy footprint?
  const Eigen::Vector2d a2 = p0.head<2>(), b2 = p1.head<2>(), c2 = p2.head<2>();
  const double area2 = (b2 - a2).x() * (c2 - a2).y() - (b2 - a2).y() * (c2 - a2).x();
  const auto edge = [](const Eigen::Vector2d& p, const Eigen::Vector2d& q) { return p.x() * q.y() - p.y() * q.x(); };
  // Signed areas of (origin, edge) sub-triangles.
  const double s0 = edge(a2, b2), s1 = edge(b2, c2), s2 = edge(c2, a2);
  const double scale = 1e-12 * (a2.squaredNorm() + b2.squaredNorm() + c2.squaredNorm() + 1e-300);
  bool around_axis;
  if (std::abs(area2) <= scale) {
    // Vertical triangle: treat as surrounding the axis if its footprint segment passes near it.
    around_axis = std::abs(s0) <= scale && std::abs(s1) <= scale && std::abs(s2) <= scale;
  } else {
    const double sg = area2 > 0 ? 1.0 : -1.0;
    around_axis = sg * s0 >= -scale && sg * s1 >= -scale && sg * s2 >= -scale;
  }

  // Column interval in continuous image coordinates.
  int u_begin = 0, u_end = w - 1;
  if (!around_axis) {
    double c[3];
    const Eigen::Vector3d* ps[3] = {&p0, &p1, &p2};
    for (int k = 0; k < 3; ++k) c[k] = 0.5 * (1.0 - std::atan2(ps[k]->y(), ps[k]->x()) / kPi) * w;
    double lo = std::min({c[0], c[1], c[2]});
    double hi = std::max({c[0], c[1], c[2]});
    if (hi - lo > 0.5 * w) {
      // Seam crossing: shift the low side up by one turn.
      for (double& x : c) {
        if (x < 0.5 * w) x += w;
      }
      lo = std::min({c[0], c[1], c[2]});
      hi = std::max({c[0], c[1], c[2]});
    }
    u_begin = static_cast<int>(std::ceil(lo - 0.5)) - 1;
    u_end = static_cast<int>(std::floor(hi - 0.5)) + 1;
    if (u_end - u_begin + 1 >= w) {
      u_begin = 0;
      u_end = w - 1;
    }
  }

  // Elevation interval over the spherical image of the triangle.
  if (std::min({p0.squaredNorm(), p1.squaredNorm(), p2.squaredNorm()}) < 1e-24) {
    u_begin = 0;
    u_end = w - 1;
    around_axis = true;
  }
  const Eigen::Vector3d d0 = p0.normalized(), d1 = p1.normalized(), d2 = p2.normalized();
  double e_lo = std::asin(std::clamp(d0.z(), -1.0, 1.0));
  double e_hi = e_lo;
  for (const Eigen::Vector3d* d : {&d1, &d2}) {
    const double e = std::asin(std::clamp(d->z(), -1.0, 1.0));
    e_lo = std::min(e_lo, e);
    e_hi = std::max(e_hi, e);
  }
  arc_elevation_extremes(d0, d1, e_lo, e_hi);
  arc_elevation_extremes(d1, d2, e_lo, e_hi);
  arc_elevation_extremes(d2, d0, e_lo, e_hi);
  if (around_axis) {
    if (std::abs(area2) <= scale || !std::isfinite(e_lo + e_hi)) {
      e_lo = -kPi / 2;
      e_hi = kPi / 2;
    } else {
      // Height of the triangle's plane on the axis.
      const double l0 = s1 / area2, l1 = s2 / area2, l2 = s0 / area2;
      const double z_axis = l0 * p0.z() + l1 * p1.z() + l2 * p2.z();
      if (z_axis >= 0.0) e_hi = kPi / 2;
      if (z_axis <= 0.0) e_lo = -kPi / 2;
    }
  }
  const double row_top = (1.0 - (e_hi + intr_.fov_up) / fov) * h;
  const double row_bottom = (1.0 - (e_lo + intr_.fov_up) / fov) * h;
  if (row_top > h + 1.0 || row_bottom < -1.0) return;
  const int v_begin = std::max(0, static_cast<int>(std::ceil(row_top - 0.5)) - 1);
  const int v_end = std::min(h - 1, static_cast<int>(std::floor(row_bottom - 0.5)) + 1);
  if (v_begin > v_end) return;

  // Moller-Trumbore with the ray origin at the sensor, folded into per-triangle constants.
  const Eigen::Vector3d e1 = p1 - p0;
  const Eigen::Vector3d e2 = p2 - p0;
  const Eigen::Vector3d s = -p0;
  const Eigen::Vector3d m = e2.cross(e1);  // det = d . m
  const Eigen::Vector3d a = e2.cross(s);   // u * det = d . a
  const Eigen::Vector3d q = s.cross(e1);   // v * det = d . q
  const double t_num = e2.dot(q);
  const double r_min = intr_.min_range;
  const double r_max = intr_.max_range;

  const auto scan_columns = [&](std::size_t row, int c0, int c1) {
    for (int u = c0; u <= c1; ++u) {
      const std::size_t i = row + u;
      const double dx = ray_x_[i], dy = ray_y_[i], dz = ray_z_[i];
      const double det = dx * m.x() + dy * m.y() + dz * m.z();
      if (det == 0.0) continue;
      const double inv = 1.0 / det;
      const double t = t_num * inv;
      if (t < r_min || t > r_max || t >= depth[i]) continue;
      const double bu = (dx * a.x() + dy * a.y() + dz * a.z()) * inv;
      if (bu < -kBaryEps) continue;
      const double bv = (dx * q.x() + dy * q.y() + dz * q.z()) * inv;
      if (bv < -kBaryEps || bu + bv > 1.0 + kBaryEps) continue;
      depth[i] = static_cast<float>(t);
    }
  };
  // Split the (possibly wrapped) column interval into in-range runs.
  int runs[2][2];
  int run_count = 0;
  if (u_begin >= w) {
    u_begin -= w;
    u_end -= w;
  }
  if (u_begin < 0) {
    runs[run_count][0] = u_begin + w;
    runs[run_count++][1] = w - 1;
    runs[run_count][0] = 0;
    runs[run_count++][1] = u_end;
  } else if (u_end >= w) {
    runs[run_count][0] = u_begin;
    runs[run_count++][1] = w - 1;
    runs[run_count][0] = 0;
    runs[run_count++][1] = u_end - w;
  } else {
    runs[run_count][0] = u_begin;
    runs[run_count++][1] = u_end;
  }
  for (int v = v_begin; v <= v_end; ++v) {
    const std::size_t row = std::size_t(v) * w;
    for (int k = 0; k < run_count; ++k) scan_columns(row, runs[k][0], runs[k][1]);
  }
}

RangeImage render_range_image(const TriangleMesh& mesh, const TileGrid& grid, const RenderRequest& req) {
  const MeshRenderer renderer(mesh, grid, req.intr);
  return renderer.render(req.pose, req.tiles);
}

std::vector<RangeImage> render_batch(const TriangleMesh& mesh, const TileGrid& grid,
                                     std::span<const Isometry3> poses, const SensorIntrinsics& intr,
                                     int threads) {
  const MeshRenderer renderer(mesh, grid, intr);
  std::vector<RangeImage> out(poses.size(), RangeImage(intr.width, intr.height));
  std::vector<MeshRenderer::Scratch> scratch(std::max(1, threads));
  parallel_for(poses.size(), threads, [&](std::size_t i, std::size_t worker) {
    const auto tiles = tiles_near(grid, poses[i].translation().head<2>(), intr.max_range);
    renderer.render_into(poses[i], tiles, out[i], scratch[worker]);
  });
  return out;
}

Isometry3 particle_sensor_pose(const Pose2& pose, const GroundHeightIndex& ground, double sensor_height) {
  const double base = ground.height_at(pose.x, pose.y).value_or(0.0);
  return lift_pose(pose, base + sensor_height);
}

}  // namespace meshloc
