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

#include "meshloc/mesh_map.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <unordered_map>

#include <Eigen/Eigenvalues>

namespace meshloc {
namespace {

struct VoxelKey {
  std::int64_t x, y, z;
  bool operator==(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const {
    std::size_t h = std::hash<std::int64_t>{}(k.x);
    h ^= std::hash<std::int64_t>{}(k.y) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= std::hash<std::int64_t>{}(k.z) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

VoxelKey voxel_of(const Eigen::Vector3d& p, double s) {
  return {static_cast<std::int64_t>(std::floor(p.x() / s)),
          static_cast<std::int64_t>(std::floor(p.y() / s)),
          static_cast<std::int64_t>(std::floor(p.z() / s))};
}

bool has_repeated_index(const Eigen::Vector3i& t) {
  return t[0] == t[1] || t[1] == t[2] || t[0] == t[2];
}

}  // namespace

bool TriangleMesh::is_ground_triangle(std::size_t t) const {
  const auto& tri = triangles[t];
  return is_ground(tri[0]) && is_ground(tri[1]) && is_ground(tri[2]);
}

void TriangleMesh::append(const TriangleMesh& other) {
  const int offset = static_cast<int>(vertices.size());
  vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
  labels.insert(labels.end(), other.labels.begin(), other.labels.end());
  triangles.reserve(triangles.size() + other.triangles.size());
  for (const auto& t : other.triangles) triangles.push_back(t.array() + offset);
}

void TriangleMesh::validate() const {
  if (labels.size() != vertices.size()) {
    throw ContractError("mesh: " + std::to_string(labels.size()) + " labels for " +
                        std::to_string(vertices.size()) + " vertices");
  }
  const int n = static_cast<int>(vertices.size());
  for (std::size_t i = 0; i < triangles.size(); ++i) {
    const auto& t = triangles[i];
    if ((t.array() < 0).any() || (t.array() >= n).any()) {
      throw ContractError("mesh: triangle " + std::to_string(i) + " has an out-of-range index");
    }
    if (has_repeated_index(t)) {
      throw ContractError("mesh: triangle " + std::to_string(i) + " repeats a vertex");
    }
  }
}

double triangle_area(const TriangleMesh& mesh, std::size_t t) {
  const auto& tri = mesh.triangles[t];
  const Eigen::Vector3d& a = mesh.vertices[tri[0]];
  return 0.5 * (mesh.vertices[tri[1]] - a).cross(mesh.vertices[tri[2]] - a).norm();
}

std::size_t mesh_byte_size(const TriangleMesh& mesh) {
  return mesh.vertices.size() * (3 * sizeof(float) + 3) + mesh.triangles.size() * (1 + 3 * sizeof(std::int32_t));
}

void GroundParams::validate() const {
  if (!(alpha_thres > 0.0) || !(alpha_thres < std::numbers::pi / 2)) {
    throw ContractError("ground: alpha_thres must lie in (0, pi/2)");
  }
  if (!(s_voxel > 0.0)) throw ContractError("ground: s_voxel must be positive");
}

PointCloud aggregate_clouds(std::span<const PointCloud> scans, std::span<const Isometry3> poses) {
  if (scans.size() != poses.size()) {
    throw ContractError("aggregate_clouds: " + std::to_string(scans.size()) + " scans but " +
                        std::to_string(poses.size()) + " poses");
  }
  Eigen::Index total = 0;
  bool all_intensity = !scans.empty();
  for (const auto& s : scans) {
    total += s.size();
    all_intensity = all_intensity && s.intensity.size() == s.size();
  }
  PointCloud out;
  out.points.resize(3, total);
  if (all_intensity) out.intensity.resize(total);
  Eigen::Index offset = 0;
  for (std::size_t i = 0; i < scans.size(); ++i) {
    const auto n = scans[i].size();
    out.points.middleCols(offset, n) = poses[i] * scans[i].points;
    if (all_intensity) out.intensity.segment(offset, n) = scans[i].intensity;
    offset += n;
  }
  return out;
}

PrincipalAxes principal_axes(const Eigen::Ref<const Eigen::Matrix3Xd>& points) {
  if (points.cols() < 3) throw ContractError("principal_axes: need at least 3 points");
  const Eigen::Vector3d mean = points.rowwise().mean();
  const Eigen::Matrix3Xd centered = points.colwise() - mean;
  const Eigen::Matrix3d cov = centered * centered.transpose() / double(points.cols());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  if (solver.info() != Eigen::Success) throw ContractError("principal_axes: eigen-decomposition failed");
  // Eigen returns ascending eigenvalues.
  PrincipalAxes out;
  for (int i = 0; i < 3; ++i) {
    out.eigenvalues[i] = solver.eigenvalues()[2 - i];
    out.axes.col(i) = solver.eigenvectors().col(2 - i).normalized();
  }
  if (!(out.eigenvalues[0] > 1e-12 * std::max(1.0, cov.trace()))) {
    throw ContractError("principal_axes: degenerate cloud (all points coincide)");
  }
  if (out.axes(2, 2) < 0.0) out.axes.col(2) = -out.axes.col(2);
  return out;
}

std::vector<VertexLabel> label_ground(const Eigen::Ref<const Eigen::Matrix3Xd>& points,
                                      const Eigen::Ref<const Eigen::Matrix3Xd>& normals,
                                      const Eigen::Vector3d& e3, const GroundParams& params) {
  if (points.cols() != normals.cols()) {
    throw ContractError("label_ground: point and normal counts differ");
  }
  const double cos_thres = std::cos(params.alpha_thres);
  std::vector<VertexLabel> labels(points.cols(), VertexLabel::kNonGround);
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    if (std::abs(normals.col(i).dot(e3)) > cos_thres && points(2, i) < params.z_thres) {
      labels[i] = VertexLabel::kGround;
    }
  }
  return labels;
}

LabeledScan label_scan(const PointCloud& scan, const SensorIntrinsics& intr, const Eigen::Vector3d& e3,
                       const GroundParams& params) {
  const ProjectedScan projected = build_vertex_map(scan, intr);
  const NormalMap normals = compute_normal_map(projected.vertices);
  const Eigen::Index n = normals.valid_count();
  LabeledScan out;
  out.points.resize(3, n);
  out.normals.resize(3, n);
  Eigen::Index k = 0;
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      if (!normals.valid(u, v)) continue;
      out.points.col(k) = projected.vertices.at(u, v);
      out.normals.col(k) = normals.at(u, v);
      ++k;
    }
  }
  out.labels = label_ground(out.points, out.normals, e3, params);
  return out;
}

void transfer_labels(TriangleMesh& mesh, const Eigen::Ref<const Eigen::Matrix3Xd>& points,
                     const std::vector<VertexLabel>& labels, double radius) {
  if (std::size_t(points.cols()) != labels.size()) {
    throw ContractError("transfer_labels: point and label counts differ");
  }
  if (!(radius > 0.0)) throw ContractError("transfer_labels: radius must be positive");
  std::unordered_map<VoxelKey, std::vector<int>, VoxelKeyHash> buckets;
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    buckets[voxel_of(points.col(i), radius)].push_back(static_cast<int>(i));
  }
  mesh.labels.resize(mesh.vertices.size(), VertexLabel::kNonGround);
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    const Eigen::Vector3d& p = mesh.vertices[v];
    const VoxelKey c = voxel_of(p, radius);
    double best = radius * radius;
    int best_i = -1;
    for (std::int64_t dz = -1; dz <= 1; ++dz) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
          const auto it = buckets.find({c.x + dx, c.y + dy, c.z + dz});
          if (it == buckets.end()) continue;
          for (int i : it->second) {
            const double d2 = (points.col(i) - p).squaredNorm();
            if (d2 <= best) {
              best = d2;
              best_i = i;
            }
          }
        }
      }
    }
    if (best_i >= 0) mesh.labels[v] = labels[std::size_t(best_i)];
  }
}

TriangleMesh contract_ground_vertices(const TriangleMesh& mesh, double s_voxel) {
  if (!(s_voxel > 0.0)) throw ContractError("contract_ground_vertices: s_voxel must be positive");
  TriangleMesh out;
  std::vector<int> remap(mesh.vertices.size());
  std::unordered_map<VoxelKey, int, VoxelKeyHash> voxels;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Eigen::Vector3d& p = mesh.vertices[i];
    if (!mesh.is_ground(static_cast<int>(i))) {
      remap[i] = static_cast<int>(out.vertices.size());
      out.vertices.push_back(p);
      out.labels.push_back(VertexLabel::kNonGround);
      continue;
    }
    auto [it, inserted] = voxels.try_emplace(voxel_of(p, s_voxel), static_cast<int>(out.vertices.size()));
    if (inserted) {
      out.vertices.push_back(p);
      out.labels.push_back(VertexLabel::kGround);
    }
    remap[i] = it->second;
  }
  // Merged vertices sit at the centroid of their voxel members.
  std::vector<Eigen::Vector3d> acc(out.vertices.size(), Eigen::Vector3d::Zero());
  std::vector<int> n(out.vertices.size(), 0);
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    if (!mesh.is_ground(static_cast<int>(i))) continue;
    acc[remap[i]] += mesh.vertices[i];
    ++n[remap[i]];
  }
  for (std::size_t j = 0; j < out.vertices.size(); ++j) {
    if (n[j] > 0) out.vertices[j] = acc[j] / double(n[j]);
  }
  out.triangles.reserve(mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    const Eigen::Vector3i r(remap[t[0]], remap[t[1]], remap[t[2]]);
    if (!has_repeated_index(r)) out.triangles.push_back(r);
  }
  return out;
}

TriangleMesh smooth_ground_vertices(const TriangleMesh& mesh) {
  std::vector<std::set<int>> ring(mesh.vertices.size());
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const int a = t[k];
      const int b = t[(k + 1) % 3];
      if (a == b) continue;
      ring[a].insert(b);
      ring[b].insert(a);
    }
  }
  TriangleMesh out = mesh;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    if (!mesh.is_ground(static_cast<int>(i)) || ring[i].empty()) continue;
    Eigen::Vector3d sum = mesh.vertices[i];
    for (int j : ring[i]) sum += mesh.vertices[j];
    out.vertices[i] = sum / double(ring[i].size() + 1);
  }
  return remove_invalid_triangles(out);
}

TriangleMesh remove_invalid_triangles(const TriangleMesh& mesh) {
  TriangleMesh out;
  out.vertices = mesh.vertices;
  out.labels = mesh.labels;
  out.triangles.reserve(mesh.triangles.size());
  std::set<std::array<int, 3>> seen;
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const auto& t = mesh.triangles[i];
    if (has_repeated_index(t) || triangle_area(mesh, i) <= kDegenerateArea) continue;
    std::array<int, 3> key{t[0], t[1], t[2]};
    std::sort(key.begin(), key.end());
    if (!seen.insert(key).second) continue;
    out.triangles.push_back(t);
  }
  return out;
}

TriangleMesh remove_unreferenced_vertices(const TriangleMesh& mesh) {
  std::vector<int> remap(mesh.vertices.size(), -1);
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) remap[t[k]] = 0;
  }
  TriangleMesh out;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    if (remap[i] < 0) continue;
    remap[i] = static_cast<int>(out.vertices.size());
    out.vertices.push_back(mesh.vertices[i]);
    out.labels.push_back(mesh.labels[i]);
  }
  out.triangles.reserve(mesh.triangles.size());
  for (const auto& t : mesh.triangles) out.triangles.emplace_back(remap[t[0]], remap[t[1]], remap[t[2]]);
  return out;
}

MeshSplit split_ground(const TriangleMesh& mesh) {
  const std::size_t nv = mesh.vertices.size();
  std::vector<char> in_ground(nv, 0), in_rest(nv, 0), used(nv, 0);
  std::vector<char> ground_tri(mesh.triangles.size(), 0);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    ground_tri[t] = mesh.is_ground_triangle(t) ? 1 : 0;
    for (int k = 0; k < 3; ++k) {
      const int v = mesh.triangles[t][k];
      used[v] = 1;
      (ground_tri[t] ? in_ground : in_rest)[v] = 1;
    }
  }
  // Isolated vertices follow their own label.
  for (std::size_t i = 0; i < nv; ++i) {
    if (!used[i]) (mesh.is_ground(static_cast<int>(i)) ? in_ground : in_rest)[i] = 1;
  }
  auto extract = [&](const std::vector<char>& keep, bool want_ground) {
    TriangleMesh part;
    std::vector<int> remap(nv, -1);
    for (std::size_t i = 0; i < nv; ++i) {
      if (!keep[i]) continue;
      remap[i] = static_cast<int>(part.vertices.size());
      part.vertices.push_back(mesh.vertices[i]);
      part.labels.push_back(mesh.labels[i]);
    }
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
      if (bool(ground_tri[t]) != want_ground) continue;
      const auto& tri = mesh.triangles[t];
      part.triangles.emplace_back(remap[tri[0]], remap[tri[1]], remap[tri[2]]);
    }
    return part;
  };
  return {extract(in_ground, true), extract(in_rest, false)};
}

TriangleMesh simplify_map(const TriangleMesh& mesh, const GroundParams& params) {
  params.validate();
  mesh.validate();
  if (std::none_of(mesh.labels.begin(), mesh.labels.end(),
                   [](VertexLabel l) { return l == VertexLabel::kGround; })) {
    return mesh;
  }
  MeshSplit parts = split_ground(mesh);
  TriangleMesh ground = contract_ground_vertices(parts.ground, params.s_voxel);
  ground = smooth_ground_vertices(ground);
  ground = remove_unreferenced_vertices(remove_invalid_triangles(ground));
  TriangleMesh out = std::move(parts.rest);
  out.append(ground);
  return out;
}

GroundHeightIndex::GroundHeightIndex(const TriangleMesh& mesh, double cell_size) : cell_size_(cell_size) {
  Eigen::AlignedBox2d box;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    if (!mesh.is_ground_triangle(t)) continue;
    const auto& tri = mesh.triangles[t];
    Tri g{mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]};
    const Eigen::Vector2d e1 = (g.b - g.a).head<2>();
    const Eigen::Vector2d e2 = (g.c - g.a).head<2>();
    const double area2 = e1.x() * e2.y() - e1.y() * e2.x();
    if (std::abs(area2) < 1e-12) continue;
    tris_.push_back(g);
    box.extend(g.a.head<2>());
    box.extend(g.b.head<2>());
    box.extend(g.c.head<2>());
  }
  if (tris_.empty()) return;
  origin_ = box.min();
  nx_ = static_cast<int>(std::floor(box.sizes().x() / cell_size_)) + 1;
  ny_ = static_cast<int>(std::floor(box.sizes().y() / cell_size_)) + 1;
  cells_.assign(std::size_t(nx_) * ny_, {});
  for (std::size_t i = 0; i < tris_.size(); ++i) {
    const auto& g = tris_[i];
    const Eigen::Vector2d lo = g.a.head<2>().cwiseMin(g.b.head<2>()).cwiseMin(g.c.head<2>());
    const Eigen::Vector2d hi = g.a.head<2>().cwiseMax(g.b.head<2>()).cwiseMax(g.c.head<2>());
    const int x0 = std::clamp(int(std::floor((lo.x() - origin_.x()) / cell_size_)), 0, nx_ - 1);
    const int x1 = std::clamp(int(std::floor((hi.x() - origin_.x()) / cell_size_)), 0, nx_ - 1);
    const int y0 = std::clamp(int(std::floor((lo.y() - origin_.y()) / cell_size_)), 0, ny_ - 1);
    const int y1 = std::clamp(int(std::floor((hi.y() - origin_.y()) / cell_size_)), 0, ny_ - 1);
    for (int iy = y0; iy <= y1; ++iy) {
      for (int ix = x0; ix <= x1; ++ix) cells_[std::size_t(iy) * nx_ + ix].push_back(static_cast<int>(i));
    }
  }
}

std::optional<double> GroundHeightIndex::height_at(double x, double y) const {
  if (tris_.empty()) return std::nullopt;
  const int ix = static_cast<int>(std::floor((x - origin_.x()) / cell_size_));
  const int iy = static_cast<int>(std::floor((y - origin_.y()) / cell_size_));
  if (ix < 0 || iy < 0 || ix >= nx_ || iy >= ny_) return std::nullopt;
  std::optional<double> best;
  constexpr double kEps = 1e-9;
  for (int i : cells_[std::size_t(iy) * nx_ + ix]) {
    const auto& g = tris_[i];
    const Eigen::Vector2d e1 = (g.b - g.a).head<2>();
    const Eigen::Vector2d e2 = (g.c - g.a).head<2>();
    const Eigen::Vector2d q = Eigen::Vector2d(x, y) - g.a.head<2>();
    const double det = e1.x() * e2.y() - e1.y() * e2.x();
    const double s = (q.x() * e2.y() - q.y() * e2.x()) / det;
    const double t = (e1.x() * q.y() - e1.y() * q.x()) / det;
    if (s < -kEps || t < -kEps || s + t > 1.0 + kEps) continue;
    const double z = g.a.z() + s * (g.b.z() - g.a.z()) + t * (g.c.z() - g.a.z());
    if (!best || z > *best) best = z;
  }
  return best;
}

}  // namespace meshloc
