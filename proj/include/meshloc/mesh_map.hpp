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
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "meshloc/geometry.hpp"
#include "meshloc/range_image.hpp"

namespace meshloc {

enum class VertexLabel : std::uint8_t { kNonGround = 0, kGround = 1 };

/// Indexed triangle mesh in the map frame with per-vertex ground labels.
struct TriangleMesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<Eigen::Vector3i> triangles;
  std::vector<VertexLabel> labels;

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t triangle_count() const { return triangles.size(); }
  bool is_ground(int vertex) const { return labels[vertex] == VertexLabel::kGround; }
  bool is_ground_triangle(std::size_t t) const;

  /// Appends another mesh, offsetting its indices.
  void append(const TriangleMesh& other);

  /// Throws ContractError on out-of-range or repeated indices, or label count mismatch.
  void validate() const;
};

/// Area below which a triangle counts as degenerate.
inline constexpr double kDegenerateArea = 1e-12;

double triangle_area(const TriangleMesh& mesh, std::size_t t);

/// Payload size of the mesh as binary PLY (xyz float32 + rgb uint8, uint8-counted int32 faces).
std::size_t mesh_byte_size(const TriangleMesh& mesh);

struct GroundParams {
  double alpha_thres = deg2rad(30.0);
  /// Height threshold in the scanning sensor frame.
  double z_thres = 1.73;
  double s_voxel = 1.0;

  void validate() const;
};

/// Transforms each scan by its pose and concatenates the results.
PointCloud aggregate_clouds(std::span<const PointCloud> scans, std::span<const Isometry3> poses);

struct PrincipalAxes {
  /// Columns e1, e2, e3, with e3 oriented so that e3.z() >= 0.
  Eigen::Matrix3d axes;
  /// Descending eigenvalues of the empirical covariance.
  Eigen::Vector3d eigenvalues;

  Eigen::Vector3d e1() const { return axes.col(0); }
  Eigen::Vector3d e2() const { return axes.col(1); }
  Eigen::Vector3d e3() const { return axes.col(2); }
};

/// Eigen-decomposition of the point covariance. Throws ContractError when the
/// cloud has fewer than 3 points or is rank-deficient below 1 (all points equal).
PrincipalAxes principal_axes(const Eigen::Ref<const Eigen::Matrix3Xd>& points);

/// Ground iff |n . e3| > cos(alpha_thres) and z < z_thres.
std::vector<VertexLabel> label_ground(const Eigen::Ref<const Eigen::Matrix3Xd>& points,
                                      const Eigen::Ref<const Eigen::Matrix3Xd>& normals,
                                      const Eigen::Vector3d& e3, const GroundParams& params);

/// Oriented, labeled points of one scan, in the sensor frame.
struct LabeledScan {
  Eigen::Matrix3Xd points;
  Eigen::Matrix3Xd normals;
  std::vector<VertexLabel> labels;
};

/// Projects a scan, estimates per-pixel normals and labels every pixel with a
/// valid normal. The height test uses sensor-frame z; e3 is given in the sensor frame.
LabeledScan label_scan(const PointCloud& scan, const SensorIntrinsics& intr, const Eigen::Vector3d& e3,
                       const GroundParams& params);

/// Copies the label of the nearest labeled point within `radius` onto each mesh vertex.
/// Vertices with no labeled point in reach keep their label.
void transfer_labels(TriangleMesh& mesh, const Eigen::Ref<const Eigen::Matrix3Xd>& points,
                     const std::vector<VertexLabel>& labels, double radius);

/// Merges ground vertices sharing a voxel into their centroid and drops collapsed triangles.
TriangleMesh contract_ground_vertices(const TriangleMesh& mesh, double s_voxel);

/// One Jacobi pass of 1-ring averaging over ground vertices, then invalid-triangle removal.
TriangleMesh smooth_ground_vertices(const TriangleMesh& mesh);

/// Drops triangles with repeated indices, zero area, or the same vertex set as an earlier one.
TriangleMesh remove_invalid_triangles(const TriangleMesh& mesh);

/// Drops vertices no triangle references, preserving the order of the rest.
TriangleMesh remove_unreferenced_vertices(const TriangleMesh& mesh);

/// Ground-only triangles and everything else, with vertices copied into each part.
struct MeshSplit {
  TriangleMesh ground;
  TriangleMesh rest;
};
MeshSplit split_ground(const TriangleMesh& mesh);

/// Split, contract, smooth, clean the ground part and recombine it unchanged with the rest.
TriangleMesh simplify_map(const TriangleMesh& mesh, const GroundParams& params);

/// Height lookup over the ground-labeled triangles of a mesh.
class GroundHeightIndex {
 public:
  GroundHeightIndex() = default;
  explicit GroundHeightIndex(const TriangleMesh& mesh, double cell_size = 5.0);

  /// Highest ground surface above (x, y), if any ground triangle covers it.
  std::optional<double> height_at(double x, double y) const;

 private:
  struct Tri {
    Eigen::Vector3d a, b, c;
  };
  double cell_size_ = 5.0;
  Eigen::Vector2d origin_ = Eigen::Vector2d::Zero();
  int nx_ = 0;
  int ny_ = 0;
  std::vector<Tri> tris_;
  std::vector<std::vector<int>> cells_;
};

}  // namespace meshloc
