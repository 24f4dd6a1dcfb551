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

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>

#include <Eigen/Core>

#include "meshloc/error.hpp"
#include "meshloc/geometry.hpp"

namespace meshloc {

/// Image geometry of a spinning LiDAR plus its usable range interval.
///
/// Rows are indexed top to bottom. Under the projection used throughout the
/// library a point at elevation e lands in row floor((1 - (e + fov_up) / fov) * height),
/// so the rows cover elevations in (-fov_up, fov_down].
struct SensorIntrinsics {
  int width = 900;
  int height = 64;
  double fov_up = deg2rad(3.0);
  double fov_down = deg2rad(25.0);
  double min_range = 0.5;
  double max_range = 50.0;
  /// Mount height above the ground; also the render height of particles.
  double sensor_height = 1.73;

  double fov() const { return fov_up + fov_down; }
  Eigen::Index pixel_count() const { return Eigen::Index(width) * height; }

  /// Throws ContractError when an invariant does not hold.
  void validate() const;
};

/// Points in the sensor frame, one per column.
struct PointCloud {
  Eigen::Matrix3Xd points;
  /// Optional per-point intensity; empty when the source has none.
  Eigen::VectorXf intensity;

  Eigen::Index size() const { return points.cols(); }
  bool empty() const { return points.cols() == 0; }
};

template <typename Scalar>
struct PixelHit {
  int u;
  int v;
  Scalar range;
};

/// Spherical projection of a sensor-frame point. Absent when the point is
/// outside the range interval or the vertical field of view.
template <typename Derived>
std::optional<PixelHit<typename Derived::Scalar>> project_point(
    const Eigen::MatrixBase<Derived>& p, const SensorIntrinsics& intr) {
  using Scalar = typename Derived::Scalar;
  constexpr Scalar kPi = std::numbers::pi_v<Scalar>;
  const Scalar r = p.norm();
  if (!(r > Scalar(0)) || r < Scalar(intr.min_range) || r > Scalar(intr.max_range)) {
    return std::nullopt;
  }
  const Scalar col =
      Scalar(0.5) * (Scalar(1) - std::atan2(p.y(), p.x()) / kPi) * Scalar(intr.width);
  const Scalar row = (Scalar(1) - (std::asin(p.z() / r) + Scalar(intr.fov_up)) /
                                      Scalar(intr.fov())) *
                     Scalar(intr.height);
  const Scalar vf = std::floor(row);
  if (!(vf >= Scalar(0)) || vf > Scalar(intr.height - 1)) return std::nullopt;
  int u = static_cast<int>(std::floor(col)) % intr.width;
  if (u < 0) u += intr.width;
  return PixelHit<Scalar>{u, static_cast<int>(vf), r};
}

/// Unit direction of the ray through the center of pixel (u, v).
Eigen::Vector3d pixel_ray(int u, int v, const SensorIntrinsics& intr);

/// Dense w x h range grid with an explicit validity mask. Invalid pixels hold 0.
template <typename Scalar>
class BasicRangeImage {
 public:
  using Grid = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  BasicRangeImage() = default;
  BasicRangeImage(int width, int height)
      : ranges_(Grid::Zero(height, width)), valid_(Mask::Constant(height, width, false)) {}

  int width() const { return static_cast<int>(ranges_.cols()); }
  int height() const { return static_cast<int>(ranges_.rows()); }

  bool valid(int u, int v) const { return valid_(v, u); }
  Scalar range(int u, int v) const { return ranges_(v, u); }

  void set(int u, int v, Scalar r) {
    ranges_(v, u) = r;
    valid_(v, u) = true;
  }
  void invalidate(int u, int v) {
    ranges_(v, u) = Scalar(0);
    valid_(v, u) = false;
  }
  void clear() {
    ranges_.setZero();
    valid_.setConstant(false);
  }

  const Grid& ranges() const { return ranges_; }
  const Mask& mask() const { return valid_; }
  Grid& mutable_ranges() { return ranges_; }
  Mask& mutable_mask() { return valid_; }

  Eigen::Index valid_count() const { return valid_.count(); }

  bool operator==(const BasicRangeImage& o) const {
    return width() == o.width() && height() == o.height() && (valid_ == o.valid_).all() &&
           (ranges_ == o.ranges_).all();
  }

 private:
  Grid ranges_;
  Mask valid_;
};

using RangeImage = BasicRangeImage<float>;

/// Per-pixel 3-D points or normals, stored column-wise in row-major pixel order.
template <typename Scalar>
class PixelVectorMap {
 public:
  using Points = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;
  using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  PixelVectorMap() = default;
  PixelVectorMap(int width, int height)
      : width_(width),
        height_(height),
        data_(Points::Zero(3, Eigen::Index(width) * height)),
        valid_(Mask::Constant(height, width, false)) {}

  int width() const { return width_; }
  int height() const { return height_; }
  Eigen::Index index(int u, int v) const { return Eigen::Index(v) * width_ + u; }

  bool valid(int u, int v) const { return valid_(v, u); }
  auto at(int u, int v) const { return data_.col(index(u, v)); }
  void set(int u, int v, const Eigen::Matrix<Scalar, 3, 1>& x) {
    data_.col(index(u, v)) = x;
    valid_(v, u) = true;
  }

  const Points& data() const { return data_; }
  const Mask& mask() const { return valid_; }
  Eigen::Index valid_count() const { return valid_.count(); }

 private:
  int width_ = 0;
  int height_ = 0;
  Points data_;
  Mask valid_;
};

using VertexMap = PixelVectorMap<double>;
using NormalMap = PixelVectorMap<double>;

struct ProjectedScan {
  VertexMap vertices;
  RangeImage ranges;
};

/// Projects a cloud keeping, per pixel, the point of minimal range.
ProjectedScan build_vertex_map(const PointCloud& cloud, const SensorIntrinsics& intr);

/// Normals from cross products of forward differences. Columns wrap, rows do not.
NormalMap compute_normal_map(const VertexMap& vmap);

/// Guard for range_image_diff against nearly empty overlaps.
struct DiffParams {
  /// Minimum mutually valid pixels, as a fraction of w*h.
  double min_overlap_fraction = 0.01;
  /// Reported distance for uninformative pairs.
  double d_max = 50.0;

  static DiffParams for_sensor(const SensorIntrinsics& intr) { return {0.01, intr.max_range}; }
};

struct RangeDiff {
  double d = 0.0;
  Eigen::Index n_used = 0;
  bool informative = true;
};

/// Mean absolute range difference over pixels valid in both images.
template <typename Scalar>
RangeDiff range_image_diff(const BasicRangeImage<Scalar>& scan,
                           const BasicRangeImage<Scalar>& rendered,
                           const DiffParams& params = {}) {
  if (scan.width() != rendered.width() || scan.height() != rendered.height()) {
    throw ContractError("range_image_diff: image dimensions differ");
  }
  const auto& a = scan.ranges();
  const auto& b = rendered.ranges();
  const auto& ma = scan.mask();
  const auto& mb = rendered.mask();
  double sum = 0.0;
  Eigen::Index n = 0;
  const Eigen::Index total = a.size();
  const Scalar* pa = a.data();
  const Scalar* pb = b.data();
  const bool* va = ma.data();
  const bool* vb = mb.data();
  for (Eigen::Index i = 0; i < total; ++i) {
    if (va[i] && vb[i]) {
      sum += std::abs(double(pa[i]) - double(pb[i]));
      ++n;
    }
  }
  RangeDiff out;
  out.n_used = n;
  const double n_min = params.min_overlap_fraction * double(total);
  if (n == 0 || double(n) < n_min) {
    out.d = params.d_max;
    out.informative = false;
  } else {
    out.d = sum / double(n);
  }
  return out;
}

}  // namespace meshloc
