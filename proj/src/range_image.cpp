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

#include "meshloc/range_image.hpp"

#include <limits>
#include <string>

namespace meshloc {

void SensorIntrinsics::validate() const {
  if (width <= 0 || height <= 0) throw ContractError("sensor: width and height must be positive");
  if (!(fov_up > 0.0) || !(fov_down > 0.0)) throw ContractError("sensor: fov_up and fov_down must be positive");
  if (!(min_range >= 0.0) || !(max_range > min_range)) {
    throw ContractError("sensor: require 0 <= min_range < max_range");
  }
}

Eigen::Vector3d pixel_ray(int u, int v, const SensorIntrinsics& intr) {
  const double azimuth = std::numbers::pi * (1.0 - 2.0 * (u + 0.5) / intr.width);
  const double elevation = (1.0 - (v + 0.5) / intr.height) * intr.fov() - intr.fov_up;
  const double ce = std::cos(elevation);
  return {ce * std::cos(azimuth), ce * std::sin(azimuth), std::sin(elevation)};
}

ProjectedScan build_vertex_map(const PointCloud& cloud, const SensorIntrinsics& intr) {
  ProjectedScan out{VertexMap(intr.width, intr.height), RangeImage(intr.width, intr.height)};
  Eigen::ArrayXXd best =
      Eigen::ArrayXXd::Constant(intr.height, intr.width, std::numeric_limits<double>::infinity());
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const auto p = cloud.points.col(i);
    const auto hit = project_point(p, intr);
    if (!hit || hit->range >= best(hit->v, hit->u)) continue;
    best(hit->v, hit->u) = hit->range;
    out.vertices.set(hit->u, hit->v, p);
    out.ranges.set(hit->u, hit->v, static_cast<float>(hit->range));
  }
  return out;
}

NormalMap compute_normal_map(const VertexMap& vmap) {
  const int w = vmap.width();
  const int h = vmap.height();
  NormalMap normals(w, h);
  for (int v = 0; v + 1 < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const int right = (u + 1) % w;
      if (!vmap.valid(u, v) || !vmap.valid(right, v) || !vmap.valid(u, v + 1)) continue;
      const Eigen::Vector3d p = vmap.at(u, v);
      const Eigen::Vector3d n = (vmap.at(right, v) - p).cross(vmap.at(u, v + 1) - p);
      const double len = n.norm();
      if (!(len > 0.0)) continue;
      normals.set(u, v, n / len);
    }
  }
  return normals;
}

}  // namespace meshloc
