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
#include <numbers>

#include <Eigen/Geometry>

namespace meshloc {

using Isometry3 = Eigen::Isometry3d;

template <typename Scalar>
constexpr Scalar deg2rad(Scalar deg) {
  return deg * std::numbers::pi_v<Scalar> / Scalar(180);
}

template <typename Scalar>
constexpr Scalar rad2deg(Scalar rad) {
  return rad * Scalar(180) / std::numbers::pi_v<Scalar>;
}

/// Wraps an angle into (-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar a) {
  constexpr Scalar kPi = std::numbers::pi_v<Scalar>;
  a = std::remainder(a, Scalar(2) * kPi);
  if (a <= -kPi) a += Scalar(2) * kPi;
  return a;
}

/// Planar vehicle pose (x, y, yaw) in the map frame.
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
};

/// Odometry increment in the rotate-translate-rotate parametrization.
struct MotionCommand {
  double trans = 0.0;
  double rot1 = 0.0;
  double rot2 = 0.0;
};

/// Noise-free application of an odometry increment.
inline Pose2 apply_odometry(const Pose2& p, const MotionCommand& u) {
  const double heading = p.yaw + u.rot1;
  return {p.x + u.trans * std::cos(heading), p.y + u.trans * std::sin(heading),
          wrap_angle(p.yaw + u.rot1 + u.rot2)};
}

/// Increment that takes `from` to `to`. Pure rotations carry rot1 = 0.
inline MotionCommand odometry_between(const Pose2& from, const Pose2& to) {
  const double dx = to.x - from.x;
  const double dy = to.y - from.y;
  MotionCommand u;
  u.trans = std::hypot(dx, dy);
  u.rot1 = u.trans > 1e-12 ? wrap_angle(std::atan2(dy, dx) - from.yaw) : 0.0;
  u.rot2 = wrap_angle(to.yaw - from.yaw - u.rot1);
  return u;
}

/// Sensor pose for a planar pose at height z with zero roll and pitch.
inline Isometry3 lift_pose(const Pose2& p, double z) {
  Isometry3 T = Isometry3::Identity();
  T.linear() = Eigen::AngleAxisd(p.yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  T.translation() = Eigen::Vector3d(p.x, p.y, z);
  return T;
}

inline Pose2 planar_pose(const Isometry3& T) {
  const Eigen::Matrix3d& R = T.linear();
  return {T.translation().x(), T.translation().y(), std::atan2(R(1, 0), R(0, 0))};
}

}  // namespace meshloc
