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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meshloc/geometry.hpp"

namespace meshloc {

/// Location errors below this count as a successful check.
inline constexpr double kSuccessLocationError = 5.0;
/// Spacing of the success checks, in frames after convergence.
inline constexpr std::size_t kSuccessCheckInterval = 100;

struct EvalReport {
  std::vector<double> location_errors;
  std::vector<double> yaw_errors;
  /// RMSEs over frames from convergence on (all frames when the run never converged).
  double location_rmse = 0.0;
  double yaw_rmse = 0.0;
  std::size_t scored_frames = 0;
  std::optional<std::size_t> convergence_frame;
  std::vector<std::size_t> checked_frames;
  bool success = false;
};

/// Per-frame planar and heading errors, post-convergence RMSEs and the success rule:
/// every kSuccessCheckInterval-th frame after convergence must be within
/// kSuccessLocationError. When the sequence ends before the first such frame the
/// last frame is checked instead. Unconverged runs fail.
EvalReport evaluate(std::span<const Pose2> estimates, std::span<const Pose2> ground_truth,
                    std::optional<std::size_t> convergence_frame);

/// "key: value" lines.
std::string format_report(const EvalReport& report);

}  // namespace meshloc
