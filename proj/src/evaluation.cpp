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

#include "meshloc/evaluation.hpp"

#include <cmath>
#include <sstream>

#include "meshloc/error.hpp"

namespace meshloc {

EvalReport evaluate(std::span<const Pose2> estimates, std::span<const Pose2> ground_truth,
                    std::optional<std::size_t> convergence_frame) {
  if (estimates.size() != ground_truth.size()) {
    throw ContractError("evaluate: " + std::to_string(estimates.size()) + " estimates for " +
                        std::to_string(ground_truth.size()) + " ground-truth poses");
  }
  const std::size_t n = estimates.size();
  if (convergence_frame && *convergence_frame >= n) convergence_frame.reset();
  EvalReport report;
  report.convergence_frame = convergence_frame;
  report.location_errors.resize(n);
  report.yaw_errors.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    report.location_errors[i] =
        std::hypot(estimates[i].x - ground_truth[i].x, estimates[i].y - ground_truth[i].y);
    report.yaw_errors[i] = std::abs(wrap_angle(estimates[i].yaw - ground_truth[i].yaw));
  }
  const std::size_t first = convergence_frame.value_or(0);
  double sl = 0.0, sy = 0.0;
  for (std::size_t i = first; i < n; ++i) {
    sl += report.location_errors[i] * report.location_errors[i];
    sy += report.yaw_errors[i] * report.yaw_errors[i];
  }
  report.scored_frames = n - first;
  if (report.scored_frames > 0) {
    report.location_rmse = std::sqrt(sl / double(report.scored_frames));
    report.yaw_rmse = std::sqrt(sy / double(report.scored_frames));
  }
  if (!convergence_frame) return report;
  for (std::size_t f = first + kSuccessCheckInterval; f < n; f += kSuccessCheckInterval) {
    report.checked_frames.push_back(f);
  }
  if (report.checked_frames.empty()) report.checked_frames.push_back(n - 1);
  report.success = true;
  for (std::size_t f : report.checked_frames) {
    if (!(report.location_errors[f] < kSuccessLocationError)) report.success = false;
  }
  return report;
}

std::string format_report(const EvalReport& r) {
  std::ostringstream os;
  os.precision(6);
  os << "frames: " << r.location_errors.size() << '\n';
  os << "converged: " << (r.convergence_frame ? "true" : "false") << '\n';
  os << "convergence_frame: ";
  if (r.convergence_frame) os << *r.convergence_frame;
  else os << "none";
  os << '\n';
  os << "scored_frames: " << r.scored_frames << '\n';
  os << "location_rmse_m: " << r.location_rmse << '\n';
  os << "yaw_rmse_rad: " << r.yaw_rmse << '\n';
  os << "yaw_rmse_deg: " << rad2deg(r.yaw_rmse) << '\n';
  os << "checked_frames:";
  for (auto f : r.checked_frames) os << ' ' << f;
  os << '\n';
  os << "success: " << (r.success ? "true" : "false") << '\n';
  return os.str();
}

}  // namespace meshloc
