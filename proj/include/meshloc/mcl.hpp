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
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "meshloc/geometry.hpp"
#include "meshloc/mesh_map.hpp"
#include "meshloc/range_image.hpp"
#include "meshloc/renderer.hpp"
#include "meshloc/tile_grid.hpp"

namespace meshloc {

struct Particle {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  double weight = 0.0;

  Pose2 pose() const { return {x, y, yaw}; }
};

using ParticleSet = std::vector<Particle>;

/// Noise weights of the odometry sampling model:
/// var(rot1) = a1 rot1^2 + a2 trans^2, var(trans) = a3 trans^2 + a4 (rot1^2 + rot2^2),
/// var(rot2) = a1 rot2^2 + a2 trans^2.
struct MotionNoise {
  double a1 = 0.02;
  double a2 = 0.02;
  double a3 = 0.05;
  double a4 = 0.05;
};

struct MclConfig {
  std::size_t n_init = 10000;
  std::size_t n_track = 100;
  std::size_t n_conv = 1;
  double sigma_d = 5.0;
  double ess_ratio = 0.5;
  MotionNoise alpha;
  /// Minimum odometry translation per frame that counts as moving.
  double move_eps = 0.05;
  /// Overlap floor of range_image_diff as a fraction of the image.
  double min_overlap_fraction = 0.01;
  /// Distance reported for uninformative image pairs; the sensor max range when unset.
  std::optional<double> d_max;

  void validate() const;
};

/// Map bundle used by the filter: mesh, tiles, ground heights and a renderer over them.
/// Owns its parts; neither copyable nor movable because the renderer refers to them.
class LocalizationMap {
 public:
  LocalizationMap(TriangleMesh mesh, TileGrid grid, const SensorIntrinsics& intr);
  LocalizationMap(const LocalizationMap&) = delete;
  LocalizationMap& operator=(const LocalizationMap&) = delete;

  const TriangleMesh& mesh() const { return mesh_; }
  const TileGrid& grid() const { return grid_; }
  const GroundHeightIndex& ground() const { return ground_; }
  const MeshRenderer& renderer() const { return *renderer_; }
  const SensorIntrinsics& intrinsics() const { return renderer_->intrinsics(); }

  Isometry3 sensor_pose(const Pose2& p) const;

 private:
  TriangleMesh mesh_;
  TileGrid grid_;
  GroundHeightIndex ground_;
  std::unique_ptr<MeshRenderer> renderer_;
};

/// n particles uniform over the occupied tiles, uniform yaw, equal weights.
ParticleSet initialize_uniform(const TileGrid& grid, std::size_t n, std::uint64_t seed);

/// Samples the odometry motion model for every particle. Weights are untouched.
ParticleSet motion_update(ParticleSet ps, const MotionCommand& cmd, const MclConfig& cfg, std::uint64_t seed);

/// Unnormalized Gaussian likelihood of a range-image distance d.
inline double observation_likelihood(double d, double sigma_d) {
  return std::exp(-0.5 * (d * d) / (sigma_d * sigma_d));
}

struct ObservationStats {
  /// Every likelihood underflowed; weights were reset to uniform.
  bool weights_reset = false;
  std::size_t uninformative = 0;
};

/// Multiplies each weight by the likelihood of its distance and renormalizes.
ParticleSet reweight(ParticleSet ps, std::span<const double> distances, double sigma_d,
                     ObservationStats* stats = nullptr);

/// Renders every particle, compares against the scan and reweights.
/// With moving == false the set is returned unchanged.
ParticleSet observation_update(ParticleSet ps, const RangeImage& scan, const LocalizationMap& map,
                               const MclConfig& cfg, bool moving, int threads = 1,
                               ObservationStats* stats = nullptr);

/// Range-image distance of each particle's render to the scan.
std::vector<double> particle_distances(const ParticleSet& ps, const RangeImage& scan, const LocalizationMap& map,
                                       const MclConfig& cfg, int threads = 1);

double effective_particle_count(const ParticleSet& ps);

/// Systematic resampling to the same size, or to n_out particles. Output weights are uniform.
ParticleSet resample(const ParticleSet& ps, std::uint64_t seed);
ParticleSet resample(const ParticleSet& ps, std::size_t n_out, std::uint64_t seed);

/// Weighted mean position and circular-mean heading.
Pose2 pose_estimate(const ParticleSet& ps);

std::size_t occupied_tile_count(const ParticleSet& ps, const TileGrid& grid);

void normalize_weights(ParticleSet& ps);

struct StepResult {
  Pose2 estimate;
  bool moving = false;
  bool resampled = false;
  bool weights_reset = false;
  /// Latched convergence flag, and whether it fired on this step.
  bool converged = false;
  bool converged_now = false;
  /// Effective sample size after the observation update, before any resampling.
  double n_eff = 0.0;
  std::size_t occupied_tiles = 0;
  std::size_t particle_count = 0;
};

/// Recursive filter: motion update, gated observation update, ESS-triggered
/// resampling, and a one-way reduction to n_track particles on convergence.
class MonteCarloLocalizer {
 public:
  MonteCarloLocalizer(const LocalizationMap& map, const MclConfig& cfg, std::uint64_t seed, int threads = 1);

  /// Global initialization with n_init particles.
  void initialize();
  void set_particles(ParticleSet ps, bool converged = false);

  StepResult step(const RangeImage& scan, const MotionCommand& cmd);

  const ParticleSet& particles() const { return particles_; }
  bool converged() const { return converged_; }
  const MclConfig& config() const { return cfg_; }

 private:
  const LocalizationMap& map_;
  MclConfig cfg_;
  std::mt19937_64 rng_;
  int threads_;
  ParticleSet particles_;
  bool converged_ = false;
};

}  // namespace meshloc
