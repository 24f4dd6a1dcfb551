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

#include "meshloc/mcl.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <string>

namespace meshloc {

void MclConfig::validate() const {
  if (n_init == 0 || n_track == 0) throw ContractError("mcl: particle counts must be positive");
  if (n_track > n_init) throw ContractError("mcl: n_track must not exceed n_init");
  if (!(ess_ratio > 0.0) || ess_ratio > 1.0) throw ContractError("mcl: ess_ratio must lie in (0, 1]");
  if (!(sigma_d > 0.0)) throw ContractError("mcl: sigma_d must be positive");
  if (alpha.a1 < 0.0 || alpha.a2 < 0.0 || alpha.a3 < 0.0 || alpha.a4 < 0.0) {
    throw ContractError("mcl: motion noise weights must be non-negative");
  }
}

LocalizationMap::LocalizationMap(TriangleMesh mesh, TileGrid grid, const SensorIntrinsics& intr)
    : mesh_(std::move(mesh)), grid_(std::move(grid)), ground_(mesh_) {
  renderer_ = std::make_unique<MeshRenderer>(mesh_, grid_, intr);
}

Isometry3 LocalizationMap::sensor_pose(const Pose2& p) const {
  return particle_sensor_pose(p, ground_, intrinsics().sensor_height);
}

ParticleSet initialize_uniform(const TileGrid& grid, std::size_t n, std::uint64_t seed) {
  if (grid.empty()) throw ContractError("initialize_uniform: tile grid is empty");
  std::vector<TileCoord> tiles;
  for (const auto& [c, tris] : grid.tiles()) tiles.push_back(c);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, tiles.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> heading(-std::numbers::pi, std::numbers::pi);
  ParticleSet ps(n);
  const double w = 1.0 / double(n);
  for (auto& p : ps) {
    const auto box = grid.bounds(tiles[pick(rng)]);
    p.x = box.min().x() + unit(rng) * grid.tile_size();
    p.y = box.min().y() + unit(rng) * grid.tile_size();
    p.yaw = wrap_angle(heading(rng));
    p.weight = w;
  }
  return ps;
}

ParticleSet motion_update(ParticleSet ps, const MotionCommand& cmd, const MclConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  const auto& a = cfg.alpha;
  const double r1 = cmd.rot1 * cmd.rot1, r2 = cmd.rot2 * cmd.rot2, tr = cmd.trans * cmd.trans;
  const double sd_rot1 = std::sqrt(a.a1 * r1 + a.a2 * tr);
  const double sd_trans = std::sqrt(a.a3 * tr + a.a4 * (r1 + r2));
  const double sd_rot2 = std::sqrt(a.a1 * r2 + a.a2 * tr);
  for (auto& p : ps) {
    MotionCommand u = cmd;
    u.rot1 -= sd_rot1 * n01(rng);
    u.trans -= sd_trans * n01(rng);
    u.rot2 -= sd_rot2 * n01(rng);
    const Pose2 next = apply_odometry(p.pose(), u);
    p.x = next.x;
    p.y = next.y;
    p.yaw = next.yaw;
  }
  return ps;
}

void normalize_weights(ParticleSet& ps) {
  double sum = 0.0;
  for (const auto& p : ps) sum += p.weight;
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    const double w = ps.empty() ? 0.0 : 1.0 / double(ps.size());
    for (auto& p : ps) p.weight = w;
    return;
  }
  for (auto& p : ps) p.weight /= sum;
}

ParticleSet reweight(ParticleSet ps, std::span<const double> distances, double sigma_d, ObservationStats* stats) {
  if (distances.size() != ps.size()) throw ContractError("reweight: one distance per particle required");
  double sum = 0.0;
  for (std::size_t j = 0; j < ps.size(); ++j) {
    ps[j].weight *= observation_likelihood(distances[j], sigma_d);
    sum += ps[j].weight;
  }
  const bool collapsed = !(sum > 0.0) || !std::isfinite(sum);
  if (stats) stats->weights_reset = collapsed;
  normalize_weights(ps);
  return ps;
}

std::vector<double> particle_distances(const ParticleSet& ps, const RangeImage& scan, const LocalizationMap& map,
                                       const MclConfig& cfg, int threads) {
  const SensorIntrinsics& intr = map.intrinsics();
  const DiffParams diff{cfg.min_overlap_fraction, cfg.d_max.value_or(intr.max_range)};
  const std::size_t workers = std::max(1, threads);
  std::vector<MeshRenderer::Scratch> scratch(workers);
  std::vector<RangeImage> images(workers, RangeImage(intr.width, intr.height));
  std::vector<double> d(ps.size());
  parallel_for(ps.size(), threads, [&](std::size_t j, std::size_t w) {
    const Isometry3 pose = map.sensor_pose(ps[j].pose());
    const auto tiles = tiles_near(map.grid(), pose.translation().head<2>(), intr.max_range);
    map.renderer().render_into(pose, tiles, images[w], scratch[w]);
    d[j] = range_image_diff(scan, images[w], diff).d;
  });
  return d;
}

ParticleSet observation_update(ParticleSet ps, const RangeImage& scan, const LocalizationMap& map,
                               const MclConfig& cfg, bool moving, int threads, ObservationStats* stats) {
  if (!moving) return ps;
  const auto d = particle_distances(ps, scan, map, cfg, threads);
  if (stats) {
    const double d_max = cfg.d_max.value_or(map.intrinsics().max_range);
    stats->uninformative = std::size_t(std::count(d.begin(), d.end(), d_max));
  }
  return reweight(std::move(ps), d, cfg.sigma_d, stats);
}

double effective_particle_count(const ParticleSet& ps) {
  double sq = 0.0;
  for (const auto& p : ps) sq += p.weight * p.weight;
  return sq > 0.0 ? 1.0 / sq : 0.0;
}

ParticleSet resample(const ParticleSet& ps, std::uint64_t seed) { return resample(ps, ps.size(), seed); }

ParticleSet resample(const ParticleSet& ps, std::size_t n_out, std::uint64_t seed) {
  ParticleSet out;
  if (ps.empty() || n_out == 0) return out;
  out.reserve(n_out);
  std::mt19937_64 rng(seed);
  const double step = 1.0 / double(n_out);
  const double r = std::uniform_real_distribution<double>(0.0, step)(rng);
  double cumulative = ps[0].weight;
  std::size_t j = 0;
  for (std::size_t k = 0; k < n_out; ++k) {
    const double target = r + double(k) * step;
    while (target > cumulative && j + 1 < ps.size()) cumulative += ps[++j].weight;
    Particle p = ps[j];
    p.weight = step;
    out.push_back(p);
  }
  return out;
}

Pose2 pose_estimate(const ParticleSet& ps) {
  double x = 0.0, y = 0.0, s = 0.0, c = 0.0;
  for (const auto& p : ps) {
    x += p.weight * p.x;
    y += p.weight * p.y;
    s += p.weight * std::sin(p.yaw);
    c += p.weight * std::cos(p.yaw);
  }
  return {x, y, std::atan2(s, c)};
}

std::size_t occupied_tile_count(const ParticleSet& ps, const TileGrid& grid) {
  std::set<TileCoord> occupied;
  for (const auto& p : ps) occupied.insert(grid.tile_of(p.x, p.y));
  return occupied.size();
}

MonteCarloLocalizer::MonteCarloLocalizer(const LocalizationMap& map, const MclConfig& cfg, std::uint64_t seed,
                                         int threads)
    : map_(map), cfg_(cfg), rng_(seed), threads_(threads) {
  cfg_.validate();
}

void MonteCarloLocalizer::initialize() {
  particles_ = initialize_uniform(map_.grid(), cfg_.n_init, rng_());
  converged_ = false;
}

void MonteCarloLocalizer::set_particles(ParticleSet ps, bool converged) {
  particles_ = std::move(ps);
  normalize_weights(particles_);
  converged_ = converged;
}

StepResult MonteCarloLocalizer::step(const RangeImage& scan, const MotionCommand& cmd) {
  if (particles_.empty()) throw ContractError("MonteCarloLocalizer::step: filter is not initialized");
  StepResult res;
  particles_ = motion_update(std::move(particles_), cmd, cfg_, rng_());
  res.moving = std::abs(cmd.trans) > cfg_.move_eps;
  ObservationStats stats;
  particles_ = observation_update(std::move(particles_), scan, map_, cfg_, res.moving, threads_, &stats);
  res.weights_reset = stats.weights_reset;
  res.n_eff = effective_particle_count(particles_);
  if (res.n_eff < cfg_.ess_ratio * double(particles_.size())) {
    particles_ = resample(particles_, rng_());
    res.resampled = true;
  }
  res.occupied_tiles = occupied_tile_count(particles_, map_.grid());
  if (!converged_ && res.occupied_tiles <= cfg_.n_conv) {
    particles_ = resample(particles_, cfg_.n_track, rng_());
    converged_ = true;
    res.converged_now = true;
    res.occupied_tiles = occupied_tile_count(particles_, map_.grid());
  }
  res.converged = converged_;
  res.particle_count = particles_.size();
  res.estimate = pose_estimate(particles_);
  return res;
}

}  // namespace meshloc
