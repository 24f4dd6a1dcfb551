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

#include "meshloc/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "meshloc/config.hpp"
#include "meshloc/evaluation.hpp"
#include "meshloc/io.hpp"
#include "meshloc/mcl.hpp"
#include "meshloc/mesh_map.hpp"
#include "meshloc/renderer.hpp"
#include "meshloc/sim_world.hpp"
#include "meshloc/tile_grid.hpp"

namespace meshloc {
namespace {

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool verbose = false;
};

struct BuildMapOptions {
  bool world = false;
  std::string mesh;
  std::string scans;
  std::string poses;
  std::string output;
  bool no_simplify = false;
  bool ascii = false;
  double label_radius = 0.5;
};

struct SimulateOptions {
  std::string output;
  double noise = 0.02;
  bool exact = false;
};

struct LocalizeOptions {
  std::string map;
  std::string tiles;
  std::string scans;
  std::string odometry;
  std::string output;
  std::size_t particles = 0;
};

struct EvaluateOptions {
  std::string trajectory;
  std::string ground_truth;
  std::string output;
};

struct RenderOptions {
  std::string map;
  std::string tiles;
  std::vector<double> pose;
  std::string output;
};

Config resolve_config(const GlobalOptions& g) {
  Config cfg = g.config.empty() ? Config{} : load_config(g.config);
  if (g.seed) {
    cfg.seed = *g.seed;
    cfg.world.seed = *g.seed;
    cfg.trajectory.seed = *g.seed;
  }
  return cfg;
}

fs::path pick(const std::string& flag, const fs::path& from_config, const char* what) {
  if (!flag.empty()) return flag;
  if (!from_config.empty()) return from_config;
  throw DataError(std::string("no ") + what + " given (flag or config paths entry)");
}

std::vector<fs::path> list_scans(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("scan directory '" + dir.string() + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".bin") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::string frame_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06zu.bin", i);
  return buf;
}

TileGrid load_or_build_tiles(const std::string& tiles, const TriangleMesh& mesh, const Config& cfg) {
  if (!tiles.empty()) return load_tile_index(tiles);
  if (!cfg.paths.tiles.empty()) return load_tile_index(cfg.paths.tiles);
  return build_tile_grid(mesh, cfg.tile_size);
}

int run_build_map(const GlobalOptions& g, const BuildMapOptions& o, std::ostream& out) {
  const Config cfg = resolve_config(g);
  const fs::path dir = pick(o.output, cfg.paths.output, "output directory");
  fs::create_directories(dir);

  std::optional<TriangleMesh> mesh;
  if (o.world) {
    mesh = build_world(cfg.world);
  } else if (!o.mesh.empty()) {
    mesh = read_ply(o.mesh);
  }

  if (!o.scans.empty() || !o.poses.empty()) {
    if (o.scans.empty() || o.poses.empty()) throw DataError("--scans and --poses must be given together");
    const auto poses = load_poses(o.poses);
    const auto files = list_scans(o.scans);
    if (files.size() != poses.size()) {
      throw DataError(std::to_string(files.size()) + " scans in '" + o.scans + "' but " +
                      std::to_string(poses.size()) + " poses in '" + o.poses + "'");
    }
    std::vector<PointCloud> clouds;
    clouds.reserve(files.size());
    for (const auto& f : files) clouds.push_back(load_scan(f));
    const PointCloud all = aggregate_clouds(clouds, poses);
    const Eigen::Vector3d e3 = principal_axes(all.points).e3();
    std::vector<Eigen::Matrix3Xd> pts, nrm;
    std::vector<VertexLabel> labels;
    Eigen::Index total = 0;
    for (std::size_t i = 0; i < clouds.size(); ++i) {
      const Eigen::Vector3d e3_sensor = poses[i].linear().transpose() * e3;
      LabeledScan ls = label_scan(clouds[i], cfg.sensor, e3_sensor, cfg.ground);
      pts.push_back(poses[i] * ls.points);
      nrm.push_back(poses[i].linear() * ls.normals);
      labels.insert(labels.end(), ls.labels.begin(), ls.labels.end());
      total += ls.points.cols();
    }
    Eigen::Matrix3Xd points(3, total), normals(3, total);
    Eigen::Index offset = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      points.middleCols(offset, pts[i].cols()) = pts[i];
      normals.middleCols(offset, nrm[i].cols()) = nrm[i];
      offset += pts[i].cols();
    }
    write_oriented_cloud_ply(dir / "labeled_cloud.ply", points, normals, labels);
    out << "wrote " << (dir / "labeled_cloud.ply").string() << " (" << total << " oriented points)\n";
    if (mesh) {
      transfer_labels(*mesh, points, labels, o.label_radius);
    } else {
      out << "no mesh given: reconstruct a surface from labeled_cloud.ply and rerun with --mesh\n";
      return kExitOk;
    }
  }
  if (!mesh) throw DataError("build-map needs --world, --mesh, or --scans with --poses");

  const std::size_t bytes_in = mesh_byte_size(*mesh);
  TriangleMesh map = o.no_simplify ? *mesh : simplify_map(*mesh, cfg.ground);
  const TileGrid grid = build_tile_grid(map, cfg.tile_size);
  write_ply(dir / "map.ply", map, o.ascii ? PlyFormat::kAscii : PlyFormat::kBinaryLittleEndian);
  save_tile_index(dir / "map.tiles", grid);
  out << "map: " << map.vertex_count() << " vertices, " << map.triangle_count() << " triangles, "
      << grid.tiles().size() << " tiles; size " << mesh_byte_size(map) << " of " << bytes_in << " bytes\n";
  return kExitOk;
}

int run_simulate(const GlobalOptions& g, const SimulateOptions& o, std::ostream& out) {
  const Config cfg = resolve_config(g);
  const fs::path dir = pick(o.output, cfg.paths.output, "output directory");
  fs::create_directories(dir / "scans");
  const TriangleMesh world = build_world(cfg.world);
  const Trajectory traj = generate_trajectory(cfg.world, cfg.trajectory);
  const GroundHeightIndex ground(world);
  const TileGrid grid = build_tile_grid(world, cfg.tile_size);
  const MeshRenderer renderer(world, grid, cfg.sensor);
  std::vector<Isometry3> truth;
  for (std::size_t i = 0; i < traj.poses.size(); ++i) {
    const Isometry3 pose = particle_sensor_pose(traj.poses[i], ground, cfg.sensor.sensor_height);
    truth.push_back(pose);
    const std::uint64_t seed = cfg.trajectory.seed * 1000003ULL + i;
    const PointCloud scan = o.exact ? simulate_scan(world, pose, cfg.sensor, o.noise, seed)
                                    : scan_from_range_image(renderer.render(pose), cfg.sensor, o.noise, seed);
    save_scan(dir / "scans" / frame_name(i), scan);
    if (g.verbose) out << "frame " << i << ": " << scan.size() << " points\n";
  }
  write_ply(dir / "world.ply", world);
  save_poses(dir / "ground_truth.txt", truth);
  save_odometry(dir / "odometry.txt", traj.odometry);
  out << "simulated " << traj.poses.size() << " frames into " << dir.string() << "\n";
  return kExitOk;
}

int run_localize(const GlobalOptions& g, const LocalizeOptions& o, std::ostream& out) {
  Config cfg = resolve_config(g);
  if (o.particles > 0) {
    cfg.mcl.n_init = o.particles;
    cfg.mcl.n_track = std::min(cfg.mcl.n_track, o.particles);
  }
  const fs::path map_path = pick(o.map, cfg.paths.map, "map");
  TriangleMesh mesh = read_ply(map_path);
  TileGrid grid = load_or_build_tiles(o.tiles, mesh, cfg);
  const auto files = list_scans(pick(o.scans, cfg.paths.scans, "scan directory"));
  const auto odometry = load_odometry(pick(o.odometry, cfg.paths.odometry, "odometry file"));
  if (files.size() != odometry.size()) {
    throw DataError(std::to_string(files.size()) + " scans but " + std::to_string(odometry.size()) +
                    " odometry records");
  }
  const fs::path output = pick(o.output, cfg.paths.output.empty() ? fs::path() : cfg.paths.output / "trajectory.csv",
                               "output trajectory path");
  const LocalizationMap map(std::move(mesh), std::move(grid), cfg.sensor);
  MonteCarloLocalizer filter(map, cfg.mcl, cfg.seed, g.threads);
  filter.initialize();
  std::vector<TrajectoryRecord> records;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const RangeImage scan = build_vertex_map(load_scan(files[i]), cfg.sensor).ranges;
    const StepResult r = filter.step(scan, odometry[i]);
    records.push_back({i, r.estimate.x, r.estimate.y, r.estimate.yaw, r.n_eff, r.converged, r.occupied_tiles});
    if (g.verbose) {
      out << "frame " << i << ": particles " << r.particle_count << ", tiles " << r.occupied_tiles << ", n_eff "
          << r.n_eff << (r.converged_now ? ", converged" : "") << (r.weights_reset ? ", weights reset" : "")
          << "\n";
    }
  }
  write_trajectory_log(output, records);
  out << "wrote " << records.size() << " frames to " << output.string() << "\n";
  return kExitOk;
}

int run_evaluate(const GlobalOptions& g, const EvaluateOptions& o, std::ostream& out) {
  const Config cfg = resolve_config(g);
  const auto records = read_trajectory_log(pick(o.trajectory, {}, "trajectory log"));
  const auto truth_poses = load_poses(pick(o.ground_truth, cfg.paths.poses, "ground-truth poses"));
  if (records.size() != truth_poses.size()) {
    throw DataError(std::to_string(records.size()) + " trajectory records but " +
                    std::to_string(truth_poses.size()) + " ground-truth poses");
  }
  std::vector<Pose2> est, truth;
  std::optional<std::size_t> converged_at;
  for (std::size_t i = 0; i < records.size(); ++i) {
    est.push_back({records[i].x, records[i].y, records[i].yaw});
    truth.push_back(planar_pose(truth_poses[i]));
    if (!converged_at && records[i].converged) converged_at = i;
  }
  const std::string report = format_report(evaluate(est, truth, converged_at));
  if (o.output.empty()) {
    out << report;
  } else {
    std::ofstream f(o.output);
    if (!f) throw DataError("cannot write '" + o.output + "'");
    f << report;
  }
  return kExitOk;
}

int run_render_debug(const GlobalOptions& g, const RenderOptions& o, std::ostream& out) {
  const Config cfg = resolve_config(g);
  const fs::path map_path = pick(o.map, cfg.paths.map, "map");
  TriangleMesh mesh = read_ply(map_path);
  TileGrid grid = load_or_build_tiles(o.tiles, mesh, cfg);
  const LocalizationMap map(std::move(mesh), std::move(grid), cfg.sensor);
  const Pose2 p{o.pose.at(0), o.pose.at(1), o.pose.at(2)};
  const RangeImage image = map.renderer().render(map.sensor_pose(p));
  write_pgm16(o.output, image);
  out << "wrote " << o.output << " (" << image.valid_count() << " valid pixels)\n";
  return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Range-image Monte Carlo localization in triangle-mesh maps", "meshloc"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config, "Configuration file (key = value)");
  app.add_option("--seed", g.seed, "Random seed for the filter, world and trajectory");
  app.add_option("--threads", g.threads, "Renderer worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--verbose", g.verbose, "Per-frame progress output");

  BuildMapOptions bm;
  auto* build = app.add_subcommand("build-map", "Label, simplify and tile a map mesh");
  build->add_flag("--world", bm.world, "Generate the synthetic world described by the config");
  build->add_option("--mesh", bm.mesh, "Externally reconstructed mesh (PLY)");
  build->add_option("--scans", bm.scans, "Directory of binary scans for ground labeling");
  build->add_option("--poses", bm.poses, "Scan poses, one 3x4 matrix per line");
  build->add_option("--output", bm.output, "Output directory");
  build->add_flag("--no-simplify", bm.no_simplify, "Skip ground simplification");
  build->add_flag("--ascii", bm.ascii, "Write ASCII PLY");
  build->add_option("--label-radius", bm.label_radius, "Label transfer radius in meters");

  SimulateOptions sm;
  auto* simulate = app.add_subcommand("simulate", "Simulate scans, odometry and ground truth in a synthetic world");
  simulate->add_option("--output", sm.output, "Output directory");
  simulate->add_option("--noise", sm.noise, "Radial range noise sigma in meters");
  simulate->add_flag("--exact", sm.exact, "Use brute-force ray casting instead of the renderer");

  LocalizeOptions lo;
  auto* localize = app.add_subcommand("localize", "Run global localization over a scan sequence");
  localize->add_option("--map", lo.map, "Map mesh (PLY)");
  localize->add_option("--tiles", lo.tiles, "Tile index; built from the map when omitted");
  localize->add_option("--scans", lo.scans, "Directory of binary scans");
  localize->add_option("--odometry", lo.odometry, "Odometry file");
  localize->add_option("--output", lo.output, "Trajectory log (CSV)");
  localize->add_option("--particles", lo.particles, "Override the initial particle count");

  EvaluateOptions ev;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a trajectory log against ground truth");
  evaluate_cmd->add_option("--trajectory", ev.trajectory, "Trajectory log (CSV)")->required();
  evaluate_cmd->add_option("--ground-truth", ev.ground_truth, "Ground-truth poses");
  evaluate_cmd->add_option("--output", ev.output, "Report file; standard output when omitted");

  RenderOptions rd;
  auto* render = app.add_subcommand("render-debug", "Render one range image as a 16-bit PGM (millimeters)");
  render->add_option("--map", rd.map, "Map mesh (PLY)");
  render->add_option("--tiles", rd.tiles, "Tile index; built from the map when omitted");
  render->add_option("--pose", rd.pose, "Planar pose: x y yaw (meters, radians)")->expected(3)->required();
  render->add_option("--output", rd.output, "Output PGM")->required();

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*build) return run_build_map(g, bm, out);
    if (*simulate) return run_simulate(g, sm, out);
    if (*localize) return run_localize(g, lo, out);
    if (*evaluate_cmd) return run_evaluate(g, ev, out);
    if (*render) return run_render_debug(g, rd, out);
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const ContractError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace meshloc
