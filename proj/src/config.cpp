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

#include "meshloc/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <vector>

#include "meshloc/error.hpp"

namespace meshloc {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct Field {
  std::string key;
  std::function<bool(const std::string&)> set;
  std::function<std::string()> get;
};

template <typename T>
bool parse_value(const std::string& s, T& out) {
  if constexpr (std::is_same_v<T, bool>) {
    if (s == "true" || s == "1") return out = true, true;
    if (s == "false" || s == "0") return out = false, true;
    return false;
  } else {
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
  }
}

template <typename T>
Field number(std::string key, T& ref) {
  return {std::move(key), [&ref](const std::string& s) { return parse_value(s, ref); },
          [&ref] {
            if constexpr (std::is_floating_point_v<T>) return fmt(ref);
            else return std::to_string(ref);
          }};
}

Field degrees(std::string key, double& rad) {
  return {std::move(key),
          [&rad](const std::string& s) {
            double deg;
            if (!parse_value(s, deg)) return false;
            rad = deg2rad(deg);
            return true;
          },
          [&rad] { return fmt(rad2deg(rad)); }};
}

Field path(std::string key, std::filesystem::path& ref) {
  return {std::move(key), [&ref](const std::string& s) { return ref = s, true; }, [&ref] { return ref.string(); }};
}

Field optional_number(std::string key, std::optional<double>& ref) {
  return {std::move(key),
          [&ref](const std::string& s) {
            if (s.empty() || s == "none") return ref.reset(), true;
            double v;
            if (!parse_value(s, v)) return false;
            ref = v;
            return true;
          },
          [&ref] { return ref ? fmt(*ref) : std::string("none"); }};
}

std::vector<Field> fields(Config& c) {
  return {
      number("seed", c.seed),
      number("sensor.width", c.sensor.width),
      number("sensor.height", c.sensor.height),
      degrees("sensor.fov_up_deg", c.sensor.fov_up),
      degrees("sensor.fov_down_deg", c.sensor.fov_down),
      number("sensor.min_range", c.sensor.min_range),
      number("sensor.max_range", c.sensor.max_range),
      number("sensor.mount_height", c.sensor.sensor_height),
      degrees("ground.alpha_thres_deg", c.ground.alpha_thres),
      number("ground.z_thres", c.ground.z_thres),
      number("ground.s_voxel", c.ground.s_voxel),
      number("map.tile_size", c.tile_size),
      number("mcl.n_init", c.mcl.n_init),
      number("mcl.n_track", c.mcl.n_track),
      number("mcl.n_conv", c.mcl.n_conv),
      number("mcl.sigma_d", c.mcl.sigma_d),
      number("mcl.ess_ratio", c.mcl.ess_ratio),
      number("mcl.alpha1", c.mcl.alpha.a1),
      number("mcl.alpha2", c.mcl.alpha.a2),
      number("mcl.alpha3", c.mcl.alpha.a3),
      number("mcl.alpha4", c.mcl.alpha.a4),
      number("mcl.move_eps", c.mcl.move_eps),
      number("mcl.min_overlap_fraction", c.mcl.min_overlap_fraction),
      optional_number("mcl.d_max", c.mcl.d_max),
      number("world.extent_x", c.world.extent.x()),
      number("world.extent_y", c.world.extent.y()),
      number("world.building_count", c.world.building_count),
      number("world.footprint_min", c.world.footprint_range.x()),
      number("world.footprint_max", c.world.footprint_range.y()),
      number("world.height_min", c.world.height_range.x()),
      number("world.height_max", c.world.height_range.y()),
      number("world.ground_z", c.world.ground_z),
      number("world.ground_resolution", c.world.ground_resolution),
      number("world.corridor_inset", c.world.corridor_inset),
      number("world.corridor_half_width", c.world.corridor_half_width),
      number("world.corner_radius", c.world.corner_radius),
      number("world.seed", c.world.seed),
      number("trajectory.length", c.trajectory.length),
      number("trajectory.speed", c.trajectory.speed),
      number("trajectory.sigma_trans", c.trajectory.sigma_trans),
      number("trajectory.sigma_rot", c.trajectory.sigma_rot),
      number("trajectory.seed", c.trajectory.seed),
      path("paths.map", c.paths.map),
      path("paths.tiles", c.paths.tiles),
      path("paths.scans", c.paths.scans),
      path("paths.poses", c.paths.poses),
      path("paths.odometry", c.paths.odometry),
      path("paths.output", c.paths.output),
  };
}

}  // namespace

Config::Config() { ground.z_thres = sensor.sensor_height; }

void Config::validate() const {
  sensor.validate();
  ground.validate();
  mcl.validate();
  world.validate();
  trajectory.validate();
  if (!(tile_size > 0.0)) throw ContractError("config: map.tile_size must be positive");
}

Config parse_config(std::string_view text, const std::string& source) {
  Config cfg;
  auto table = fields(cfg);
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = source + " line " + std::to_string(line_no);
    if (eq == std::string::npos) throw DataError(where + ": expected 'key = value'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.key == key; });
    if (it == table.end()) throw DataError(where + ": unknown key '" + key + "'");
    if (!it->set(value)) throw DataError(where + ": invalid value '" + value + "' for " + key);
  }
  try {
    cfg.validate();
  } catch (const ContractError& e) {
    throw DataError(source + ": " + e.what());
  }
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), "'" + path.string() + "'");
}

std::string format_config(const Config& cfg) {
  Config copy = cfg;
  std::string out;
  std::string section;
  for (const auto& f : fields(copy)) {
    const auto dot = f.key.find('.');
    const std::string s = dot == std::string::npos ? "" : f.key.substr(0, dot);
    if (s != section && !out.empty()) out += '\n';
    section = s;
    out += f.key + " = " + f.get() + '\n';
  }
  return out;
}

void save_config(const std::filesystem::path& path, const Config& cfg) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write config '" + path.string() + "'");
  out << format_config(cfg);
}

}  // namespace meshloc
