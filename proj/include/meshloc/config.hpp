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
#include <filesystem>
#include <string>
#include <string_view>

#include "meshloc/mcl.hpp"
#include "meshloc/mesh_map.hpp"
#include "meshloc/range_image.hpp"
#include "meshloc/sim_world.hpp"

namespace meshloc {

/// Everything the command-line tools need. Defaults follow the reference setup:
/// 100 m tiles, sigma_d = 5, 10,000 particles reduced to 100, one convergence
/// tile, a 30 degree ground angle and 1 m voxels.
struct Config {
  SensorIntrinsics sensor;
  GroundParams ground;
  MclConfig mcl;
  double tile_size = 100.0;
  WorldSpec world;
  TrajectorySpec trajectory;
  struct Paths {
    std::filesystem::path map;
    std::filesystem::path tiles;
    std::filesystem::path scans;
    std::filesystem::path poses;
    std::filesystem::path odometry;
    std::filesystem::path output;
  } paths;
  std::uint64_t seed = 0;

  Config();
  void validate() const;
};

/// Flat "key = value" text with dotted section keys and '#' comments.
/// Keys not mentioned keep their defaults; unknown keys are an error.
Config parse_config(std::string_view text, const std::string& source = "<config>");
Config load_config(const std::filesystem::path& path);
std::string format_config(const Config& cfg);
void save_config(const std::filesystem::path& path, const Config& cfg);

}  // namespace meshloc
