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

#include "meshloc/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

namespace meshloc {
namespace {

std::string describe(const fs::path& path) { return "'" + path.string() + "'"; }

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw DataError("cannot open " + describe(path));
  return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, mode);
  if (!out) throw DataError("cannot write " + describe(path));
  return out;
}

template <typename T>
T from_little(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    char* b = reinterpret_cast<char*>(&v);
    std::reverse(b, b + sizeof(T));
  }
  return v;
}

template <typename T>
void put_little(std::ostream& out, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.write(b, sizeof(T));
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

bool parse_double(std::string_view s, double& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

template <typename Int>
bool parse_int(std::string_view s, Int& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::vector<double> parse_numbers(std::string_view line, const fs::path& path, std::size_t line_no) {
  std::vector<double> values;
  for (auto tok : split_ws(line)) {
    double v;
    if (!parse_double(tok, v) || !std::isfinite(v)) {
      throw DataError(describe(path) + " line " + std::to_string(line_no) + ": invalid number '" +
                      std::string(tok) + "'");
    }
    values.push_back(v);
  }
  return values;
}

bool blank(std::string_view line) { return split_ws(line).empty(); }

}  // namespace

PointCloud load_scan(const fs::path& path) {
  auto in = open_in(path, std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % 16 != 0) {
    throw DataError(describe(path) + ": size " + std::to_string(bytes.size()) +
                    " bytes is not a multiple of 16 (truncated scan?)");
  }
  const Eigen::Index n = Eigen::Index(bytes.size() / 16);
  PointCloud cloud;
  cloud.points.resize(3, n);
  cloud.intensity.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const char* rec = bytes.data() + 16 * i;
    for (int k = 0; k < 3; ++k) {
      const float v = from_little<float>(rec + 4 * k);
      if (!std::isfinite(v)) {
        throw DataError(describe(path) + ": point " + std::to_string(i) + " has a non-finite coordinate");
      }
      cloud.points(k, i) = v;
    }
    cloud.intensity[i] = from_little<float>(rec + 12);
  }
  return cloud;
}

void save_scan(const fs::path& path, const PointCloud& cloud) {
  auto out = open_out(path, std::ios::binary);
  const bool has_intensity = cloud.intensity.size() == cloud.size();
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    for (int k = 0; k < 3; ++k) put_little<float>(out, static_cast<float>(cloud.points(k, i)));
    put_little<float>(out, has_intensity ? cloud.intensity[i] : 0.0f);
  }
}

std::vector<Isometry3> load_poses(const fs::path& path) {
  auto in = open_in(path);
  std::vector<Isometry3> poses;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto v = parse_numbers(line, path, line_no);
    if (v.size() != 12) {
      throw DataError(describe(path) + " line " + std::to_string(line_no) + ": expected 12 values, got " +
                      std::to_string(v.size()));
    }
    Isometry3 T = Isometry3::Identity();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) T.matrix()(r, c) = v[std::size_t(r * 4 + c)];
    }
    const double det = T.linear().determinant();
    if (std::abs(det - 1.0) > 1e-3) {
      throw DataError(describe(path) + " line " + std::to_string(line_no) +
                      ": rotation is not orthonormal (determinant " + std::to_string(det) + ")");
    }
    poses.push_back(T);
  }
  return poses;
}

void save_poses(const fs::path& path, const std::vector<Isometry3>& poses) {
  auto out = open_out(path);
  out << std::setprecision(17);
  for (const auto& T : poses) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) out << T.matrix()(r, c) << (r == 2 && c == 3 ? '\n' : ' ');
    }
  }
}

std::vector<MotionCommand> load_odometry(const fs::path& path) {
  auto in = open_in(path);
  std::vector<MotionCommand> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto v = parse_numbers(line, path, line_no);
    if (v.size() != 3) {
      throw DataError(describe(path) + " line " + std::to_string(line_no) + ": expected 3 values, got " +
                      std::to_string(v.size()));
    }
    out.push_back({v[0], v[1], v[2]});
  }
  return out;
}

void save_odometry(const fs::path& path, const std::vector<MotionCommand>& odometry) {
  auto out = open_out(path);
  out << std::setprecision(17);
  for (const auto& u : odometry) out << u.trans << ' ' << u.rot1 << ' ' << u.rot2 << '\n';
}

// --- PLY -------------------------------------------------------------------

namespace {

enum class PlyType { kInt8, kUInt8, kInt16, kUInt16, kInt32, kUInt32, kFloat32, kFloat64 };

std::optional<PlyType> ply_type(std::string_view name) {
  static const std::map<std::string_view, PlyType> kTypes = {
      {"char", PlyType::kInt8},     {"int8", PlyType::kInt8},      {"uchar", PlyType::kUInt8},
      {"uint8", PlyType::kUInt8},   {"short", PlyType::kInt16},    {"int16", PlyType::kInt16},
      {"ushort", PlyType::kUInt16}, {"uint16", PlyType::kUInt16},  {"int", PlyType::kInt32},
      {"int32", PlyType::kInt32},   {"uint", PlyType::kUInt32},    {"uint32", PlyType::kUInt32},
      {"float", PlyType::kFloat32}, {"float32", PlyType::kFloat32}, {"double", PlyType::kFloat64},
      {"float64", PlyType::kFloat64}};
  const auto it = kTypes.find(name);
  if (it == kTypes.end()) return std::nullopt;
  return it->second;
}

std::size_t ply_size(PlyType t) {
  switch (t) {
    case PlyType::kInt8:
    case PlyType::kUInt8: return 1;
    case PlyType::kInt16:
    case PlyType::kUInt16: return 2;
    case PlyType::kInt32:
    case PlyType::kUInt32:
    case PlyType::kFloat32: return 4;
    case PlyType::kFloat64: return 8;
  }
  return 0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::kFloat32;
  bool is_list = false;
  PlyType count_type = PlyType::kUInt8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

/// Reads scalar values either from whitespace tokens or from a little-endian byte stream.
class PlyReader {
 public:
  PlyReader(std::istream& in, bool binary, const fs::path& path) : in_(in), binary_(binary), path_(path) {}

  double read(PlyType t, const std::string& where) {
    if (!binary_) {
      std::string tok;
      if (!(in_ >> tok)) throw DataError(describe(path_) + ": unexpected end of data in " + where);
      double v;
      if (!parse_double(tok, v)) throw DataError(describe(path_) + ": invalid value '" + tok + "' in " + where);
      return v;
    }
    char buf[8];
    if (!in_.read(buf, std::streamsize(ply_size(t)))) {
      throw DataError(describe(path_) + ": unexpected end of data in " + where);
    }
    switch (t) {
      case PlyType::kInt8: return from_little<std::int8_t>(buf);
      case PlyType::kUInt8: return from_little<std::uint8_t>(buf);
      case PlyType::kInt16: return from_little<std::int16_t>(buf);
      case PlyType::kUInt16: return from_little<std::uint16_t>(buf);
      case PlyType::kInt32: return from_little<std::int32_t>(buf);
      case PlyType::kUInt32: return from_little<std::uint32_t>(buf);
      case PlyType::kFloat32: return from_little<float>(buf);
      case PlyType::kFloat64: return from_little<double>(buf);
    }
    return 0.0;
  }

 private:
  std::istream& in_;
  bool binary_;
  const fs::path& path_;
};

}  // namespace

TriangleMesh read_ply(const fs::path& path) {
  auto in = open_in(path, std::ios::binary);
  std::string line;
  if (!std::getline(in, line) || line.substr(0, 3) != "ply") throw DataError(describe(path) + ": not a PLY file");
  bool binary = false;
  std::vector<PlyElement> elements;
  std::size_t line_no = 1;
  bool header_done = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
    const std::string where = describe(path) + " header line " + std::to_string(line_no);
    if (tok[0] == "end_header") {
      header_done = true;
      break;
    }
    if (tok[0] == "format") {
      if (tok.size() < 2) throw DataError(where + ": incomplete format line");
      if (tok[1] == "ascii") {
        binary = false;
      } else if (tok[1] == "binary_little_endian") {
        binary = true;
      } else {
        throw DataError(where + ": unsupported format '" + std::string(tok[1]) + "'");
      }
    } else if (tok[0] == "element") {
      std::size_t count = 0;
      if (tok.size() != 3 || !parse_int(tok[2], count)) throw DataError(where + ": malformed element line");
      elements.push_back({std::string(tok[1]), count, {}});
    } else if (tok[0] == "property") {
      if (elements.empty()) throw DataError(where + ": property before any element");
      PlyProperty prop;
      if (tok.size() == 5 && tok[1] == "list") {
        const auto ct = ply_type(tok[2]);
        const auto it = ply_type(tok[3]);
        if (!ct || !it) throw DataError(where + ": unknown list property type");
        prop = {std::string(tok[4]), *it, true, *ct};
      } else if (tok.size() == 3) {
        const auto t = ply_type(tok[1]);
        if (!t) throw DataError(where + ": unknown property type '" + std::string(tok[1]) + "'");
        prop = {std::string(tok[2]), *t, false, PlyType::kUInt8};
      } else {
        throw DataError(where + ": malformed property line");
      }
      elements.back().properties.push_back(prop);
    } else {
      throw DataError(where + ": unexpected keyword '" + std::string(tok[0]) + "'");
    }
  }
  if (!header_done) throw DataError(describe(path) + ": missing end_header");

  TriangleMesh mesh;
  PlyReader reader(in, binary, path);
  for (const auto& el : elements) {
    const bool is_vertex = el.name == "vertex";
    const bool is_face = el.name == "face";
    if (is_vertex) {
      mesh.vertices.resize(el.count);
      mesh.labels.assign(el.count, VertexLabel::kNonGround);
    }
    for (std::size_t i = 0; i < el.count; ++i) {
      const std::string where = el.name + " " + std::to_string(i);
      Eigen::Vector3d xyz = Eigen::Vector3d::Zero();
      int rgb[3] = {-1, -1, -1};
      for (const auto& prop : el.properties) {
        if (prop.is_list) {
          const double count = reader.read(prop.count_type, where);
          std::vector<double> items(static_cast<std::size_t>(std::max(0.0, count)));
          for (double& item : items) item = reader.read(prop.type, where);
          if (is_face && (prop.name == "vertex_indices" || prop.name == "vertex_index")) {
            if (items.size() != 3) {
              throw DataError(describe(path) + ": " + where + " has " + std::to_string(items.size()) +
                              " indices, expected 3");
            }
            mesh.triangles.emplace_back(int(items[0]), int(items[1]), int(items[2]));
          }
          continue;
        }
        const double v = reader.read(prop.type, where);
        if (!is_vertex) continue;
        if (prop.name == "x") xyz.x() = v;
        else if (prop.name == "y") xyz.y() = v;
        else if (prop.name == "z") xyz.z() = v;
        else if (prop.name == "red") rgb[0] = int(v);
        else if (prop.name == "green") rgb[1] = int(v);
        else if (prop.name == "blue") rgb[2] = int(v);
      }
      if (is_vertex) {
        if (!xyz.allFinite()) throw DataError(describe(path) + ": " + where + " has a non-finite coordinate");
        mesh.vertices[i] = xyz;
        if (rgb[0] == 255 && rgb[1] == 0 && rgb[2] == 0) mesh.labels[i] = VertexLabel::kGround;
      }
    }
  }
  try {
    mesh.validate();
  } catch (const ContractError& e) {
    throw DataError(describe(path) + ": " + e.what());
  }
  return mesh;
}

void write_ply(const fs::path& path, const TriangleMesh& mesh, PlyFormat format) {
  mesh.validate();
  const bool binary = format == PlyFormat::kBinaryLittleEndian;
  auto out = open_out(path, std::ios::binary);
  out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n"
      << "comment meshloc map, red vertices are ground\n"
      << "element vertex " << mesh.vertices.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "element face " << mesh.triangles.size() << "\n"
      << "property list uchar int vertex_indices\nend_header\n";
  out << std::setprecision(9);
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Eigen::Vector3f p = mesh.vertices[i].cast<float>();
    const bool ground = mesh.labels[i] == VertexLabel::kGround;
    const std::uint8_t r = ground ? 255 : 0, b = ground ? 0 : 255;
    if (binary) {
      for (int k = 0; k < 3; ++k) put_little<float>(out, p[k]);
      put_little<std::uint8_t>(out, r);
      put_little<std::uint8_t>(out, 0);
      put_little<std::uint8_t>(out, b);
    } else {
      out << p.x() << ' ' << p.y() << ' ' << p.z() << ' ' << int(r) << " 0 " << int(b) << '\n';
    }
  }
  for (const auto& t : mesh.triangles) {
    if (binary) {
      put_little<std::uint8_t>(out, 3);
      for (int k = 0; k < 3; ++k) put_little<std::int32_t>(out, t[k]);
    } else {
      out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    }
  }
}

void write_oriented_cloud_ply(const fs::path& path, const Eigen::Matrix3Xd& points, const Eigen::Matrix3Xd& normals,
                              const std::vector<VertexLabel>& labels) {
  if (points.cols() != normals.cols() || std::size_t(points.cols()) != labels.size()) {
    throw ContractError("write_oriented_cloud_ply: points, normals and labels differ in count");
  }
  auto out = open_out(path, std::ios::binary);
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << points.cols() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "property float nx\nproperty float ny\nproperty float nz\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    for (int k = 0; k < 3; ++k) put_little<float>(out, static_cast<float>(points(k, i)));
    for (int k = 0; k < 3; ++k) put_little<float>(out, static_cast<float>(normals(k, i)));
    const bool ground = labels[std::size_t(i)] == VertexLabel::kGround;
    put_little<std::uint8_t>(out, ground ? 255 : 0);
    put_little<std::uint8_t>(out, 0);
    put_little<std::uint8_t>(out, ground ? 0 : 255);
  }
}

// --- tile index -------------------------------------------------------------

namespace {
constexpr std::string_view kTileMagic = "meshloc_tiles";
constexpr int kTileVersion = 1;
}  // namespace

void save_tile_index(const fs::path& path, const TileGrid& grid) {
  auto out = open_out(path);
  out << std::setprecision(17);
  out << kTileMagic << ' ' << kTileVersion << '\n'
      << "tile_size " << grid.tile_size() << '\n'
      << "origin " << grid.origin().x() << ' ' << grid.origin().y() << '\n'
      << "tile_count " << grid.tiles().size() << '\n';
  for (const auto& [c, tris] : grid.tiles()) {
    out << "tile " << c.ix << ' ' << c.iy << ' ' << tris.size() << '\n';
    for (std::size_t i = 0; i < tris.size(); ++i) out << tris[i] << (i + 1 == tris.size() ? "" : " ");
    out << '\n';
  }
}

TileGrid load_tile_index(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  std::size_t line_no = 0;
  auto next = [&](std::string_view what) {
    if (!std::getline(in, line)) throw DataError(describe(path) + ": missing " + std::string(what));
    ++line_no;
    return split_ws(line);
  };
  auto fail = [&](const std::string& msg) -> DataError {
    return DataError(describe(path) + " line " + std::to_string(line_no) + ": " + msg);
  };
  auto tok = next("header");
  int version = 0;
  if (tok.size() != 2 || tok[0] != kTileMagic || !parse_int(tok[1], version)) throw fail("not a tile index");
  if (version != kTileVersion) throw fail("unsupported tile index version " + std::to_string(version));
  double tile_size = 0.0, ox = 0.0, oy = 0.0;
  tok = next("tile_size");
  if (tok.size() != 2 || tok[0] != "tile_size" || !parse_double(tok[1], tile_size) || !(tile_size > 0.0)) {
    throw fail("malformed tile_size");
  }
  tok = next("origin");
  if (tok.size() != 3 || tok[0] != "origin" || !parse_double(tok[1], ox) || !parse_double(tok[2], oy)) {
    throw fail("malformed origin");
  }
  std::size_t count = 0;
  tok = next("tile_count");
  if (tok.size() != 2 || tok[0] != "tile_count" || !parse_int(tok[1], count)) throw fail("malformed tile_count");
  TileGrid grid(tile_size, {ox, oy});
  for (std::size_t k = 0; k < count; ++k) {
    tok = next("tile record");
    TileCoord c;
    std::size_t n = 0;
    if (tok.size() != 4 || tok[0] != "tile" || !parse_int(tok[1], c.ix) || !parse_int(tok[2], c.iy) ||
        !parse_int(tok[3], n)) {
      throw fail("malformed tile record");
    }
    tok = next("triangle list");
    if (tok.size() != n) throw fail("expected " + std::to_string(n) + " triangle indices, got " + std::to_string(tok.size()));
    std::vector<int> tris(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!parse_int(tok[i], tris[i]) || tris[i] < 0) throw fail("invalid triangle index");
    }
    grid.set_tile(c, std::move(tris));
  }
  return grid;
}

void write_pgm16(const fs::path& path, const RangeImage& image) {
  auto out = open_out(path, std::ios::binary);
  out << "P5\n" << image.width() << ' ' << image.height() << "\n65535\n";
  for (int v = 0; v < image.height(); ++v) {
    for (int u = 0; u < image.width(); ++u) {
      const double mm = image.valid(u, v) ? std::round(double(image.range(u, v)) * 1000.0) : 0.0;
      const auto value = static_cast<std::uint16_t>(std::clamp(mm, 0.0, 65535.0));
      out.put(static_cast<char>(value >> 8));
      out.put(static_cast<char>(value & 0xff));
    }
  }
}

void write_trajectory_log(const fs::path& path, const std::vector<TrajectoryRecord>& records) {
  auto out = open_out(path);
  out << "frame,x,y,yaw,n_eff,converged,occupied_tiles\n" << std::setprecision(10);
  for (const auto& r : records) {
    out << r.frame << ',' << r.x << ',' << r.y << ',' << r.yaw << ',' << r.n_eff << ',' << (r.converged ? 1 : 0)
        << ',' << r.occupied_tiles << '\n';
  }
}

std::vector<TrajectoryRecord> read_trajectory_log(const fs::path& path) {
  auto in = open_in(path);
  std::vector<TrajectoryRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line) || line.rfind("frame", 0) == 0) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos; rest.remove_prefix(pos + 1)) {
      f.push_back(rest.substr(0, pos));
    }
    f.push_back(rest);
    for (auto& s : f) {
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    }
    TrajectoryRecord r;
    int conv = 0;
    if (f.size() != 7 || !parse_int(f[0], r.frame) || !parse_double(f[1], r.x) || !parse_double(f[2], r.y) ||
        !parse_double(f[3], r.yaw) || !parse_double(f[4], r.n_eff) || !parse_int(f[5], conv) ||
        !parse_int(f[6], r.occupied_tiles)) {
      throw DataError(describe(path) + " line " + std::to_string(line_no) + ": malformed trajectory record");
    }
    r.converged = conv != 0;
    out.push_back(r);
  }
  return out;
}

}  // namespace meshloc
