#include "terracal/point_cloud.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "terracal/errors.hpp"

namespace terracal {

namespace {
constexpr const char* kModule = "cloudmap";

static_assert(std::endian::native == std::endian::little,
              "binary PLY I/O assumes a little-endian host");

struct PlyProperty {
  std::string name;
  int byte_size = 0;  // 1,2,4,8
  char kind = 'f';    // 'f' float, 'i' signed, 'u' unsigned
};

int ply_type_size(const std::string& t, char& kind) {
  if (t == "float" || t == "float32") { kind = 'f'; return 4; }
  if (t == "double" || t == "float64") { kind = 'f'; return 8; }
  if (t == "char" || t == "int8") { kind = 'i'; return 1; }
  if (t == "uchar" || t == "uint8") { kind = 'u'; return 1; }
  if (t == "short" || t == "int16") { kind = 'i'; return 2; }
  if (t == "ushort" || t == "uint16") { kind = 'u'; return 2; }
  if (t == "int" || t == "int32") { kind = 'i'; return 4; }
  if (t == "uint" || t == "uint32") { kind = 'u'; return 4; }
  return 0;
}

double decode_scalar(const char* bytes, const PlyProperty& p) {
  switch (p.kind) {
    case 'f':
      if (p.byte_size == 4) { float v; std::memcpy(&v, bytes, 4); return v; }
      else { double v; std::memcpy(&v, bytes, 8); return v; }
    case 'i': {
      std::int64_t v = 0;
      if (p.byte_size == 1) { std::int8_t t; std::memcpy(&t, bytes, 1); v = t; }
      else if (p.byte_size == 2) { std::int16_t t; std::memcpy(&t, bytes, 2); v = t; }
      else { std::int32_t t; std::memcpy(&t, bytes, 4); v = t; }
      return static_cast<double>(v);
    }
    default: {
      std::uint64_t v = 0;
      if (p.byte_size == 1) { std::uint8_t t; std::memcpy(&t, bytes, 1); v = t; }
      else if (p.byte_size == 2) { std::uint16_t t; std::memcpy(&t, bytes, 2); v = t; }
      else { std::uint32_t t; std::memcpy(&t, bytes, 4); v = t; }
      return static_cast<double>(v);
    }
  }
}

[[noreturn]] void bad_file(const std::filesystem::path& path, const std::string& why) {
  raise(errc::parse_error, kModule, fmt::format("{}: {}", path.string(), why));
}

}  // namespace

void validate(const PointCloud& cloud) {
  if (cloud.points.size() != cloud.intensities.size())
    raise(errc::invalid_argument, kModule,
          fmt::format("points/intensities length mismatch ({} vs {})", cloud.points.size(),
                      cloud.intensities.size()));
  if (!cloud.timestamps.empty() && cloud.timestamps.size() != cloud.points.size())
    raise(errc::invalid_argument, kModule,
          fmt::format("timestamps length mismatch ({} vs {})", cloud.timestamps.size(),
                      cloud.points.size()));
  for (const auto& p : cloud.points)
    if (!p.allFinite()) raise(errc::invalid_argument, kModule, "non-finite point coordinate");
}

PointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(errc::io_error, kModule, fmt::format("cannot open '{}'", path.string()));

  std::string line;
  if (!std::getline(in, line) || line.substr(0, 3) != "ply") bad_file(path, "missing ply magic");

  bool binary = false;
  std::size_t vertex_count = 0;
  std::vector<PlyProperty> props;
  bool in_vertex_element = false;
  bool header_done = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "comment") continue;
    if (tok == "format") {
      std::string f;
      ls >> f;
      if (f == "binary_little_endian") binary = true;
      else if (f == "ascii") binary = false;
      else bad_file(path, fmt::format("unsupported format '{}'", f));
    } else if (tok == "element") {
      std::string name;
      std::size_t count;
      ls >> name >> count;
      in_vertex_element = (name == "vertex");
      if (in_vertex_element) vertex_count = count;
      else if (count != 0) bad_file(path, fmt::format("unsupported element '{}'", name));
    } else if (tok == "property") {
      if (!in_vertex_element) continue;
      std::string type, name;
      ls >> type >> name;
      if (type == "list") bad_file(path, "list properties are not supported on vertex");
      PlyProperty p;
      p.name = name;
      p.byte_size = ply_type_size(type, p.kind);
      if (p.byte_size == 0) bad_file(path, fmt::format("unknown property type '{}'", type));
      props.push_back(p);
    } else if (tok == "end_header") {
      header_done = true;
      break;
    }
  }
  if (!header_done) bad_file(path, "unterminated header");

  int ix = -1, iy = -1, iz = -1, ii = -1;
  int stride = 0;
  std::vector<int> offsets(props.size());
  for (std::size_t i = 0; i < props.size(); ++i) {
    offsets[i] = stride;
    stride += props[i].byte_size;
    if (props[i].name == "x") ix = static_cast<int>(i);
    else if (props[i].name == "y") iy = static_cast<int>(i);
    else if (props[i].name == "z") iz = static_cast<int>(i);
    else if (props[i].name == "intensity") ii = static_cast<int>(i);
  }
  if (ix < 0 || iy < 0 || iz < 0 || ii < 0)
    bad_file(path, "vertex element must provide x, y, z, intensity");

  PointCloud cloud;
  cloud.points.reserve(vertex_count);
  cloud.intensities.reserve(vertex_count);
  if (binary) {
    std::vector<char> row(stride);
    for (std::size_t n = 0; n < vertex_count; ++n) {
      in.read(row.data(), stride);
      if (!in) bad_file(path, fmt::format("truncated at vertex {}", n));
      cloud.push_back({decode_scalar(row.data() + offsets[ix], props[ix]),
                       decode_scalar(row.data() + offsets[iy], props[iy]),
                       decode_scalar(row.data() + offsets[iz], props[iz])},
                      static_cast<float>(decode_scalar(row.data() + offsets[ii], props[ii])));
    }
  } else {
    std::vector<double> vals(props.size());
    for (std::size_t n = 0; n < vertex_count; ++n) {
      if (!std::getline(in, line)) bad_file(path, fmt::format("truncated at vertex {}", n));
      std::istringstream ls(line);
      for (auto& v : vals)
        if (!(ls >> v)) bad_file(path, fmt::format("bad vertex line {}", n));
      cloud.push_back({vals[ix], vals[iy], vals[iz]}, static_cast<float>(vals[ii]));
    }
  }
  validate(cloud);
  return cloud;
}

void write_ply(const std::filesystem::path& path, const PointCloud& cloud, PlyFormat format) {
  validate(cloud);
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(errc::io_error, kModule, fmt::format("cannot open '{}'", path.string()));
  out << "ply\n"
      << (format == PlyFormat::binary_little_endian ? "format binary_little_endian 1.0\n"
                                                    : "format ascii 1.0\n")
      << "element vertex " << cloud.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\nproperty float intensity\n"
      << "end_header\n";
  if (format == PlyFormat::binary_little_endian) {
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const float row[4] = {static_cast<float>(cloud.points[i].x()),
                            static_cast<float>(cloud.points[i].y()),
                            static_cast<float>(cloud.points[i].z()), cloud.intensities[i]};
      out.write(reinterpret_cast<const char*>(row), sizeof(row));
    }
  } else {
    for (std::size_t i = 0; i < cloud.size(); ++i)
      out << fmt::format("{:.9g} {:.9g} {:.9g} {:.9g}\n", cloud.points[i].x(), cloud.points[i].y(),
                         cloud.points[i].z(), cloud.intensities[i]);
  }
  if (!out) raise(errc::io_error, kModule, fmt::format("error writing '{}'", path.string()));
}

PointCloud read_pcd(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(errc::io_error, kModule, fmt::format("cannot open '{}'", path.string()));

  std::vector<std::string> fields;
  std::size_t count = 0;
  bool data_ascii = false;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "FIELDS") {
      std::string f;
      while (ls >> f) fields.push_back(f);
    } else if (tok == "POINTS") {
      ls >> count;
    } else if (tok == "DATA") {
      std::string mode;
      ls >> mode;
      if (mode != "ascii") bad_file(path, fmt::format("unsupported DATA mode '{}'", mode));
      data_ascii = true;
      break;
    }
  }
  if (!data_ascii) bad_file(path, "missing DATA ascii section");

  int ix = -1, iy = -1, iz = -1, ii = -1;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (fields[i] == "x") ix = static_cast<int>(i);
    else if (fields[i] == "y") iy = static_cast<int>(i);
    else if (fields[i] == "z") iz = static_cast<int>(i);
    else if (fields[i] == "intensity") ii = static_cast<int>(i);
  }
  if (ix < 0 || iy < 0 || iz < 0 || ii < 0) bad_file(path, "FIELDS must include x y z intensity");

  PointCloud cloud;
  std::vector<double> vals(fields.size());
  for (std::size_t n = 0; n < count; ++n) {
    if (!std::getline(in, line)) bad_file(path, fmt::format("truncated at point {}", n));
    std::istringstream ls(line);
    for (auto& v : vals)
      if (!(ls >> v)) bad_file(path, fmt::format("bad point line {}", n));
    cloud.push_back({vals[ix], vals[iy], vals[iz]}, static_cast<float>(vals[ii]));
  }
  validate(cloud);
  return cloud;
}

PointCloud read_cloud(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".ply") return read_ply(path);
  if (ext == ".pcd") return read_pcd(path);
  raise(errc::invalid_argument, kModule, fmt::format("unsupported cloud format '{}'", ext));
}

}  // namespace terracal
