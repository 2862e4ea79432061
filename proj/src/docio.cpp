#include "terracal/docio.hpp"

#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "terracal/errors.hpp"

namespace terracal {

namespace {
constexpr const char* kModule = "docio";

using json = nlohmann::json;

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(errc::io_error, kModule, fmt::format("cannot open '{}'", path.string()));
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    raise(errc::parse_error, kModule, fmt::format("{}: {}", path.string(), e.what()));
  }
  return doc;
}

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) raise(errc::io_error, kModule, fmt::format("cannot open '{}'", path.string()));
  out << doc.dump(2) << "\n";
  if (!out) raise(errc::io_error, kModule, fmt::format("error writing '{}'", path.string()));
}

[[noreturn]] void rethrow_as_parse(const std::filesystem::path& path, const json::exception& e) {
  raise(errc::parse_error, kModule, fmt::format("{}: {}", path.string(), e.what()));
}

json transform_to_json(const RigidTransform& t) {
  return json{{"qw", t.rotation.w()}, {"qx", t.rotation.x()}, {"qy", t.rotation.y()},
              {"qz", t.rotation.z()}, {"tx", t.translation.x()}, {"ty", t.translation.y()},
              {"tz", t.translation.z()}};
}

RigidTransform transform_from_json(const json& j) {
  return {Eigen::Quaterniond(j.at("qw").get<double>(), j.at("qx").get<double>(),
                             j.at("qy").get<double>(), j.at("qz").get<double>()),
          Eigen::Vector3d(j.at("tx").get<double>(), j.at("ty").get<double>(),
                          j.at("tz").get<double>())};
}

}  // namespace

CameraIntrinsics load_intrinsics(const std::filesystem::path& path) {
  const json doc = read_json(path);
  try {
    CameraIntrinsics k;
    k.fx = doc.at("fx").get<double>();
    k.fy = doc.at("fy").get<double>();
    k.cx = doc.at("cx").get<double>();
    k.cy = doc.at("cy").get<double>();
    k.width = doc.at("width").get<int>();
    k.height = doc.at("height").get<int>();
    k.k1 = doc.value("k1", 0.0);
    k.k2 = doc.value("k2", 0.0);
    k.p1 = doc.value("p1", 0.0);
    k.p2 = doc.value("p2", 0.0);
    validate(k);
    return k;
  } catch (const json::exception& e) {
    rethrow_as_parse(path, e);
  }
}

void save_intrinsics(const std::filesystem::path& path, const CameraIntrinsics& k) {
  validate(k);
  write_json(path, json{{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy},
                        {"width", k.width}, {"height", k.height}, {"k1", k.k1}, {"k2", k.k2},
                        {"p1", k.p1}, {"p2", k.p2}});
}

RigidTransform load_transform(const std::filesystem::path& path) {
  const json doc = read_json(path);
  try {
    // Accept both a bare transform and a calibration document wrapping one.
    if (doc.contains("transform")) return transform_from_json(doc.at("transform"));
    return transform_from_json(doc);
  } catch (const json::exception& e) {
    rethrow_as_parse(path, e);
  }
}

void save_transform(const std::filesystem::path& path, const RigidTransform& t) {
  write_json(path, transform_to_json(t));
}

Homography load_homography_doc(const std::filesystem::path& path) {
  const json doc = read_json(path);
  try {
    const auto& arr = doc.at("homography");
    if (!arr.is_array() || arr.size() != 9)
      raise(errc::parse_error, kModule,
            fmt::format("{}: 'homography' must be 9 numbers row-major", path.string()));
    Eigen::Matrix3d m;
    for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = arr[i].get<double>();
    return Homography::from_matrix(m);
  } catch (const json::exception& e) {
    rethrow_as_parse(path, e);
  }
}

void save_homography_doc(const std::filesystem::path& path, const Homography& h) {
  json arr = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) arr.push_back(h.m(r, c));
  write_json(path, json{{"homography", arr}});
}

std::string fnv1a_hex_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(errc::io_error, kModule, fmt::format("cannot open '{}'", path.string()));
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
    if (!in) break;
  }
  return fmt::format("fnv1a:{:016x}", h);
}

void save_calibration_doc(const std::filesystem::path& path, const CalibrationDoc& doc) {
  const Eigen::Matrix4d m = doc.result.transform.matrix();
  json matrix = json::array();
  for (int r = 0; r < 4; ++r) {
    json row = json::array();
    for (int c = 0; c < 4; ++c) row.push_back(m(r, c));
    matrix.push_back(row);
  }
  const EulerPose e = to_euler(doc.result.transform);

  json out;
  out["format"] = "terracal-calibration";
  out["version"] = 1;
  out["name"] = doc.name;
  out["matrix"] = matrix;
  out["transform"] = transform_to_json(doc.result.transform);
  out["euler"] = {{"x", e.x},
                  {"y", e.y},
                  {"z", e.z},
                  {"roll_deg", e.roll_deg},
                  {"pitch_deg", e.pitch_deg},
                  {"yaw_deg", e.yaw_deg}};
  out["rms_reprojection"] = doc.result.rms_reprojection;
  out["inlier_count"] = doc.result.inlier_count;
  out["inlier_ratio"] = doc.result.inlier_ratio;
  out["iterations_used"] = doc.result.iterations_used;
  out["inputs"] = doc.input_digests;
  out["tool_version"] = kToolVersion;
  write_json(path, out);
}

CalibrationDoc load_calibration_doc(const std::filesystem::path& path) {
  const json j = read_json(path);
  try {
    if (j.at("format").get<std::string>() != "terracal-calibration" ||
        j.at("version").get<int>() != 1)
      raise(errc::parse_error, kModule,
            fmt::format("{}: not a terracal-calibration v1 document", path.string()));
    CalibrationDoc doc;
    doc.name = j.at("name").get<std::string>();
    doc.result.transform = transform_from_json(j.at("transform"));
    doc.result.rms_reprojection = j.at("rms_reprojection").get<double>();
    doc.result.inlier_count = j.at("inlier_count").get<int>();
    doc.result.inlier_ratio = j.at("inlier_ratio").get<double>();
    doc.result.iterations_used = j.at("iterations_used").get<int>();
    if (j.contains("inputs"))
      doc.input_digests = j.at("inputs").get<std::map<std::string, std::string>>();
    return doc;
  } catch (const json::exception& e) {
    rethrow_as_parse(path, e);
  }
}

namespace {
json axis_to_json(const AxisError& a) {
  return json{{"measured", a.measured}, {"estimated", a.estimated}, {"error", a.error}};
}
}  // namespace

void save_error_report_doc(const std::filesystem::path& path, const ErrorReport& report) {
  json out;
  out["format"] = "terracal-error-report";
  out["version"] = 1;
  out["x_cm"] = axis_to_json(report.x_cm);
  out["y_cm"] = axis_to_json(report.y_cm);
  out["z_cm"] = axis_to_json(report.z_cm);
  out["roll_deg"] = axis_to_json(report.roll_deg);
  out["pitch_deg"] = axis_to_json(report.pitch_deg);
  out["yaw_deg"] = axis_to_json(report.yaw_deg);
  out["convention"] = "error = estimated - measured";
  write_json(path, out);
}

std::string format_error_report(const ErrorReport& report) {
  std::string out = fmt::format("{:<10} {:>14} {:>14} {:>14}\n", "axis", "measured", "estimated",
                                "error");
  const auto row = [&](const char* name, const AxisError& a) {
    out += fmt::format("{:<10} {:>14.5g} {:>14.5g} {:>14.5g}\n", name, a.measured, a.estimated,
                       a.error);
  };
  row("x_cm", report.x_cm);
  row("y_cm", report.y_cm);
  row("z_cm", report.z_cm);
  row("roll_deg", report.roll_deg);
  row("pitch_deg", report.pitch_deg);
  row("yaw_deg", report.yaw_deg);
  return out;
}

void save_features(const std::filesystem::path& path, const FeatureFile& file) {
  json kps = json::array();
  json descs = json::array();
  for (const Feature& f : file.features) {
    kps.push_back({f.keypoint.position.u, f.keypoint.position.v, f.keypoint.response,
                   f.keypoint.orientation});
    descs.push_back(fmt::format("{:016x}{:016x}{:016x}{:016x}", f.descriptor.bits[0],
                                f.descriptor.bits[1], f.descriptor.bits[2], f.descriptor.bits[3]));
  }
  json out;
  out["format"] = "terracal-features";
  out["version"] = 1;
  out["image"] = {{"width", file.width}, {"height", file.height}};
  out["keypoints"] = kps;
  out["descriptors"] = descs;
  write_json(path, out);
}

FeatureFile load_features(const std::filesystem::path& path) {
  const json doc = read_json(path);
  try {
    if (doc.at("format").get<std::string>() != "terracal-features" ||
        doc.at("version").get<int>() != 1)
      raise(errc::parse_error, kModule,
            fmt::format("{}: not a terracal-features v1 document", path.string()));
    FeatureFile file;
    file.width = doc.at("image").at("width").get<int>();
    file.height = doc.at("image").at("height").get<int>();
    const auto& kps = doc.at("keypoints");
    const auto& descs = doc.at("descriptors");
    if (kps.size() != descs.size())
      raise(errc::parse_error, kModule,
            fmt::format("{}: {} keypoints vs {} descriptors", path.string(), kps.size(),
                        descs.size()));
    for (std::size_t i = 0; i < kps.size(); ++i) {
      Feature f;
      f.keypoint.position = {kps[i][0].get<double>(), kps[i][1].get<double>()};
      f.keypoint.response = kps[i][2].get<float>();
      f.keypoint.orientation = kps[i][3].get<float>();
      const std::string hex = descs[i].get<std::string>();
      if (hex.size() != 64)
        raise(errc::parse_error, kModule,
              fmt::format("{}: descriptor {} is not 64 hex digits", path.string(), i));
      for (int w = 0; w < 4; ++w)
        f.descriptor.bits[w] = std::stoull(hex.substr(static_cast<std::size_t>(w) * 16, 16),
                                           nullptr, 16);
      file.features.push_back(f);
    }
    return file;
  } catch (const json::exception& e) {
    rethrow_as_parse(path, e);
  } catch (const std::invalid_argument&) {
    raise(errc::parse_error, kModule, fmt::format("{}: bad descriptor hex", path.string()));
  }
}

void save_correspondences(const std::filesystem::path& path,
                          const std::vector<Correspondence2D3D>& corrs, std::size_t dropped) {
  json pairs = json::array();
  for (const Correspondence2D3D& c : corrs)
    pairs.push_back({c.pixel.u, c.pixel.v, c.point.x(), c.point.y(), c.point.z()});
  json out;
  out["format"] = "terracal-correspondences";
  out["version"] = 1;
  out["pairs"] = pairs;
  out["dropped"] = dropped;
  write_json(path, out);
}

std::vector<Correspondence2D3D> load_correspondences(const std::filesystem::path& path) {
  const json doc = read_json(path);
  try {
    if (doc.at("format").get<std::string>() != "terracal-correspondences" ||
        doc.at("version").get<int>() != 1)
      raise(errc::parse_error, kModule,
            fmt::format("{}: not a terracal-correspondences v1 document", path.string()));
    std::vector<Correspondence2D3D> corrs;
    for (const auto& e : doc.at("pairs")) {
      if (!e.is_array() || e.size() != 5)
        raise(errc::parse_error, kModule,
              fmt::format("{}: pair entries must be [u,v,x,y,z]", path.string()));
      corrs.push_back({{e[0].get<double>(), e[1].get<double>()},
                       {e[2].get<double>(), e[3].get<double>(), e[4].get<double>()}});
    }
    return corrs;
  } catch (const json::exception& e) {
    rethrow_as_parse(path, e);
  }
}

}  // namespace terracal
