#include "terracal/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "terracal/calib.hpp"
#include "terracal/cloudmap.hpp"
#include "terracal/correspond.hpp"
#include "terracal/costpipe.hpp"
#include "terracal/docio.hpp"
#include "terracal/errors.hpp"
#include "terracal/geometry.hpp"
#include "terracal/png_io.hpp"
#include "terracal/warp.hpp"

namespace terracal {

namespace {
constexpr const char* kModule = "cli";

using json = nlohmann::json;

const json& section(const PipelineConfig& cfg, const char* name) {
  if (!cfg.doc.contains(name))
    raise(errc::invalid_argument, kModule,
          fmt::format("config has no '{}' section", name));
  return cfg.doc.at(name);
}

const json& require(const json& obj, const char* key, const std::string& context) {
  if (!obj.contains(key))
    raise(errc::invalid_argument, kModule, fmt::format("{}.{} is missing", context, key));
  return obj.at(key);
}

template <typename T>
T field(const json& obj, const char* key, const std::string& context) {
  try {
    return require(obj, key, context).get<T>();
  } catch (const json::exception& e) {
    raise(errc::invalid_argument, kModule, fmt::format("{}.{}: {}", context, key, e.what()));
  }
}

template <typename T>
T field_or(const json& obj, const char* key, const std::string& context, T fallback) {
  if (!obj.contains(key)) return fallback;
  return field<T>(obj, key, context);
}

// Resolves an input path and requires the file to exist.
std::filesystem::path input_path(const PipelineConfig& cfg, const json& obj, const char* key,
                                 const std::string& context) {
  const auto path = cfg.resolve(field<std::string>(obj, key, context));
  if (!std::filesystem::exists(path))
    raise(errc::io_error, kModule,
          fmt::format("{}.{}: '{}' does not exist", context, key, path.string()));
  return path;
}

std::filesystem::path output_path(const PipelineConfig& cfg, const json& obj, const char* key,
                                  const std::string& context) {
  return cfg.resolve(field<std::string>(obj, key, context));
}

CameraIntrinsics camera_by_name(const PipelineConfig& cfg, const std::string& name) {
  const json& cameras = section(cfg, "cameras");
  if (!cameras.contains(name))
    raise(errc::invalid_argument, kModule, fmt::format("cameras.{} is missing", name));
  const std::string context = fmt::format("cameras.{}", name);
  return load_intrinsics(input_path(cfg, cameras.at(name), "intrinsics", context));
}

IcpParams icp_params_from(const json& obj, const std::string& context) {
  IcpParams p;
  p.max_iterations = field_or(obj, "max_iterations", context, p.max_iterations);
  p.convergence_eps = field_or(obj, "convergence_eps", context, p.convergence_eps);
  p.max_correspondence_dist =
      field_or(obj, "max_correspondence_dist", context, p.max_correspondence_dist);
  p.voxel_size = field_or(obj, "voxel_size", context, p.voxel_size);
  validate(p);
  return p;
}

RansacParams ransac_params_from(const json& obj, const std::string& context,
                                std::uint64_t default_seed) {
  RansacParams p;
  p.rng_seed = default_seed;
  p.max_iterations = field_or(obj, "max_iterations", context, p.max_iterations);
  p.inlier_threshold = field_or(obj, "inlier_threshold", context, p.inlier_threshold);
  p.min_inliers = field_or(obj, "min_inliers", context, p.min_inliers);
  p.sample_size = field_or(obj, "sample_size", context, p.sample_size);
  p.rng_seed = field_or(obj, "rng_seed", context, p.rng_seed);
  validate(p);
  return p;
}

PlaneModel plane_from(const json& obj, const std::string& context) {
  PlaneModel plane;
  if (obj.contains("normal")) {
    const auto& n = obj.at("normal");
    if (!n.is_array() || n.size() != 3)
      raise(errc::invalid_argument, kModule,
            fmt::format("{}.normal must be a 3-element array", context));
    plane.normal = Eigen::Vector3d(n[0].get<double>(), n[1].get<double>(), n[2].get<double>());
    const double norm = plane.normal.norm();
    if (norm <= 0.0)
      raise(errc::invalid_argument, kModule, fmt::format("{}.normal is zero", context));
    plane.normal /= norm;
  }
  plane.d = field_or(obj, "d", context, plane.d);
  validate(plane);
  return plane;
}

ImageU8 load_gray_image(const std::filesystem::path& path) { return read_png_gray8(path); }

void log_verbose(const PipelineConfig& cfg, const std::string& message) {
  if (cfg.verbose) std::cerr << fmt::format("[terracal] {}\n", message);
}

IntensityImage load_intensity(const PipelineConfig& cfg, const json& obj,
                              const std::string& context) {
  const auto png = input_path(cfg, obj, "intensity_png", context);
  const auto sidecar = input_path(cfg, obj, "intensity_sidecar", context);
  return read_intensity_image(png, sidecar);
}

CalibrationDoc calibrate_one(const PipelineConfig& cfg, const json& sec,
                             const std::string& context, const char* matches_key,
                             const std::string& camera_name, const IntensityImage& intensity,
                             const PointCloud& cloud, const RansacParams& params,
                             std::map<std::string, std::string> digests) {
  const auto matches_path = input_path(cfg, sec, matches_key, context);
  const MatchFile matches = load_matches(matches_path);
  const CameraIntrinsics k = camera_by_name(cfg, camera_name);

  const LiftResult lifted =
      lift(matches.matches, matches.keypoints_a, matches.keypoints_b, intensity, cloud);
  log_verbose(cfg, fmt::format("{}: {} matches lifted, {} dropped on holes", matches_key,
                               lifted.correspondences.size(), lifted.dropped));

  CalibrationDoc doc;
  doc.name = camera_name + "_from_lidar";
  doc.result = ransac_calibrate(lifted.correspondences, k, params);
  digests["matches"] = fnv1a_hex_digest(matches_path);
  doc.input_digests = std::move(digests);
  return doc;
}

}  // namespace

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(errc::io_error, kModule, fmt::format("cannot open config '{}'", path.string()));
  PipelineConfig cfg;
  try {
    in >> cfg.doc;
  } catch (const json::exception& e) {
    raise(errc::invalid_argument, kModule, fmt::format("{}: {}", path.string(), e.what()));
  }
  cfg.base_dir = std::filesystem::absolute(path).parent_path();
  cfg.seed = cfg.doc.value("seed", std::uint64_t{0});
  cfg.threads = cfg.doc.value("threads", 1);
  cfg.verbose = cfg.doc.value("verbose", false);
  return cfg;
}

std::filesystem::path PipelineConfig::resolve(const std::string& p) const {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

void cmd_accumulate(const PipelineConfig& cfg) {
  const json& sec = section(cfg, "accumulate");
  const std::string ctx = "accumulate";

  const auto scan_dir = cfg.resolve(field<std::string>(sec, "scan_dir", ctx));
  if (!std::filesystem::is_directory(scan_dir))
    raise(errc::io_error, kModule,
          fmt::format("{}.scan_dir: '{}' is not a directory", ctx, scan_dir.string()));

  std::vector<std::filesystem::path> scan_paths;
  for (const auto& entry : std::filesystem::directory_iterator(scan_dir)) {
    const auto ext = entry.path().extension().string();
    if (ext == ".ply" || ext == ".pcd") scan_paths.push_back(entry.path());
  }
  std::sort(scan_paths.begin(), scan_paths.end());
  if (scan_paths.empty())
    raise(errc::invalid_argument, kModule,
          fmt::format("{}: no .ply/.pcd scans in '{}'", ctx, scan_dir.string()));

  std::vector<PointCloud> scans;
  scans.reserve(scan_paths.size());
  for (const auto& p : scan_paths) scans.push_back(read_cloud(p));

  const bool use_icp = field_or(sec, "use_icp", ctx, true);
  const IcpParams icp =
      icp_params_from(sec.value("icp", json::object()), ctx + ".icp");

  // Chain pairwise registrations into map-frame poses.
  std::vector<RigidTransform> poses(scans.size());
  for (std::size_t i = 1; i < scans.size(); ++i) {
    if (!use_icp) {
      poses[i] = poses[i - 1];
      continue;
    }
    const IcpResult aligned =
        icp_align(scans[i], scans[i - 1], RigidTransform::identity(), icp);
    poses[i] = compose(poses[i - 1], aligned.transform);
    log_verbose(cfg, fmt::format("icp {} -> {}: rms {:.4g} m after {} iterations",
                                 scan_paths[i].filename().string(),
                                 scan_paths[i - 1].filename().string(), aligned.rms_error,
                                 aligned.iterations));
  }

  const double voxel = field_or(sec, "voxel_size", ctx, 0.05);
  const PointCloud merged = accumulate(scans, poses, voxel);
  write_ply(output_path(cfg, sec, "output_cloud", ctx), merged);

  // Pose log: one row per scan, timestamp = scan index.
  const auto pose_log = output_path(cfg, sec, "output_poses", ctx);
  std::ofstream out(pose_log);
  if (!out) raise(errc::io_error, kModule, fmt::format("cannot open '{}'", pose_log.string()));
  out << "timestamp,x,y,z,qx,qy,qz,qw\n";
  for (std::size_t i = 0; i < poses.size(); ++i)
    out << fmt::format("{},{:.12g},{:.12g},{:.12g},{:.12g},{:.12g},{:.12g},{:.12g}\n", i,
                       poses[i].translation.x(), poses[i].translation.y(),
                       poses[i].translation.z(), poses[i].rotation.x(), poses[i].rotation.y(),
                       poses[i].rotation.z(), poses[i].rotation.w());
  log_verbose(cfg, fmt::format("accumulated {} scans into {} points", scans.size(), merged.size()));
}

void cmd_render(const PipelineConfig& cfg) {
  const json& sec = section(cfg, "render");
  const std::string ctx = "render";

  const PointCloud cloud = read_cloud(input_path(cfg, sec, "cloud", ctx));
  const CameraIntrinsics k = camera_by_name(cfg, field<std::string>(sec, "camera", ctx));
  const RigidTransform cam_from_cloud = load_transform(input_path(cfg, sec, "pose", ctx));
  const int splat = field_or(sec, "splat_radius", ctx, 1);

  const IntensityImage img = render_intensity_image(cloud, k, cam_from_cloud, splat);
  write_intensity_image(output_path(cfg, sec, "output_png", ctx),
                        output_path(cfg, sec, "output_sidecar", ctx), img);
}

void cmd_detect(const PipelineConfig& cfg) {
  const json& sec = section(cfg, "detect");
  const std::string ctx = "detect";

  ImageU8 image = load_gray_image(input_path(cfg, sec, "image", ctx));
  if (field_or(sec, "equalize", ctx, true)) image = equalize_histogram(image);
  const int max_keypoints = field_or(sec, "max_keypoints", ctx, 1000);
  const int fast_threshold = field_or(sec, "fast_threshold", ctx, 20);

  const std::vector<Feature> features = detect(image, max_keypoints, fast_threshold);
  FeatureFile file;
  file.width = image.width;
  file.height = image.height;
  file.features = features;
  save_features(output_path(cfg, sec, "output", ctx), file);
  log_verbose(cfg, fmt::format("detected {} keypoints", features.size()));
}

void cmd_match(const PipelineConfig& cfg) {
  const json& sec = section(cfg, "match");
  const std::string ctx = "match";

  const FeatureFile a = load_features(input_path(cfg, sec, "features_a", ctx));
  const FeatureFile b = load_features(input_path(cfg, sec, "features_b", ctx));
  const double ratio = field_or(sec, "ratio", ctx, 0.8);
  const bool cross_check = field_or(sec, "cross_check", ctx, true);

  std::vector<BinaryDescriptor> da, db;
  da.reserve(a.features.size());
  db.reserve(b.features.size());
  for (const Feature& f : a.features) da.push_back(f.descriptor);
  for (const Feature& f : b.features) db.push_back(f.descriptor);

  MatchFile out;
  out.width_a = a.width;
  out.height_a = a.height;
  out.width_b = b.width;
  out.height_b = b.height;
  for (const Feature& f : a.features) out.keypoints_a.push_back(f.keypoint);
  for (const Feature& f : b.features) out.keypoints_b.push_back(f.keypoint);
  out.matches = match(da, db, ratio, cross_check);
  save_matches(output_path(cfg, sec, "output", ctx), out);
  log_verbose(cfg, fmt::format("{} matches", out.matches.size()));
}

void cmd_lift(const PipelineConfig& cfg) {
  const json& sec = section(cfg, "lift");
  const std::string ctx = "lift";

  const MatchFile matches = load_matches(input_path(cfg, sec, "matches", ctx));
  const IntensityImage intensity = load_intensity(cfg, sec, ctx);
  const PointCloud cloud = read_cloud(input_path(cfg, sec, "cloud", ctx));

  const LiftResult lifted =
      lift(matches.matches, matches.keypoints_a, matches.keypoints_b, intensity, cloud);
  save_correspondences(output_path(cfg, sec, "output", ctx), lifted.correspondences,
                       lifted.dropped);
  log_verbose(cfg, fmt::format("{} correspondences, {} dropped on holes",
                               lifted.correspondences.size(), lifted.dropped));
}

void cmd_calibrate(const PipelineConfig& cfg) {
  const json& sec = section(cfg, "calibrate");
  const std::string ctx = "calibrate";

  const auto cloud_path = input_path(cfg, sec, "cloud", ctx);
  const PointCloud cloud = read_cloud(cloud_path);
  const IntensityImage intensity = load_intensity(cfg, sec, ctx);
  const RansacParams params =
      ransac_params_from(sec.value("ransac", json::object()), ctx + ".ransac", cfg.seed);
  const auto out_dir = cfg.resolve(field_or<std::string>(sec, "output_dir", ctx, "."));
  std::filesystem::create_directories(out_dir);

  std::map<std::string, std::string> base_digests;
  base_digests["cloud"] = fnv1a_hex_digest(cloud_path);

  const CalibrationDoc rgb_doc = calibrate_one(cfg, sec, ctx, "rgb_matches", "rgb", intensity,
                                               cloud, params, base_digests);
  const CalibrationDoc ir_doc =
      calibrate_one(cfg, sec, ctx, "ir_matches", "ir", intensity, cloud, params, base_digests);

  CalibrationDoc composed;
  composed.name = "rgb_from_ir";
  composed.result.transform = compose_rgb_ir(rgb_doc.result.transform, ir_doc.result.transform);
  composed.result.rms_reprojection =
      std::max(rgb_doc.result.rms_reprojection, ir_doc.result.rms_reprojection);
  composed.result.inlier_count =
      std::min(rgb_doc.result.inlier_count, ir_doc.result.inlier_count);
  composed.result.inlier_ratio =
      std::min(rgb_doc.result.inlier_ratio, ir_doc.result.inlier_ratio);
  composed.result.iterations_used = params.max_iterations;
  composed.input_digests = base_digests;

  save_calibration_doc(out_dir / "rgb_from_lidar.json", rgb_doc);
  save_calibration_doc(out_dir / "ir_from_lidar.json", ir_doc);
  save_calibration_doc(out_dir / "rgb_from_ir.json", composed);

  if (sec.contains("measured_reference")) {
    const json& m = sec.at("measured_reference");
    const std::string mctx = ctx + ".measured_reference";
    EulerPose measured;
    measured.x = field<double>(m, "x_cm", mctx) / 100.0;
    measured.y = field<double>(m, "y_cm", mctx) / 100.0;
    measured.z = field<double>(m, "z_cm", mctx) / 100.0;
    measured.roll_deg = field<double>(m, "roll_deg", mctx);
    measured.pitch_deg = field<double>(m, "pitch_deg", mctx);
    measured.yaw_deg = field<double>(m, "yaw_deg", mctx);
    const ErrorReport report = error_report(composed.result.transform, measured);
    save_error_report_doc(out_dir / "error_report.json", report);
    std::cout << format_error_report(report);
  }
  log_verbose(cfg, fmt::format("rgb inliers {} ({:.0f}%), ir inliers {} ({:.0f}%)",
                               rgb_doc.result.inlier_count,
                               100.0 * rgb_doc.result.inlier_ratio, ir_doc.result.inlier_count,
                               100.0 * ir_doc.result.inlier_ratio));
}

void cmd_warp(const PipelineConfig& cfg) {
  const json& sec = section(cfg, "warp");
  const std::string ctx = "warp";

  const ImageU8 rgb = load_gray_image(input_path(cfg, sec, "rgb_image", ctx));
  const ImageU8 ir = load_gray_image(input_path(cfg, sec, "ir_image", ctx));
  const std::string interp_name = field_or<std::string>(sec, "interpolation", ctx, "bilinear");
  Interpolation interp;
  if (interp_name == "bilinear") interp = Interpolation::bilinear;
  else if (interp_name == "nearest") interp = Interpolation::nearest;
  else
    raise(errc::invalid_argument, kModule,
          fmt::format("{}.interpolation: '{}' is not nearest|bilinear", ctx, interp_name));

  Warped<std::uint8_t> warped;
  if (sec.contains("homography")) {
    const Homography h = load_homography_doc(input_path(cfg, sec, "homography", ctx));
    warped = warp_image(rgb, h, ir.width, ir.height, interp);
  } else if (sec.contains("extrinsics")) {
    const RigidTransform t_rgb_ir = load_transform(input_path(cfg, sec, "extrinsics", ctx));
    const CameraIntrinsics k_rgb = camera_by_name(cfg, "rgb");
    const CameraIntrinsics k_ir = camera_by_name(cfg, "ir");
    const PlaneModel plane = plane_from(sec.value("plane", json::object()), ctx + ".plane");
    warped = warp_image_plane(rgb, t_rgb_ir, k_rgb, k_ir, plane, interp);
  } else {
    raise(errc::invalid_argument, kModule,
          fmt::format("{}: need either 'homography' or 'extrinsics'", ctx));
  }

  const auto stem = output_path(cfg, sec, "output_stem", ctx);
  write_png(std::filesystem::path(stem.string() + "_rgbwarp.png"), warped.image);
  write_png(std::filesystem::path(stem.string() + "_ir.png"), ir);
  write_png(std::filesystem::path(stem.string() + "_mask.png"), warped.mask);
}

void cmd_label(const PipelineConfig& cfg) {
  const json& sec = section(cfg, "label");
  const std::string ctx = "label";

  const std::vector<ImuRecord> imu = read_imu_csv(input_path(cfg, sec, "imu", ctx));
  const std::vector<TimedPose> trajectory =
      read_trajectory_csv(input_path(cfg, sec, "trajectory", ctx));
  const ImageU8 image = load_gray_image(input_path(cfg, sec, "image", ctx));
  const RigidTransform cam_from_world =
      load_transform(input_path(cfg, sec, "camera_pose", ctx));
  const CameraIntrinsics k = camera_by_name(cfg, field<std::string>(sec, "camera", ctx));

  const json& times = require(sec, "times", ctx);
  const std::string tctx = ctx + ".times";
  const double start = field<double>(times, "start", tctx);
  const double step = field<double>(times, "step", tctx);
  const int count = field<int>(times, "count", tctx);
  if (step <= 0.0 || count <= 0)
    raise(errc::invalid_argument, kModule, fmt::format("{}: step/count must be positive", tctx));

  const double window = field_or(sec, "window_duration", ctx, 1.0);
  FootprintRect footprint;
  if (sec.contains("footprint")) {
    const json& f = sec.at("footprint");
    footprint.length = field_or(f, "length", ctx + ".footprint", footprint.length);
    footprint.width = field_or(f, "width", ctx + ".footprint", footprint.width);
  }
  const int patch_side = field_or(sec, "patch_side", ctx, 128);

  std::vector<LabelRow> rows;
  int skipped = 0;
  for (int i = 0; i < count; ++i) {
    const double t1 = start + i * step;
    try {
      const FootprintPatch patch =
          footprint_patch(image, cam_from_world, trajectory, t1, k, footprint, patch_side);
      const ImuWindow win = make_imu_window(imu, t1, window);
      const CostLabel label = psd_cost(win, velocity_at(imu, t1));
      rows.push_back({t1, patch.center.u, patch.center.v, label.y});
    } catch (const Error& e) {
      // A gap or an out-of-view footprint skips the row, never the session.
      if (e.code() == errc::trajectory_gap || e.code() == errc::footprint_not_visible ||
          e.code() == errc::window_too_short) {
        ++skipped;
        continue;
      }
      throw;
    }
  }
  write_labels_csv(output_path(cfg, sec, "output", ctx), rows);
  if (skipped > 0)
    std::cerr << fmt::format("WARNING {} of {} label rows skipped (gap or footprint out of view)\n",
                             skipped, count);
}

void cmd_costmap(const PipelineConfig& cfg) {
  const json& sec = section(cfg, "costmap");
  const std::string ctx = "costmap";

  const ImageU8 rgb = load_gray_image(input_path(cfg, sec, "rgb_image", ctx));
  const ImageU8 ir = load_gray_image(input_path(cfg, sec, "ir_image", ctx));
  if (rgb.width != ir.width || rgb.height != ir.height)
    raise(errc::size_mismatch, kModule,
          fmt::format("{}: rgb {}x{} vs ir {}x{}", ctx, rgb.width, rgb.height, ir.width,
                      ir.height));

  ImageU8 mask;
  if (sec.contains("mask")) mask = load_gray_image(input_path(cfg, sec, "mask", ctx));
  else mask = ImageU8(rgb.width, rgb.height, 255);

  const json& grid_cfg = require(sec, "grid", ctx);
  PatchGridConfig pcfg;
  pcfg.w = rgb.width;
  pcfg.h = rgb.height;
  pcfg.i = field<int>(grid_cfg, "i", ctx + ".grid");
  pcfg.s = field<int>(grid_cfg, "s", ctx + ".grid");
  validate(pcfg);

  const double speed = field_or(sec, "speed", ctx, 0.0);
  const json& fourier = sec.value("fourier", json::object());
  const std::string fctx = ctx + ".fourier";
  const FourierEncoder enc(field_or(fourier, "m", fctx, 16),
                           field_or(fourier, "sigma", fctx, 1.0),
                           field_or(fourier, "seed", fctx, cfg.seed));

  const double max_invalid = field_or(sec, "max_invalid_fraction", ctx, 0.1);
  const std::vector<PatchPair> pairs = extract_patch_pairs(rgb, ir, pcfg, mask, max_invalid);
  const VarianceScorer scorer;
  const CostGrid grid = score_grid(pairs, pcfg, speed, scorer, enc);

  write_grid_csv(output_path(cfg, sec, "output_csv", ctx), grid);
  write_png(output_path(cfg, sec, "output_png", ctx), render_costmap(grid, pcfg));
  if (grid.failed_cells > 0)
    std::cerr << fmt::format("WARNING {} cells failed scoring and were marked unknown\n",
                             grid.failed_cells);
}

void cmd_report(const PipelineConfig& cfg) {
  const json& sec = section(cfg, "report");
  const std::string ctx = "report";

  const CalibrationDoc doc = load_calibration_doc(input_path(cfg, sec, "calibration", ctx));
  const json& m = require(sec, "measured_reference", ctx);
  const std::string mctx = ctx + ".measured_reference";
  EulerPose measured;
  measured.x = field<double>(m, "x_cm", mctx) / 100.0;
  measured.y = field<double>(m, "y_cm", mctx) / 100.0;
  measured.z = field<double>(m, "z_cm", mctx) / 100.0;
  measured.roll_deg = field<double>(m, "roll_deg", mctx);
  measured.pitch_deg = field<double>(m, "pitch_deg", mctx);
  measured.yaw_deg = field<double>(m, "yaw_deg", mctx);

  const ErrorReport report = error_report(doc.result.transform, measured);
  if (sec.contains("output")) save_error_report_doc(output_path(cfg, sec, "output", ctx), report);
  std::cout << format_error_report(report);
}

}  // namespace terracal
