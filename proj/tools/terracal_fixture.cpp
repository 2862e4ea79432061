// Generates a synthetic fixture directory: a room point cloud, ground-truth
// extrinsics, a rendered intensity image, match files with noise and outliers,
// procedural camera images, an IMU/trajectory session, and a config.json that
// chains calibrate -> warp -> costmap -> label on those files.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "terracal/calib.hpp"
#include "terracal/cloudmap.hpp"
#include "terracal/correspond.hpp"
#include "terracal/docio.hpp"
#include "terracal/errors.hpp"
#include "terracal/geometry.hpp"
#include "terracal/png_io.hpp"
#include "terracal/rng.hpp"

namespace {

using namespace terracal;
using json = nlohmann::json;

constexpr double kFloorY = 1.2;   // floor plane y = kFloorY (camera-style frame, y down)
constexpr double kWallX = 4.0;    // side walls at x = +-kWallX
constexpr double kBackZ = 10.0;   // back wall

// Reflectivity pattern over the room surfaces; checker-like so the intensity
// image has corners to detect and distinct values to stretch.
float pattern(const Eigen::Vector3d& p, int surface) {
  const double checker =
      (static_cast<int>(std::floor(p.x() / 0.5)) + static_cast<int>(std::floor(p.z() / 0.5))) % 2
          ? 0.25
          : 0.75;
  const double wave = 0.15 * std::sin(3.0 * p.x()) * std::sin(2.0 * p.z());
  return static_cast<float>(100.0 * (checker + wave + 0.1 * surface));
}

PointCloud make_room_cloud(Rng& rng) {
  PointCloud cloud;
  // Floor.
  for (double x = -kWallX; x <= kWallX; x += 0.05)
    for (double z = 1.0; z <= kBackZ; z += 0.05) {
      const Eigen::Vector3d p(x, kFloorY, z);
      cloud.push_back(p, pattern(p, 0) + static_cast<float>(rng.gaussian()));
    }
  // Side walls.
  for (double y = -2.0; y <= kFloorY; y += 0.1)
    for (double z = 1.0; z <= kBackZ; z += 0.1) {
      const Eigen::Vector3d l(-kWallX, y, z);
      const Eigen::Vector3d r(kWallX, y, z);
      cloud.push_back(l, pattern(l, 1) + static_cast<float>(rng.gaussian()));
      cloud.push_back(r, pattern(r, 1) + static_cast<float>(rng.gaussian()));
    }
  // Back wall.
  for (double x = -kWallX; x <= kWallX; x += 0.1)
    for (double y = -2.0; y <= kFloorY; y += 0.1) {
      const Eigen::Vector3d p(x, y, kBackZ);
      cloud.push_back(p, pattern(p, 2) + static_cast<float>(rng.gaussian()));
    }
  return cloud;
}

// Procedural camera view of the same room: per pixel, intersect the viewing
// ray with the room surfaces and shade by the reflectivity pattern.
ImageU8 synth_view(const CameraIntrinsics& k, const RigidTransform& cam_from_world, double gain) {
  const RigidTransform world_from_cam = invert(cam_from_world);
  const Eigen::Matrix3d r = world_from_cam.rotation_matrix();
  ImageU8 img(k.width, k.height);
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      const Eigen::Vector3d dir =
          r * unproject(k, {static_cast<double>(x), static_cast<double>(y)}, 1.0).normalized();
      const Eigen::Vector3d origin = world_from_cam.translation;
      double best_s = std::numeric_limits<double>::infinity();
      double value = 20.0;
      auto consider = [&](double s, const Eigen::Vector3d& hit, int surface) {
        if (s <= 0.0 || s >= best_s) return;
        if (hit.x() < -kWallX - 1e-9 || hit.x() > kWallX + 1e-9) return;
        if (hit.y() < -2.0 || hit.y() > kFloorY + 1e-9) return;
        if (hit.z() < 0.5 || hit.z() > kBackZ + 1e-9) return;
        best_s = s;
        value = 55.0 + 1.6 * pattern(hit, surface);
      };
      if (std::abs(dir.y()) > 1e-12) {
        const double s = (kFloorY - origin.y()) / dir.y();
        consider(s, origin + s * dir, 0);
      }
      if (std::abs(dir.x()) > 1e-12) {
        for (double wx : {-kWallX, kWallX}) {
          const double s = (wx - origin.x()) / dir.x();
          consider(s, origin + s * dir, 1);
        }
      }
      if (std::abs(dir.z()) > 1e-12) {
        const double s = (kBackZ - origin.z()) / dir.z();
        consider(s, origin + s * dir, 2);
      }
      img.at(x, y) = static_cast<std::uint8_t>(std::clamp(gain * value, 0.0, 255.0));
    }
  }
  return img;
}

MatchFile make_matches(const IntensityImage& intensity, const PointCloud& cloud,
                       const CameraIntrinsics& k_cam, const RigidTransform& cam_from_world,
                       Rng& rng, double noise_sigma, double outlier_fraction, int target) {
  MatchFile file;
  file.width_a = k_cam.width;
  file.height_a = k_cam.height;
  file.width_b = intensity.width;
  file.height_b = intensity.height;

  // Walk the rendered image on a coarse lattice; every non-hole pixel yields a
  // candidate 3D point with a known intensity-image location.
  const int stride = 9;
  for (int y = 2; y < intensity.height - 2 && static_cast<int>(file.matches.size()) < target;
       y += stride) {
    for (int x = 2; x < intensity.width - 2 && static_cast<int>(file.matches.size()) < target;
         x += stride) {
      const std::int32_t idx = intensity.point_index[intensity.offset(x, y)];
      if (idx < 0) continue;
      const Eigen::Vector3d p_cam = apply(cam_from_world, cloud.points[idx]);
      if (p_cam.z() <= 0.2) continue;
      Pixel px = project(k_cam, p_cam);
      if (rng.uniform01() < outlier_fraction) {
        px = {rng.uniform01() * (k_cam.width - 1), rng.uniform01() * (k_cam.height - 1)};
      } else {
        px.u += noise_sigma * rng.gaussian();
        px.v += noise_sigma * rng.gaussian();
      }
      if (!(px.u >= 0.0 && px.u < k_cam.width && px.v >= 0.0 && px.v < k_cam.height)) continue;

      const int ia = static_cast<int>(file.keypoints_a.size());
      file.keypoints_a.push_back({px, 1.0f, 0.0f});
      file.keypoints_b.push_back(
          {{static_cast<double>(x), static_cast<double>(y)}, 1.0f, 0.0f});
      file.matches.push_back({ia, ia, 1.0});
    }
  }
  return file;
}

void write_imu_csv(const std::filesystem::path& path, Rng& rng) {
  std::ofstream out(path);
  out << "timestamp,acc_z,vx,vy\n";
  for (int i = 0; i <= 800; ++i) {
    const double t = 0.01 * i;  // 100 Hz, 8 seconds
    const double acc = 9.81 + 0.5 * std::sin(2.0 * M_PI * 7.0 * t) + 0.02 * rng.gaussian();
    out << fmt::format("{:.12g},{:.12g},{:.12g},{:.12g}\n", t, acc, 1.0, 0.0);
  }
}

void write_trajectory_csv(const std::filesystem::path& path) {
  // Body frame: x forward (world +z), z up (world -y); straight 1 m/s drive
  // along the floor.
  Eigen::Matrix3d r_wb;
  r_wb.col(0) = Eigen::Vector3d(0, 0, 1);
  r_wb.col(1) = Eigen::Vector3d(-1, 0, 0);
  r_wb.col(2) = Eigen::Vector3d(0, -1, 0);
  const Eigen::Quaterniond q(r_wb);
  std::ofstream out(path);
  out << "timestamp,x,y,z,qx,qy,qz,qw\n";
  for (int i = 0; i <= 16; ++i) {
    const double t = 0.5 * i;
    out << fmt::format("{:.12g},{:.12g},{:.12g},{:.12g},{:.12g},{:.12g},{:.12g},{:.12g}\n", t, 0.0,
                       kFloorY, t * 1.0, q.x(), q.y(), q.z(), q.w());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic terracal fixture directory"};
  std::string output;
  std::uint64_t seed = 7;
  double noise_sigma = 0.3;
  double outlier_fraction = 0.1;
  app.add_option("--output", output, "Fixture directory to create")->required();
  app.add_option("--seed", seed, "Seed for noise and outliers");
  app.add_option("--noise", noise_sigma, "Pixel noise sigma for match files");
  app.add_option("--outliers", outlier_fraction, "Outlier fraction for match files");
  CLI11_PARSE(app, argc, argv);

  try {
    const std::filesystem::path dir(output);
    std::filesystem::create_directories(dir);
    std::filesystem::create_directories(dir / "out");
    Rng rng(seed);

    CameraIntrinsics k_rgb;
    k_rgb.fx = k_rgb.fy = 800.0;
    k_rgb.cx = 479.5;
    k_rgb.cy = 359.5;
    k_rgb.width = 960;
    k_rgb.height = 720;
    CameraIntrinsics k_ir;
    k_ir.fx = k_ir.fy = 500.0;
    k_ir.cx = 319.5;
    k_ir.cy = 255.5;
    k_ir.width = 640;
    k_ir.height = 512;
    save_intrinsics(dir / "rgb_intrinsics.json", k_rgb);
    save_intrinsics(dir / "ir_intrinsics.json", k_ir);

    // Ground-truth extrinsics: camera-from-lidar for both cameras.
    const RigidTransform t_rgb_li = from_euler({0.10, -0.05, 0.02, 0.8, -1.5, 3.0});
    const RigidTransform t_ir_li = from_euler({-0.05, 0.02, 0.01, -0.5, 1.0, -2.0});
    const RigidTransform t_rgb_ir = compose_rgb_ir(t_rgb_li, t_ir_li);
    save_transform(dir / "gt_rgb_from_lidar.json", t_rgb_li);
    save_transform(dir / "gt_ir_from_lidar.json", t_ir_li);
    save_transform(dir / "gt_rgb_from_ir.json", t_rgb_ir);

    const PointCloud cloud = make_room_cloud(rng);
    write_ply(dir / "map.ply", cloud);

    // Intensity image rendered from the lidar origin with the IR model.
    const RigidTransform render_pose = RigidTransform::identity();
    save_transform(dir / "render_pose.json", render_pose);
    const IntensityImage intensity = render_intensity_image(cloud, k_ir, render_pose, 1);
    write_intensity_image(dir / "intensity.png", dir / "intensity.sidecar", intensity);

    const MatchFile rgb_matches = make_matches(intensity, cloud, k_rgb, t_rgb_li, rng,
                                               noise_sigma, outlier_fraction, 500);
    const MatchFile ir_matches = make_matches(intensity, cloud, k_ir, t_ir_li, rng, noise_sigma,
                                              outlier_fraction, 500);
    save_matches(dir / "rgb_matches.json", rgb_matches);
    save_matches(dir / "ir_matches.json", ir_matches);

    write_png(dir / "rgb.png", synth_view(k_rgb, t_rgb_li, 1.0));
    write_png(dir / "ir.png", synth_view(k_ir, t_ir_li, 0.85));

    write_imu_csv(dir / "imu.csv", rng);
    write_trajectory_csv(dir / "trajectory.csv");

    // Floor plane in the IR camera frame: n.p + d = 0 from the lidar-frame
    // floor (0,-1,0), d = kFloorY.
    const Eigen::Vector3d n_li(0.0, -1.0, 0.0);
    const Eigen::Vector3d n_ir = t_ir_li.rotation_matrix() * n_li;
    const double d_ir = kFloorY - n_ir.dot(t_ir_li.translation);

    const EulerPose gt_euler = to_euler(t_rgb_ir);

    json cfg;
    cfg["seed"] = 0;
    cfg["cameras"] = {{"rgb", {{"intrinsics", "rgb_intrinsics.json"}}},
                      {"ir", {{"intrinsics", "ir_intrinsics.json"}}}};
    cfg["render"] = {{"cloud", "map.ply"},       {"camera", "ir"},
                     {"pose", "render_pose.json"}, {"splat_radius", 1},
                     {"output_png", "out/render.png"}, {"output_sidecar", "out/render.sidecar"}};
    cfg["calibrate"] = {
        {"cloud", "map.ply"},
        {"intensity_png", "intensity.png"},
        {"intensity_sidecar", "intensity.sidecar"},
        {"rgb_matches", "rgb_matches.json"},
        {"ir_matches", "ir_matches.json"},
        {"output_dir", "out"},
        {"ransac",
         {{"max_iterations", 2000}, {"inlier_threshold", 2.0}, {"min_inliers", 30},
          {"sample_size", 6}, {"rng_seed", 1}}},
        {"measured_reference",
         {{"x_cm", gt_euler.x * 100.0}, {"y_cm", gt_euler.y * 100.0}, {"z_cm", gt_euler.z * 100.0},
          {"roll_deg", gt_euler.roll_deg}, {"pitch_deg", gt_euler.pitch_deg},
          {"yaw_deg", gt_euler.yaw_deg}}}};
    cfg["warp"] = {{"rgb_image", "rgb.png"},
                   {"ir_image", "ir.png"},
                   {"extrinsics", "out/rgb_from_ir.json"},
                   {"plane", {{"normal", {n_ir.x(), n_ir.y(), n_ir.z()}}, {"d", d_ir}}},
                   {"interpolation", "bilinear"},
                   {"output_stem", "out/warp"}};
    cfg["costmap"] = {{"rgb_image", "out/warp_rgbwarp.png"},
                      {"ir_image", "out/warp_ir.png"},
                      {"mask", "out/warp_mask.png"},
                      {"grid", {{"i", 128}, {"s", 64}}},
                      {"speed", 1.0},
                      {"fourier", {{"m", 16}, {"sigma", 1.0}, {"seed", 3}}},
                      {"output_csv", "out/costgrid.csv"},
                      {"output_png", "out/costmap.png"}};
    cfg["label"] = {{"imu", "imu.csv"},
                    {"trajectory", "trajectory.csv"},
                    {"image", "ir.png"},
                    {"camera_pose", "gt_ir_from_lidar.json"},
                    {"camera", "ir"},
                    {"times", {{"start", 3.5}, {"step", 0.25}, {"count", 8}}},
                    {"window_duration", 1.0},
                    {"footprint", {{"length", 0.8}, {"width", 0.6}}},
                    {"patch_side", 64},
                    {"output", "out/labels.csv"}};
    cfg["report"] = {{"calibration", "out/rgb_from_ir.json"},
                     {"measured_reference", cfg["calibrate"]["measured_reference"]},
                     {"output", "out/report.json"}};

    std::ofstream out(dir / "config.json");
    out << cfg.dump(2) << "\n";
    if (!out) throw std::runtime_error("failed to write config.json");

    std::cout << fmt::format("fixture written to {} ({} cloud points, {}+{} matches)\n",
                             dir.string(), cloud.size(), rgb_matches.matches.size(),
                             ir_matches.matches.size());
    return 0;
  } catch (const Error& e) {
    std::cerr << fmt::format("ERROR {} {} {}\n", is_usage_error(e.code()) ? 2 : 3, e.module(),
                             e.what());
    return is_usage_error(e.code()) ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << fmt::format("ERROR 3 fixture {}\n", e.what());
    return 3;
  }
}
