#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "terracal/calib.hpp"
#include "terracal/correspond.hpp"
#include "terracal/geometry.hpp"
#include "terracal/warp.hpp"

namespace terracal {

inline constexpr const char* kToolVersion = "1.0.0";

// JSON document I/O for the pipeline's persistent artifacts. Every loader
// validates the module invariants of what it returns.

CameraIntrinsics load_intrinsics(const std::filesystem::path& path);
void save_intrinsics(const std::filesystem::path& path, const CameraIntrinsics& k);

RigidTransform load_transform(const std::filesystem::path& path);
void save_transform(const std::filesystem::path& path, const RigidTransform& t);

Homography load_homography_doc(const std::filesystem::path& path);
void save_homography_doc(const std::filesystem::path& path, const Homography& h);

// FNV-1a 64-bit digest of the file bytes, as "fnv1a:<16 hex digits>". Used to
// stamp calibration documents with their exact inputs.
std::string fnv1a_hex_digest(const std::filesystem::path& path);

struct CalibrationDoc {
  std::string name;  // e.g. "rgb_from_lidar"
  CalibrationResult result;
  std::map<std::string, std::string> input_digests;
};

void save_calibration_doc(const std::filesystem::path& path, const CalibrationDoc& doc);
CalibrationDoc load_calibration_doc(const std::filesystem::path& path);

void save_error_report_doc(const std::filesystem::path& path, const ErrorReport& report);

// Fixed-width text table, one row per axis.
std::string format_error_report(const ErrorReport& report);

struct FeatureFile {
  int width = 0, height = 0;
  std::vector<Feature> features;
};

void save_features(const std::filesystem::path& path, const FeatureFile& file);
FeatureFile load_features(const std::filesystem::path& path);

void save_correspondences(const std::filesystem::path& path,
                          const std::vector<Correspondence2D3D>& corrs, std::size_t dropped);
std::vector<Correspondence2D3D> load_correspondences(const std::filesystem::path& path);

}  // namespace terracal
