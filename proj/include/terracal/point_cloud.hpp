#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Core>

namespace terracal {

/// LiDAR point cloud with per-point reflectivity. Intensities are raw sensor
/// units until an intensity image normalizes them. Timestamps are optional:
/// either empty or one per point.
struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<float> intensities;
  std::vector<double> timestamps;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  void push_back(const Eigen::Vector3d& p, float intensity) {
    points.push_back(p);
    intensities.push_back(intensity);
  }
};

/// Throws InvalidArgument on length mismatch or non-finite coordinates.
void validate(const PointCloud& cloud);

enum class PlyFormat { binary_little_endian, ascii };

/// PLY with at least float properties x, y, z, intensity on the vertex
/// element. Binary little-endian and ASCII variants are supported; unknown
/// extra properties are skipped.
PointCloud read_ply(const std::filesystem::path& path);

void write_ply(const std::filesystem::path& path, const PointCloud& cloud,
               PlyFormat format = PlyFormat::binary_little_endian);

/// ASCII PCD with FIELDS x y z intensity.
PointCloud read_pcd(const std::filesystem::path& path);

/// Dispatches on extension (.ply/.pcd).
PointCloud read_cloud(const std::filesystem::path& path);

}  // namespace terracal
