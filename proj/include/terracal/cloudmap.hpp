#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "terracal/geometry.hpp"
#include "terracal/point_cloud.hpp"

namespace terracal {

// Rendered view of a point cloud. Holes are marked consistently in all three
// channels: NaN intensity, NaN depth, point index -1.
struct IntensityImage {
  int width = 0;
  int height = 0;
  std::vector<float> intensity;            // normalized to [0,1] on non-holes
  std::vector<float> depth;                // range from the camera center, meters
  std::vector<std::int32_t> point_index;   // index into the source cloud

  IntensityImage() = default;
  IntensityImage(int w, int h)
      : width(w),
        height(h),
        intensity(static_cast<std::size_t>(w) * h, std::numeric_limits<float>::quiet_NaN()),
        depth(static_cast<std::size_t>(w) * h, std::numeric_limits<float>::quiet_NaN()),
        point_index(static_cast<std::size_t>(w) * h, -1) {}

  std::size_t offset(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  bool contains(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
  bool is_hole(int x, int y) const { return point_index[offset(x, y)] < 0; }
};

struct IcpParams {
  int max_iterations = 50;
  double convergence_eps = 1e-6;        // change in mean correspondence distance, meters
  double max_correspondence_dist = 1.0;  // meters
  double voxel_size = 0.1;               // meters
};

struct IcpResult {
  RigidTransform transform;  // maps source frame into target frame
  double rms_error = 0.0;    // over final inlier correspondences, meters
  int iterations = 0;
  std::vector<double> error_history;  // RMS correspondence distance at each iteration's start
};

void validate(const IcpParams& params);

// Centroid-per-voxel downsampling with mean intensity. Output voxels appear in
// first-visit order, so the result is deterministic for a fixed input order.
PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size);

IcpResult icp_align(const PointCloud& source, const PointCloud& target,
                    const RigidTransform& initial, const IcpParams& params);

// Union of pose-transformed scans, voxel-downsampled. Per-point timestamps are
// dropped; a voxel centroid has no single acquisition time.
PointCloud accumulate(const std::vector<PointCloud>& scans,
                      const std::vector<RigidTransform>& poses, double voxel_size);

// Z-buffered splatting render. A point covers every pixel within
// splat_radius + 0.5 px (Euclidean) of its continuous projection; the nearest
// point wins per pixel, ties broken by lower point index. Intensities are
// percentile-stretched (1st to 99th) over the visible pixels.
IntensityImage render_intensity_image(const PointCloud& cloud, const CameraIntrinsics& k,
                                      const RigidTransform& cam_from_cloud,
                                      int splat_radius = 1);

// Resolves a pixel back to the 3D point recorded at its nearest integer
// location. Throws HolePixel / OutOfBounds.
Eigen::Vector3d lookup_3d(const IntensityImage& img, const PointCloud& cloud, const Pixel& px);

// 16-bit grayscale PNG plus a binary sidecar holding the per-pixel depth and
// point index planes (see read_intensity_image for the layout).
void write_intensity_image(const std::filesystem::path& png_path,
                           const std::filesystem::path& sidecar_path, const IntensityImage& img);

IntensityImage read_intensity_image(const std::filesystem::path& png_path,
                                    const std::filesystem::path& sidecar_path);

}  // namespace terracal
