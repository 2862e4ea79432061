#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "terracal/geometry.hpp"
#include "terracal/image.hpp"

namespace terracal {

// Pixel-space homography, normalized so the bottom-right element is 1
// whenever it is nonzero.
struct Homography {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();

  static Homography from_matrix(const Eigen::Matrix3d& m);
  Homography inverse() const;
  Pixel apply(const Pixel& px) const {
    const Eigen::Vector3d q = m * Eigen::Vector3d(px.u, px.v, 1.0);
    return {q.x() / q.z(), q.y() / q.z()};
  }
};

Homography operator*(const Homography& a, const Homography& b);

// Scene plane in the IR camera frame, as the locus n.p + d = 0 with d > 0,
// which places the camera center on the strictly positive side.
struct PlaneModel {
  Eigen::Vector3d normal = Eigen::Vector3d(0.0, -1.0, 0.0);
  double d = 1.0;  // meters
};

void validate(const PlaneModel& plane);

// Plane-induced homography K_rgb (R - t n^T / d) K_ir^{-1} mapping IR pixels
// to RGB pixels, exact for distortion-free intrinsics. Throws
// PlaneBehindCamera when either camera center is not strictly on the positive
// side of the plane or the plane lies entirely behind a camera.
Homography homography_from_extrinsics(const RigidTransform& t_rgb_ir,
                                      const CameraIntrinsics& k_rgb,
                                      const CameraIntrinsics& k_ir, const PlaneModel& plane);

struct HomographyRansacParams {
  int max_iterations = 1000;
  double inlier_threshold = 2.0;  // symmetric transfer error, pixels
  int min_inliers = 4;
  std::uint64_t rng_seed = 0;
};

// Normalized DLT inside RANSAC over (source, destination) pixel pairs; the
// result maps source to destination. Deterministic for a fixed seed.
Homography homography_from_matches(const std::vector<std::pair<Pixel, Pixel>>& pairs,
                                   const HomographyRansacParams& params);

enum class Interpolation { nearest, bilinear };

template <typename T>
struct Warped {
  Image<T> image;
  ImageU8 mask;  // 255 where the source sample was inside bounds, else 0
};

// Inverse warping: output pixel (x, y) samples src at h.apply((x, y)).
// Out-of-source samples become the fill value (zero) with mask 0.
template <typename T>
Warped<T> warp_image(const Image<T>& src, const Homography& h, int out_width, int out_height,
                     Interpolation interp);

// Distortion-aware IR->RGB lookup: undistorts the IR pixel, intersects its ray
// with the plane, reprojects through the RGB model. Returns false when the
// intersection is behind either camera.
bool plane_induced_map(const RigidTransform& t_rgb_ir, const CameraIntrinsics& k_rgb,
                       const CameraIntrinsics& k_ir, const PlaneModel& plane, const Pixel& ir_px,
                       Pixel& rgb_px);

// Warps an RGB-frame image into the IR frame via the plane model, honoring
// lens distortion on both cameras. Output size is the IR sensor size.
template <typename T>
Warped<T> warp_image_plane(const Image<T>& src, const RigidTransform& t_rgb_ir,
                           const CameraIntrinsics& k_rgb, const CameraIntrinsics& k_ir,
                           const PlaneModel& plane, Interpolation interp);

}  // namespace terracal
