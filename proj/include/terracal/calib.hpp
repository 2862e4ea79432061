#pragma once

#include <cstdint>
#include <vector>

#include "terracal/correspond.hpp"
#include "terracal/geometry.hpp"

namespace terracal {

struct RansacParams {
  int max_iterations = 2000;     // fixed count, no adaptive early exit
  double inlier_threshold = 2.0;  // reprojection distance, pixels
  int min_inliers = 10;
  int sample_size = 6;
  std::uint64_t rng_seed = 0;
};

void validate(const RansacParams& params);

struct CalibrationResult {
  RigidTransform transform;       // camera from world (LiDAR) frame
  double rms_reprojection = 0.0;  // per-coordinate rms over inliers, pixels
  int inlier_count = 0;
  double inlier_ratio = 0.0;
  int iterations_used = 0;
  std::vector<int> inlier_indices;  // into the input correspondence list
};

struct AxisError {
  double measured = 0.0;
  double estimated = 0.0;
  double error = 0.0;  // estimated - measured
};

struct ErrorReport {
  AxisError x_cm, y_cm, z_cm;
  AxisError roll_deg, pitch_deg, yaw_deg;
};

// Linear 6-point DLT pose estimate from undistorted normalized image
// coordinates, with Hartley normalization and SVD re-orthonormalization of
// the rotation. Throws DegenerateConfiguration on rank-deficient geometry.
RigidTransform solve_pnp_dlt(const std::vector<Correspondence2D3D>& corrs,
                             const CameraIntrinsics& k);

struct RefineResult {
  RigidTransform transform;
  double rms = 0.0;  // per-coordinate rms, pixels
  int iterations = 0;
};

// Levenberg-Marquardt minimization of the image-space reprojection objective
// sum_i ||x_i - project(T w_i)||^2. Worsening steps are rejected, so the final
// cost never exceeds the initial one.
RefineResult refine(const RigidTransform& initial, const std::vector<Correspondence2D3D>& corrs,
                    const CameraIntrinsics& k, int max_iters = 100, double eps = 1e-12);

// RANSAC over a canonically ordered copy of the correspondences (sorted before
// seeded sampling), so results do not depend on the input permutation.
CalibrationResult ransac_calibrate(const std::vector<Correspondence2D3D>& corrs,
                                   const CameraIntrinsics& k, const RansacParams& params);

// rgb-from-ir = rgb-from-lidar composed with the inverse of ir-from-lidar.
RigidTransform compose_rgb_ir(const RigidTransform& t_rgb_li, const RigidTransform& t_ir_li);

// Per-axis comparison against a hand-measured reference pose. Translations are
// reported in centimeters, angles in degrees; error = estimated - measured
// throughout (angles wrapped to (-180, 180]).
ErrorReport error_report(const RigidTransform& estimated, const EulerPose& measured);

}  // namespace terracal
