#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace terracal {

/// Sub-pixel image coordinates. May lie outside the image for intermediate
/// results.
struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

/// SE(3) pose. Rotation is stored as a unit quaternion and renormalized by
/// every constructor and operation; matrices are derived on demand.
struct RigidTransform {
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  RigidTransform() = default;
  RigidTransform(const Eigen::Quaterniond& q, const Eigen::Vector3d& t)
      : rotation(q.normalized()), translation(t) {}

  static RigidTransform identity() { return {}; }

  /// From a 4x4 homogeneous matrix whose upper-left 3x3 block is a rotation.
  static RigidTransform from_matrix(const Eigen::Matrix4d& m);

  Eigen::Matrix3d rotation_matrix() const { return rotation.toRotationMatrix(); }
  Eigen::Matrix4d matrix() const;
};

/// Translation in meters plus intrinsic Z-Y-X (yaw-pitch-roll) angles in
/// degrees, normalized to (-180, 180]. The reporting parameterization.
struct EulerPose {
  double x = 0.0, y = 0.0, z = 0.0;
  double roll_deg = 0.0, pitch_deg = 0.0, yaw_deg = 0.0;
};

/// Pinhole camera with plumb-bob (radial k1,k2 + tangential p1,p2) distortion.
/// All-zero coefficients model a pre-rectified camera.
struct CameraIntrinsics {
  double fx = 0.0, fy = 0.0;
  double cx = 0.0, cy = 0.0;
  int width = 0, height = 0;
  double k1 = 0.0, k2 = 0.0, p1 = 0.0, p2 = 0.0;

  Eigen::Matrix3d k_matrix() const {
    Eigen::Matrix3d k;
    k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
    return k;
  }
};

/// Throws InvalidArgument unless fx,fy > 0 and width,height >= 1.
void validate(const CameraIntrinsics& k);

/// Result applies b first, then a.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

RigidTransform invert(const RigidTransform& t);

Eigen::Vector3d apply(const RigidTransform& t, const Eigen::Vector3d& p);

/// Projects a camera-frame point. Distortion is applied to normalized image
/// coordinates before focal scaling. Throws BehindCamera when z <= 0.
Pixel project(const CameraIntrinsics& k, const Eigen::Vector3d& p_cam);

/// Inverse projection at a given z-depth (meters). Undistortion is solved by
/// fixed-point iteration (10 iterations, tolerance 1e-8 in normalized units).
/// Throws NonPositiveDepth when depth <= 0.
Eigen::Vector3d unproject(const CameraIntrinsics& k, const Pixel& px, double depth);

/// Intrinsic Z-Y-X decomposition. At |pitch| = 90 deg (gimbal lock) yaw is
/// set to 0 and roll absorbs the remaining rotation.
EulerPose to_euler(const RigidTransform& t);

RigidTransform from_euler(const EulerPose& e);

/// Normalizes an angle in degrees to (-180, 180].
double normalize_deg(double angle_deg);

inline constexpr double kDegPerRad = 180.0 / 3.141592653589793238462643383279502884;
inline constexpr double kRadPerDeg = 3.141592653589793238462643383279502884 / 180.0;

/// Rotation angle between two transforms, degrees.
double rotation_angle_deg(const RigidTransform& a, const RigidTransform& b);

/// Euclidean distance between the two translations, meters.
double translation_distance(const RigidTransform& a, const RigidTransform& b);

}  // namespace terracal
