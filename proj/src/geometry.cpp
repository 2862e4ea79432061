#include "terracal/geometry.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "terracal/errors.hpp"

namespace terracal {

namespace {
constexpr const char* kModule = "geometry";

// Plumb-bob distortion of normalized coordinates.
inline void distort(const CameraIntrinsics& k, double xn, double yn, double& xd, double& yd) {
  const double r2 = xn * xn + yn * yn;
  const double radial = 1.0 + k.k1 * r2 + k.k2 * r2 * r2;
  xd = xn * radial + 2.0 * k.p1 * xn * yn + k.p2 * (r2 + 2.0 * xn * xn);
  yd = yn * radial + k.p1 * (r2 + 2.0 * yn * yn) + 2.0 * k.p2 * xn * yn;
}
}  // namespace

void validate(const CameraIntrinsics& k) {
  if (!(k.fx > 0.0) || !(k.fy > 0.0))
    raise(errc::invalid_argument, kModule, fmt::format("focal lengths must be positive, got fx={} fy={}", k.fx, k.fy));
  if (k.width < 1 || k.height < 1)
    raise(errc::invalid_argument, kModule, fmt::format("image size must be at least 1x1, got {}x{}", k.width, k.height));
}

RigidTransform RigidTransform::from_matrix(const Eigen::Matrix4d& m) {
  const Eigen::Matrix3d r = m.topLeftCorner<3, 3>();
  if (!(r * r.transpose()).isApprox(Eigen::Matrix3d::Identity(), 1e-6) ||
      r.determinant() < 0.0) {
    raise(errc::invalid_argument, kModule, "matrix block is not a rotation");
  }
  return RigidTransform(Eigen::Quaterniond(r), m.topRightCorner<3, 1>());
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation.toRotationMatrix();
  m.topRightCorner<3, 1>() = translation;
  return m;
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return RigidTransform(a.rotation * b.rotation, a.rotation * b.translation + a.translation);
}

RigidTransform invert(const RigidTransform& t) {
  const Eigen::Quaterniond q_inv = t.rotation.conjugate();
  return RigidTransform(q_inv, -(q_inv * t.translation));
}

Eigen::Vector3d apply(const RigidTransform& t, const Eigen::Vector3d& p) {
  return t.rotation * p + t.translation;
}

Pixel project(const CameraIntrinsics& k, const Eigen::Vector3d& p_cam) {
  if (!(p_cam.z() > 0.0))
    raise(errc::behind_camera, kModule, fmt::format("point z={} is not in front of the camera", p_cam.z()));
  const double xn = p_cam.x() / p_cam.z();
  const double yn = p_cam.y() / p_cam.z();
  double xd, yd;
  distort(k, xn, yn, xd, yd);
  return Pixel{k.fx * xd + k.cx, k.fy * yd + k.cy};
}

Eigen::Vector3d unproject(const CameraIntrinsics& k, const Pixel& px, double depth) {
  if (!(depth > 0.0))
    raise(errc::non_positive_depth, kModule, fmt::format("depth must be positive, got {}", depth));
  const double xd = (px.u - k.cx) / k.fx;
  const double yd = (px.v - k.cy) / k.fy;
  // Fixed-point undistortion; converges well within 10 iterations for
  // plumb-bob coefficients in the supported range.
  double xn = xd, yn = yd;
  for (int i = 0; i < 10; ++i) {
    const double r2 = xn * xn + yn * yn;
    const double radial = 1.0 + k.k1 * r2 + k.k2 * r2 * r2;
    const double dx = 2.0 * k.p1 * xn * yn + k.p2 * (r2 + 2.0 * xn * xn);
    const double dy = k.p1 * (r2 + 2.0 * yn * yn) + 2.0 * k.p2 * xn * yn;
    const double xn_next = (xd - dx) / radial;
    const double yn_next = (yd - dy) / radial;
    const double step = std::abs(xn_next - xn) + std::abs(yn_next - yn);
    xn = xn_next;
    yn = yn_next;
    if (step < 1e-8) break;
  }
  return {xn * depth, yn * depth, depth};
}

double normalize_deg(double angle_deg) {
  double a = std::fmod(angle_deg, 360.0);
  if (a <= -180.0) a += 360.0;
  if (a > 180.0) a -= 360.0;
  return a;
}

EulerPose to_euler(const RigidTransform& t) {
  const Eigen::Matrix3d r = t.rotation_matrix();
  EulerPose e;
  e.x = t.translation.x();
  e.y = t.translation.y();
  e.z = t.translation.z();

  const double sin_pitch = -r(2, 0);
  double roll, pitch, yaw;
  if (sin_pitch >= 1.0 - 1e-12) {
    pitch = std::numbers::pi / 2.0;
    yaw = 0.0;
    roll = std::atan2(r(0, 1), r(1, 1));
  } else if (sin_pitch <= -1.0 + 1e-12) {
    pitch = -std::numbers::pi / 2.0;
    yaw = 0.0;
    roll = std::atan2(-r(0, 1), r(1, 1));
  } else {
    pitch = std::asin(sin_pitch);
    roll = std::atan2(r(2, 1), r(2, 2));
    yaw = std::atan2(r(1, 0), r(0, 0));
  }
  e.roll_deg = normalize_deg(roll * kDegPerRad);
  e.pitch_deg = normalize_deg(pitch * kDegPerRad);
  e.yaw_deg = normalize_deg(yaw * kDegPerRad);
  return e;
}

RigidTransform from_euler(const EulerPose& e) {
  const Eigen::AngleAxisd rz(e.yaw_deg * kRadPerDeg, Eigen::Vector3d::UnitZ());
  const Eigen::AngleAxisd ry(e.pitch_deg * kRadPerDeg, Eigen::Vector3d::UnitY());
  const Eigen::AngleAxisd rx(e.roll_deg * kRadPerDeg, Eigen::Vector3d::UnitX());
  return RigidTransform(Eigen::Quaterniond(rz * ry * rx), Eigen::Vector3d(e.x, e.y, e.z));
}

double rotation_angle_deg(const RigidTransform& a, const RigidTransform& b) {
  // atan2 keeps full precision for tiny angles where acos(w) would not.
  const Eigen::Quaterniond dq = a.rotation.conjugate() * b.rotation;
  return 2.0 * std::atan2(dq.vec().norm(), std::abs(dq.w())) * kDegPerRad;
}

double translation_distance(const RigidTransform& a, const RigidTransform& b) {
  return (a.translation - b.translation).norm();
}

}  // namespace terracal
