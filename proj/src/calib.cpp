#include "terracal/calib.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "terracal/errors.hpp"
#include "terracal/rng.hpp"

namespace terracal {

namespace {
constexpr const char* kModule = "calib";

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

// Residual x - project(T w) and its 2x6 Jacobian with respect to a
// left-composed (rotation, translation) increment, for one correspondence.
// Returns false when the point falls behind the camera.
bool residual_and_jacobian(const RigidTransform& t, const Correspondence2D3D& c,
                           const CameraIntrinsics& k, Eigen::Vector2d& r,
                           Eigen::Matrix<double, 2, 6>* jac) {
  const Eigen::Vector3d p = apply(t, c.point);
  if (p.z() <= 0.0) return false;

  const double a = p.x() / p.z();
  const double b = p.y() / p.z();
  const double r2 = a * a + b * b;
  const double radial = 1.0 + k.k1 * r2 + k.k2 * r2 * r2;
  const double ad = a * radial + 2.0 * k.p1 * a * b + k.p2 * (r2 + 2.0 * a * a);
  const double bd = b * radial + k.p1 * (r2 + 2.0 * b * b) + 2.0 * k.p2 * a * b;
  r = Eigen::Vector2d(c.pixel.u - (k.fx * ad + k.cx), c.pixel.v - (k.fy * bd + k.cy));
  if (!jac) return true;

  const double dradial = 2.0 * k.k1 + 4.0 * k.k2 * r2;  // d(radial)/d(r2)
  Eigen::Matrix2d j_dist;
  j_dist(0, 0) = radial + a * a * dradial + 2.0 * k.p1 * b + 6.0 * k.p2 * a;
  j_dist(0, 1) = a * b * dradial + 2.0 * k.p1 * a + 2.0 * k.p2 * b;
  j_dist(1, 0) = a * b * dradial + 2.0 * k.p1 * a + 2.0 * k.p2 * b;
  j_dist(1, 1) = radial + b * b * dradial + 6.0 * k.p1 * b + 2.0 * k.p2 * a;

  Eigen::Matrix<double, 2, 3> j_proj;
  const double inv_z = 1.0 / p.z();
  j_proj << inv_z, 0.0, -a * inv_z, 0.0, inv_z, -b * inv_z;

  Eigen::Matrix<double, 3, 6> j_pose;
  j_pose.leftCols<3>() = -skew(p);
  j_pose.rightCols<3>() = Eigen::Matrix3d::Identity();

  const Eigen::Matrix<double, 2, 6> j =
      Eigen::DiagonalMatrix<double, 2>(k.fx, k.fy) * j_dist * j_proj * j_pose;
  *jac = -j;
  return true;
}

RigidTransform apply_increment(const Eigen::Matrix<double, 6, 1>& delta, const RigidTransform& t) {
  const Eigen::Vector3d omega = delta.head<3>();
  const double angle = omega.norm();
  Eigen::Quaterniond dq = Eigen::Quaterniond::Identity();
  if (angle > 0.0) dq = Eigen::Quaterniond(Eigen::AngleAxisd(angle, omega / angle));
  return {(dq * t.rotation).normalized(), dq * t.translation + delta.tail<3>()};
}

double reprojection_cost(const RigidTransform& t, const std::vector<Correspondence2D3D>& corrs,
                         const CameraIntrinsics& k, std::size_t& in_front) {
  double cost = 0.0;
  in_front = 0;
  Eigen::Vector2d r;
  for (const Correspondence2D3D& c : corrs) {
    if (!residual_and_jacobian(t, c, k, r, nullptr)) continue;
    cost += r.squaredNorm();
    ++in_front;
  }
  return cost;
}

std::vector<int> count_inliers(const RigidTransform& t, const std::vector<Correspondence2D3D>& corrs,
                               const CameraIntrinsics& k, double threshold) {
  std::vector<int> inliers;
  Eigen::Vector2d r;
  for (std::size_t i = 0; i < corrs.size(); ++i)
    if (residual_and_jacobian(t, corrs[i], k, r, nullptr) && r.norm() < threshold)
      inliers.push_back(static_cast<int>(i));
  return inliers;
}

}  // namespace

void validate(const RansacParams& params) {
  if (params.sample_size < 6)
    raise(errc::invalid_argument, kModule, "sample_size must be at least 6");
  if (params.inlier_threshold <= 0.0)
    raise(errc::invalid_argument, kModule, "inlier_threshold must be positive");
  if (params.max_iterations <= 0 || params.min_inliers <= 0)
    raise(errc::invalid_argument, kModule, "iteration and inlier counts must be positive");
}

RigidTransform solve_pnp_dlt(const std::vector<Correspondence2D3D>& corrs,
                             const CameraIntrinsics& k) {
  validate(k);
  const std::size_t n = corrs.size();
  if (n < 6) raise(errc::invalid_argument, kModule, fmt::format("need >= 6 correspondences, got {}", n));

  // Undistorted normalized image coordinates.
  std::vector<Eigen::Vector2d> xs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d ray = unproject(k, corrs[i].pixel, 1.0);
    xs[i] = ray.head<2>();
  }

  // Hartley normalization of both point sets.
  Eigen::Vector3d wc = Eigen::Vector3d::Zero();
  Eigen::Vector2d xc = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    wc += corrs[i].point;
    xc += xs[i];
  }
  wc /= static_cast<double>(n);
  xc /= static_cast<double>(n);
  double wdist = 0.0, xdist = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    wdist += (corrs[i].point - wc).norm();
    xdist += (xs[i] - xc).norm();
  }
  wdist /= static_cast<double>(n);
  xdist /= static_cast<double>(n);
  const double ws = wdist > 0.0 ? std::sqrt(3.0) / wdist : 1.0;
  const double xsc = xdist > 0.0 ? std::sqrt(2.0) / xdist : 1.0;

  Eigen::Matrix4d u = Eigen::Matrix4d::Identity();
  u.topLeftCorner<3, 3>() *= ws;
  u.topRightCorner<3, 1>() = -ws * wc;
  Eigen::Matrix3d tn = Eigen::Matrix3d::Identity();
  tn(0, 0) = tn(1, 1) = xsc;
  tn.topRightCorner<2, 1>() = -xsc * xc;

  Eigen::MatrixXd design(2 * n, 12);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector4d w = u * corrs[i].point.homogeneous();
    const Eigen::Vector2d x = xsc * (xs[i] - xc);
    design.row(2 * i) << w.transpose(), Eigen::RowVector4d::Zero(), -x.x() * w.transpose();
    design.row(2 * i + 1) << Eigen::RowVector4d::Zero(), w.transpose(), -x.y() * w.transpose();
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv(10) <= 0.0 || sv(0) / sv(10) > 1e12)
    raise(errc::degenerate_configuration, kModule,
          "rank-deficient design matrix (points collinear or otherwise degenerate)");

  Eigen::Matrix<double, 3, 4> p;
  const Eigen::VectorXd h = svd.matrixV().col(11);
  p.row(0) = h.segment<4>(0);
  p.row(1) = h.segment<4>(4);
  p.row(2) = h.segment<4>(8);
  p = tn.inverse() * p * u;  // undo both normalizations

  // Fix the projective sign so that points land in front of the camera.
  int positive = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (p.row(2) * corrs[i].point.homogeneous() > 0.0) ++positive;
  if (2 * positive < static_cast<int>(n)) p = -p;

  const Eigen::Matrix3d a = p.leftCols<3>();
  Eigen::JacobiSVD<Eigen::Matrix3d> rsvd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((rsvd.matrixU() * rsvd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  const Eigen::Matrix3d r = rsvd.matrixU() * d * rsvd.matrixV().transpose();
  const double scale = rsvd.singularValues().mean();
  if (scale <= 0.0)
    raise(errc::degenerate_configuration, kModule, "zero-scale projection matrix");

  return {Eigen::Quaterniond(r), p.col(3) / scale};
}

RefineResult refine(const RigidTransform& initial, const std::vector<Correspondence2D3D>& corrs,
                    const CameraIntrinsics& k, int max_iters, double eps) {
  validate(k);
  if (corrs.empty()) raise(errc::invalid_argument, kModule, "no correspondences");

  RefineResult result;
  result.transform = initial;
  std::size_t in_front = 0;
  double cost = reprojection_cost(initial, corrs, k, in_front);
  if (in_front == 0)
    raise(errc::all_behind_camera, kModule, "initial pose puts every point behind the camera");

  double lambda = 1e-3;
  Eigen::Matrix<double, 6, 6> jtj;
  Eigen::Matrix<double, 6, 1> jtr;
  Eigen::Vector2d r;
  Eigen::Matrix<double, 2, 6> jac;

  for (int iter = 0; iter < max_iters; ++iter) {
    jtj.setZero();
    jtr.setZero();
    for (const Correspondence2D3D& c : corrs) {
      if (!residual_and_jacobian(result.transform, c, k, r, &jac)) continue;
      jtj += jac.transpose() * jac;
      jtr += jac.transpose() * r;
    }

    bool accepted = false;
    while (lambda < 1e12) {
      Eigen::Matrix<double, 6, 6> damped = jtj;
      for (int i = 0; i < 6; ++i) damped(i, i) += lambda * std::max(jtj(i, i), 1e-12);
      const Eigen::Matrix<double, 6, 1> delta = damped.ldlt().solve(-jtr);
      const RigidTransform candidate = apply_increment(delta, result.transform);
      std::size_t cand_front = 0;
      const double cand_cost = reprojection_cost(candidate, corrs, k, cand_front);
      if (cand_front > 0 && cand_cost <= cost) {
        const double change = cost - cand_cost;
        result.transform = candidate;
        cost = cand_cost;
        in_front = cand_front;
        lambda = std::max(lambda * 0.1, 1e-12);
        accepted = true;
        result.iterations = iter + 1;
        if (change <= eps * std::max(cost, 1e-300)) iter = max_iters;  // converged
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) break;
  }

  result.rms = std::sqrt(cost / static_cast<double>(2 * in_front));
  return result;
}

CalibrationResult ransac_calibrate(const std::vector<Correspondence2D3D>& corrs,
                                   const CameraIntrinsics& k, const RansacParams& params) {
  validate(params);
  validate(k);
  if (corrs.size() < static_cast<std::size_t>(params.sample_size))
    raise(errc::invalid_argument, kModule,
          fmt::format("{} correspondences, sample_size {}", corrs.size(), params.sample_size));

  // Canonical ordering: sampling happens over this sorted view, so the result
  // is invariant to the caller's correspondence permutation.
  std::vector<int> order(corrs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Correspondence2D3D& ca = corrs[a];
    const Correspondence2D3D& cb = corrs[b];
    const auto ka = std::array{ca.pixel.u, ca.pixel.v, ca.point.x(), ca.point.y(), ca.point.z()};
    const auto kb = std::array{cb.pixel.u, cb.pixel.v, cb.point.x(), cb.point.y(), cb.point.z()};
    return ka < kb;
  });

  // Rank of each input index in the canonical ordering. Refit subsets are
  // assembled in rank order so every floating-point sum downstream sees the
  // same operand sequence regardless of the caller's permutation.
  std::vector<int> rank(corrs.size());
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = static_cast<int>(i);
  const auto canonical_subset = [&](std::vector<int> indices) {
    std::sort(indices.begin(), indices.end(), [&](int a, int b) { return rank[a] < rank[b]; });
    std::vector<Correspondence2D3D> subset;
    subset.reserve(indices.size());
    for (int i : indices) subset.push_back(corrs[i]);
    return subset;
  };

  Rng rng(params.rng_seed);
  std::vector<Correspondence2D3D> sample(params.sample_size);
  RigidTransform best_transform;
  std::vector<int> best_inliers;

  for (int iter = 0; iter < params.max_iterations; ++iter) {
    const std::vector<std::uint32_t> picks = rng.sample_distinct(
        static_cast<std::uint32_t>(corrs.size()), static_cast<std::uint32_t>(params.sample_size));
    for (int i = 0; i < params.sample_size; ++i) sample[i] = corrs[order[picks[i]]];
    RigidTransform model;
    try {
      model = solve_pnp_dlt(sample, k);
    } catch (const Error&) {
      continue;  // degenerate sample, draw again
    }
    std::vector<int> inliers = count_inliers(model, corrs, k, params.inlier_threshold);
    if (inliers.size() <= best_inliers.size()) continue;

    // Local optimization. A minimal-sample fit interpolates its own pixel
    // noise, which can leave the rest of the consensus outside the threshold;
    // refining on the support and recounting until the set stops growing
    // recovers the full consensus.
    for (int round = 0; round < 8; ++round) {
      if (inliers.size() < static_cast<std::size_t>(params.sample_size)) break;
      RefineResult lo;
      try {
        lo = refine(model, canonical_subset(inliers), k);
      } catch (const Error&) {
        break;  // unrefinable support, keep the raw hypothesis
      }
      std::vector<int> recount =
          count_inliers(lo.transform, corrs, k, params.inlier_threshold);
      if (recount.size() < inliers.size()) break;
      const bool grew = recount.size() > inliers.size();
      model = lo.transform;
      inliers = std::move(recount);
      if (!grew) break;
    }
    if (inliers.size() > best_inliers.size()) {
      best_inliers = std::move(inliers);
      best_transform = model;
    }
  }

  if (best_inliers.size() < static_cast<std::size_t>(params.min_inliers))
    raise(errc::insufficient_inliers, kModule,
          fmt::format("best consensus {} below min_inliers {}", best_inliers.size(),
                      params.min_inliers));

  const RefineResult refined = refine(best_transform, canonical_subset(best_inliers), k);

  CalibrationResult result;
  result.transform = refined.transform;
  result.inlier_indices = count_inliers(refined.transform, corrs, k, params.inlier_threshold);
  result.inlier_count = static_cast<int>(result.inlier_indices.size());
  result.inlier_ratio =
      static_cast<double>(result.inlier_count) / static_cast<double>(corrs.size());
  result.iterations_used = params.max_iterations;

  std::vector<int> by_rank = result.inlier_indices;
  std::sort(by_rank.begin(), by_rank.end(), [&](int a, int b) { return rank[a] < rank[b]; });
  double sq = 0.0;
  Eigen::Vector2d r;
  for (int i : by_rank) {
    residual_and_jacobian(result.transform, corrs[i], k, r, nullptr);
    sq += r.squaredNorm();
  }
  result.rms_reprojection =
      result.inlier_count > 0 ? std::sqrt(sq / static_cast<double>(2 * result.inlier_count)) : 0.0;
  return result;
}

RigidTransform compose_rgb_ir(const RigidTransform& t_rgb_li, const RigidTransform& t_ir_li) {
  return compose(t_rgb_li, invert(t_ir_li));
}

ErrorReport error_report(const RigidTransform& estimated, const EulerPose& measured) {
  const EulerPose est = to_euler(estimated);
  ErrorReport report;
  report.x_cm = {measured.x * 100.0, est.x * 100.0, (est.x - measured.x) * 100.0};
  report.y_cm = {measured.y * 100.0, est.y * 100.0, (est.y - measured.y) * 100.0};
  report.z_cm = {measured.z * 100.0, est.z * 100.0, (est.z - measured.z) * 100.0};
  report.roll_deg = {measured.roll_deg, est.roll_deg, normalize_deg(est.roll_deg - measured.roll_deg)};
  report.pitch_deg = {measured.pitch_deg, est.pitch_deg,
                      normalize_deg(est.pitch_deg - measured.pitch_deg)};
  report.yaw_deg = {measured.yaw_deg, est.yaw_deg, normalize_deg(est.yaw_deg - measured.yaw_deg)};
  return report;
}

}  // namespace terracal
