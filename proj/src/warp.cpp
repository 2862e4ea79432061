#include "terracal/warp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "terracal/errors.hpp"
#include "terracal/rng.hpp"

namespace terracal {

namespace {
constexpr const char* kModule = "warp";

Eigen::Matrix3d normalized(const Eigen::Matrix3d& m) {
  if (std::abs(m(2, 2)) > 1e-300) return m / m(2, 2);
  return m;
}

// Signed distance of a camera center from the plane, and whether the plane
// intersects that camera's forward half-space. The plane is given in the
// camera's own frame.
bool plane_in_front(const Eigen::Vector3d& n, double d) {
  if (d <= 0.0) return false;  // center must be strictly positive side
  const bool parallel_to_image = std::abs(n.x()) + std::abs(n.y()) < 1e-12;
  if (parallel_to_image && -d * n.z() <= 0.0) return false;  // plane at z <= 0 only
  return true;
}

struct DltResult {
  Eigen::Matrix3d h;
  double condition;
};

// Normalized DLT from >= 4 pairs; the caller judges the condition number.
DltResult homography_dlt(const std::vector<std::pair<Pixel, Pixel>>& pairs) {
  const std::size_t n = pairs.size();
  Eigen::Vector2d ca = Eigen::Vector2d::Zero();
  Eigen::Vector2d cb = Eigen::Vector2d::Zero();
  for (const auto& [a, b] : pairs) {
    ca += Eigen::Vector2d(a.u, a.v);
    cb += Eigen::Vector2d(b.u, b.v);
  }
  ca /= static_cast<double>(n);
  cb /= static_cast<double>(n);
  double da = 0.0, db = 0.0;
  for (const auto& [a, b] : pairs) {
    da += (Eigen::Vector2d(a.u, a.v) - ca).norm();
    db += (Eigen::Vector2d(b.u, b.v) - cb).norm();
  }
  const double sa = da > 0.0 ? std::sqrt(2.0) * static_cast<double>(n) / da : 1.0;
  const double sb = db > 0.0 ? std::sqrt(2.0) * static_cast<double>(n) / db : 1.0;

  Eigen::MatrixXd design(2 * n, 9);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d a(sa * (pairs[i].first.u - ca.x()), sa * (pairs[i].first.v - ca.y()), 1.0);
    const double bu = sb * (pairs[i].second.u - cb.x());
    const double bv = sb * (pairs[i].second.v - cb.y());
    design.row(2 * i) << a.transpose(), Eigen::RowVector3d::Zero(), -bu * a.transpose();
    design.row(2 * i + 1) << Eigen::RowVector3d::Zero(), a.transpose(), -bv * a.transpose();
  }
  // Full V: the design is 8x9 for a minimal sample, and the null-space vector
  // is the 9th right singular vector, which a thin SVD does not produce.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double condition = sv(7) > 0.0 ? sv(0) / sv(7) : std::numeric_limits<double>::infinity();

  Eigen::Matrix3d hn;
  const Eigen::VectorXd h = svd.matrixV().col(8);
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);

  Eigen::Matrix3d ta, tb;
  ta << sa, 0, -sa * ca.x(), 0, sa, -sa * ca.y(), 0, 0, 1;
  tb << sb, 0, -sb * cb.x(), 0, sb, -sb * cb.y(), 0, 0, 1;
  return {normalized(tb.inverse() * hn * ta), condition};
}

double symmetric_transfer_error(const Eigen::Matrix3d& h, const Eigen::Matrix3d& h_inv,
                                const Pixel& a, const Pixel& b) {
  const Eigen::Vector3d fb = h * Eigen::Vector3d(a.u, a.v, 1.0);
  const Eigen::Vector3d fa = h_inv * Eigen::Vector3d(b.u, b.v, 1.0);
  if (std::abs(fb.z()) < 1e-300 || std::abs(fa.z()) < 1e-300)
    return std::numeric_limits<double>::infinity();
  const double e1 = std::hypot(fb.x() / fb.z() - b.u, fb.y() / fb.z() - b.v);
  const double e2 = std::hypot(fa.x() / fa.z() - a.u, fa.y() / fa.z() - a.v);
  return 0.5 * (e1 + e2);
}

template <typename T>
T bilinear_sample(const Image<T>& src, double sx, double sy);

template <>
std::uint8_t bilinear_sample(const ImageU8& src, double sx, double sy) {
  const int x0 = static_cast<int>(std::floor(sx));
  const int y0 = static_cast<int>(std::floor(sy));
  const int x1 = std::min(x0 + 1, src.width - 1);
  const int y1 = std::min(y0 + 1, src.height - 1);
  const double fx = sx - x0;
  const double fy = sy - y0;
  const double v = (1 - fx) * (1 - fy) * src.at(x0, y0) + fx * (1 - fy) * src.at(x1, y0) +
                   (1 - fx) * fy * src.at(x0, y1) + fx * fy * src.at(x1, y1);
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

template <>
Rgb8 bilinear_sample(const ImageRgb8& src, double sx, double sy) {
  const int x0 = static_cast<int>(std::floor(sx));
  const int y0 = static_cast<int>(std::floor(sy));
  const int x1 = std::min(x0 + 1, src.width - 1);
  const int y1 = std::min(y0 + 1, src.height - 1);
  const double fx = sx - x0;
  const double fy = sy - y0;
  auto mix = [&](auto pick) {
    const double v = (1 - fx) * (1 - fy) * pick(src.at(x0, y0)) +
                     fx * (1 - fy) * pick(src.at(x1, y0)) + (1 - fx) * fy * pick(src.at(x0, y1)) +
                     fx * fy * pick(src.at(x1, y1));
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
  };
  return {mix([](const Rgb8& p) { return static_cast<double>(p.r); }),
          mix([](const Rgb8& p) { return static_cast<double>(p.g); }),
          mix([](const Rgb8& p) { return static_cast<double>(p.b); })};
}

template <typename T, typename MapFn>
Warped<T> warp_with_map(const Image<T>& src, int out_width, int out_height, Interpolation interp,
                        MapFn&& map) {
  if (out_width <= 0 || out_height <= 0)
    raise(errc::invalid_argument, kModule, "output size must be positive");
  Warped<T> out;
  out.image = Image<T>(out_width, out_height, T{});
  out.mask = ImageU8(out_width, out_height, 0);
  for (int y = 0; y < out_height; ++y) {
    for (int x = 0; x < out_width; ++x) {
      Pixel s;
      if (!map(Pixel{static_cast<double>(x), static_cast<double>(y)}, s)) continue;
      if (interp == Interpolation::nearest) {
        const double rx = std::round(s.u);
        const double ry = std::round(s.v);
        if (!(rx >= 0.0 && rx <= src.width - 1 && ry >= 0.0 && ry <= src.height - 1)) continue;
        out.image.at(x, y) = src.at(static_cast<int>(rx), static_cast<int>(ry));
      } else {
        if (!(s.u >= 0.0 && s.u <= src.width - 1 && s.v >= 0.0 && s.v <= src.height - 1)) continue;
        out.image.at(x, y) = bilinear_sample(src, s.u, s.v);
      }
      out.mask.at(x, y) = 255;
    }
  }
  return out;
}

}  // namespace

Homography Homography::from_matrix(const Eigen::Matrix3d& m) {
  if (std::abs(m.determinant()) < 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()))
    raise(errc::degenerate_configuration, kModule, "homography is singular");
  return {normalized(m)};
}

Homography Homography::inverse() const { return Homography::from_matrix(m.inverse()); }

Homography operator*(const Homography& a, const Homography& b) {
  return Homography::from_matrix(a.m * b.m);
}

void validate(const PlaneModel& plane) {
  if (std::abs(plane.normal.norm() - 1.0) > 1e-9)
    raise(errc::invalid_argument, kModule, "plane normal must be unit length");
  if (plane.d <= 0.0) raise(errc::invalid_argument, kModule, "plane distance must be positive");
}

Homography homography_from_extrinsics(const RigidTransform& t_rgb_ir,
                                      const CameraIntrinsics& k_rgb, const CameraIntrinsics& k_ir,
                                      const PlaneModel& plane) {
  validate(k_rgb);
  validate(k_ir);
  validate(plane);

  if (!plane_in_front(plane.normal, plane.d))
    raise(errc::plane_behind_camera, kModule, "plane not in front of the IR camera");
  // Plane expressed in the RGB frame: normal R n, offset d - (R n) . t.
  const Eigen::Matrix3d r = t_rgb_ir.rotation_matrix();
  const Eigen::Vector3d n_rgb = r * plane.normal;
  const double d_rgb = plane.d - n_rgb.dot(t_rgb_ir.translation);
  if (!plane_in_front(n_rgb, d_rgb))
    raise(errc::plane_behind_camera, kModule, "plane not in front of the RGB camera");

  const Eigen::Matrix3d e =
      r - t_rgb_ir.translation * plane.normal.transpose() / plane.d;
  return Homography::from_matrix(k_rgb.k_matrix() * e * k_ir.k_matrix().inverse());
}

Homography homography_from_matches(const std::vector<std::pair<Pixel, Pixel>>& pairs,
                                   const HomographyRansacParams& params) {
  if (pairs.size() < 4)
    raise(errc::invalid_argument, kModule,
          fmt::format("need >= 4 pixel pairs, got {}", pairs.size()));
  if (params.inlier_threshold <= 0.0 || params.max_iterations <= 0 || params.min_inliers < 4)
    raise(errc::invalid_argument, kModule, "invalid RANSAC parameters");

  // Canonical ordering decouples sampling from the caller's pair permutation.
  std::vector<int> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    const auto kx = std::array{pairs[x].first.u, pairs[x].first.v, pairs[x].second.u,
                               pairs[x].second.v};
    const auto ky = std::array{pairs[y].first.u, pairs[y].first.v, pairs[y].second.u,
                               pairs[y].second.v};
    return kx < ky;
  });

  Rng rng(params.rng_seed);
  std::vector<std::pair<Pixel, Pixel>> sample(4);
  Eigen::Matrix3d best_h;
  std::vector<int> best_inliers;
  bool have_hypothesis = false;

  for (int iter = 0; iter < params.max_iterations; ++iter) {
    const auto picks = rng.sample_distinct(pairs.size(), 4);
    for (int i = 0; i < 4; ++i) sample[i] = pairs[order[picks[i]]];
    const DltResult dlt = homography_dlt(sample);
    if (dlt.condition > 1e12) continue;  // collinear or repeated sample
    const Eigen::Matrix3d h_inv = dlt.h.inverse();
    std::vector<int> inliers;
    for (std::size_t i = 0; i < pairs.size(); ++i)
      if (symmetric_transfer_error(dlt.h, h_inv, pairs[i].first, pairs[i].second) <
          params.inlier_threshold)
        inliers.push_back(static_cast<int>(i));
    have_hypothesis = true;
    if (inliers.size() > best_inliers.size()) {
      best_inliers = std::move(inliers);
      best_h = dlt.h;
    }
  }

  if (!have_hypothesis)
    raise(errc::degenerate_configuration, kModule,
          "every sampled hypothesis was degenerate (collinear pairs?)");
  if (best_inliers.size() < static_cast<std::size_t>(params.min_inliers))
    raise(errc::insufficient_inliers, kModule,
          fmt::format("best consensus {} below min_inliers {}", best_inliers.size(),
                      params.min_inliers));

  // Final fit over the consensus set, assembled in canonical order so the
  // refit is independent of the caller's pair permutation.
  std::vector<char> is_inlier(pairs.size(), 0);
  for (int i : best_inliers) is_inlier[i] = 1;
  std::vector<std::pair<Pixel, Pixel>> consensus;
  consensus.reserve(best_inliers.size());
  for (int idx : order)
    if (is_inlier[idx]) consensus.push_back(pairs[idx]);
  const DltResult final_fit = homography_dlt(consensus);
  if (final_fit.condition > 1e12)
    raise(errc::degenerate_configuration, kModule, "consensus set is degenerate");
  return Homography::from_matrix(final_fit.h);
}

template <typename T>
Warped<T> warp_image(const Image<T>& src, const Homography& h, int out_width, int out_height,
                     Interpolation interp) {
  return warp_with_map(src, out_width, out_height, interp, [&](const Pixel& p, Pixel& s) {
    s = h.apply(p);
    return std::isfinite(s.u) && std::isfinite(s.v);
  });
}

bool plane_induced_map(const RigidTransform& t_rgb_ir, const CameraIntrinsics& k_rgb,
                       const CameraIntrinsics& k_ir, const PlaneModel& plane, const Pixel& ir_px,
                       Pixel& rgb_px) {
  const Eigen::Vector3d ray = unproject(k_ir, ir_px, 1.0);
  const double denom = plane.normal.dot(ray);
  if (std::abs(denom) < 1e-300) return false;
  const double s = -plane.d / denom;
  if (s <= 0.0) return false;  // intersection behind the IR camera
  const Eigen::Vector3d p_rgb = apply(t_rgb_ir, s * ray);
  if (p_rgb.z() <= 0.0) return false;
  rgb_px = project(k_rgb, p_rgb);
  return true;
}

template <typename T>
Warped<T> warp_image_plane(const Image<T>& src, const RigidTransform& t_rgb_ir,
                           const CameraIntrinsics& k_rgb, const CameraIntrinsics& k_ir,
                           const PlaneModel& plane, Interpolation interp) {
  validate(k_rgb);
  validate(k_ir);
  validate(plane);
  return warp_with_map(src, k_ir.width, k_ir.height, interp, [&](const Pixel& p, Pixel& s) {
    return plane_induced_map(t_rgb_ir, k_rgb, k_ir, plane, p, s);
  });
}

template Warped<std::uint8_t> warp_image(const ImageU8&, const Homography&, int, int,
                                         Interpolation);
template Warped<Rgb8> warp_image(const ImageRgb8&, const Homography&, int, int, Interpolation);
template Warped<std::uint8_t> warp_image_plane(const ImageU8&, const RigidTransform&,
                                               const CameraIntrinsics&, const CameraIntrinsics&,
                                               const PlaneModel&, Interpolation);
template Warped<Rgb8> warp_image_plane(const ImageRgb8&, const RigidTransform&,
                                       const CameraIntrinsics&, const CameraIntrinsics&,
                                       const PlaneModel&, Interpolation);

}  // namespace terracal
