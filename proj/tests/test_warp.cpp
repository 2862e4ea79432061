#include <doctest.h>

#include <cmath>

#include <Eigen/Geometry>

#include "terracal/errors.hpp"
#include "terracal/rng.hpp"
#include "terracal/warp.hpp"

using namespace terracal;

namespace {

CameraIntrinsics camera(double f, double cx, double cy, int w, int h) {
  CameraIntrinsics k;
  k.fx = k.fy = f;
  k.cx = cx;
  k.cy = cy;
  k.width = w;
  k.height = h;
  return k;
}

ImageU8 texture(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  ImageU8 img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      img.at(x, y) = static_cast<std::uint8_t>(
          128.0 + 90.0 * std::sin(0.11 * x + rng.uniform01() * 0.01) * std::cos(0.13 * y));
  return img;
}

}  // namespace

TEST_CASE("homography normalizes and inverts") {
  Eigen::Matrix3d m;
  m << 2, 0, 4, 0, 2, 6, 0, 0, 2;
  const Homography h = Homography::from_matrix(m);
  CHECK(h.m(2, 2) == doctest::Approx(1.0));
  CHECK(h.m(0, 0) == doctest::Approx(1.0));
  const Homography inv = h.inverse();
  const Pixel p{12.5, -3.25};
  const Pixel back = inv.apply(h.apply(p));
  CHECK(back.u == doctest::Approx(p.u).epsilon(1e-12));
  CHECK(back.v == doctest::Approx(p.v).epsilon(1e-12));
}

TEST_CASE("homography composition applies right factor first") {
  Eigen::Matrix3d shift;
  shift << 1, 0, 5, 0, 1, 0, 0, 0, 1;
  Eigen::Matrix3d scale;
  scale << 2, 0, 0, 0, 2, 0, 0, 0, 1;
  const Homography h = Homography::from_matrix(scale) * Homography::from_matrix(shift);
  const Pixel p = h.apply({1.0, 1.0});
  CHECK(p.u == doctest::Approx(12.0));  // (1+5)*2
  CHECK(p.v == doctest::Approx(2.0));
}

TEST_CASE("plane validation rejects degenerate and negative-side planes") {
  PlaneModel ok;
  CHECK_NOTHROW(validate(ok));
  PlaneModel zero_normal;
  zero_normal.normal.setZero();
  CHECK_THROWS_AS(validate(zero_normal), Error);
  PlaneModel behind;
  behind.d = -1.0;
  CHECK_THROWS_AS(validate(behind), Error);
}

TEST_CASE("extrinsic homography matches point projection on the plane") {
  // Ground plane 1.5 m below both cameras, IR looking straight ahead, RGB
  // offset and slightly rotated.
  const CameraIntrinsics k_ir = camera(450.0, 319.5, 255.5, 640, 512);
  const CameraIntrinsics k_rgb = camera(700.0, 479.5, 359.5, 960, 720);
  const RigidTransform t_rgb_ir{
      Eigen::Quaterniond(Eigen::AngleAxisd(0.04, Eigen::Vector3d(0.1, 1.0, 0.05).normalized())),
      Eigen::Vector3d(0.12, -0.03, 0.02)};
  PlaneModel plane;
  plane.normal = Eigen::Vector3d(0.0, -1.0, 0.0);
  plane.d = 1.5;
  const Homography h = homography_from_extrinsics(t_rgb_ir, k_rgb, k_ir, plane);

  Rng rng(71);
  for (int i = 0; i < 500; ++i) {
    // Random point on the plane, in front of the IR camera.
    const Eigen::Vector3d p_ir(rng.gaussian() * 2.0, 1.5, 4.0 + rng.uniform01() * 10.0);
    REQUIRE(plane.normal.dot(p_ir) + plane.d == doctest::Approx(0.0));
    const Pixel ir_px = project(k_ir, p_ir);
    const Pixel rgb_px = project(k_rgb, apply(t_rgb_ir, p_ir));
    const Pixel mapped = h.apply(ir_px);
    CHECK(std::hypot(mapped.u - rgb_px.u, mapped.v - rgb_px.v) < 1e-6);
  }
}

TEST_CASE("pure rotation homography is plane independent") {
  const CameraIntrinsics k_ir = camera(450.0, 319.5, 255.5, 640, 512);
  const CameraIntrinsics k_rgb = camera(700.0, 479.5, 359.5, 960, 720);
  const RigidTransform rot{
      Eigen::Quaterniond(Eigen::AngleAxisd(0.1, Eigen::Vector3d(0.3, 0.9, 0.1).normalized())),
      Eigen::Vector3d::Zero()};
  PlaneModel near_plane;
  near_plane.normal = Eigen::Vector3d(0.0, -1.0, 0.0);
  near_plane.d = 1.0;
  PlaneModel far_plane;
  far_plane.normal = Eigen::Vector3d(-0.1, -1.0, -0.2).normalized();
  far_plane.d = 25.0;
  const Homography ha = homography_from_extrinsics(rot, k_rgb, k_ir, near_plane);
  const Homography hb = homography_from_extrinsics(rot, k_rgb, k_ir, far_plane);
  CHECK(ha.m.isApprox(hb.m, 1e-12));
}

TEST_CASE("extrinsic homography rejects planes behind a camera") {
  const CameraIntrinsics k = camera(450.0, 319.5, 255.5, 640, 512);
  PlaneModel plane;
  plane.normal = Eigen::Vector3d(0.0, -1.0, 0.0);
  plane.d = 1.0;
  // Put the RGB camera center 3 m below the ground plane: its center in the
  // IR frame is -t = (0, 3, 0), on the negative side of -y + 1 = 0.
  const RigidTransform t{Eigen::Quaterniond::Identity(), Eigen::Vector3d(0.0, -3.0, 0.0)};
  CHECK_THROWS_AS(homography_from_extrinsics(t, k, k, plane), Error);
}

TEST_CASE("homography_from_matches recovers a known homography") {
  Eigen::Matrix3d m;
  m << 1.02, 0.03, 4.0, -0.02, 0.98, -2.5, 1e-5, -2e-5, 1.0;
  const Homography gt = Homography::from_matrix(m);
  Rng rng(72);
  std::vector<std::pair<Pixel, Pixel>> pairs;
  for (int i = 0; i < 40; ++i) {
    const Pixel src{rng.uniform01() * 600.0, rng.uniform01() * 500.0};
    pairs.emplace_back(src, gt.apply(src));
  }
  const Homography est = homography_from_matches(pairs, {});
  for (int i = 0; i < 20; ++i) {
    const Pixel src{rng.uniform01() * 600.0, rng.uniform01() * 500.0};
    const Pixel a = gt.apply(src);
    const Pixel b = est.apply(src);
    CHECK(std::hypot(a.u - b.u, a.v - b.v) < 1e-9);
  }
}

TEST_CASE("homography_from_matches survives outliers and stays permutation invariant") {
  Eigen::Matrix3d m;
  m << 0.95, -0.05, 12.0, 0.04, 1.05, -7.0, 0.0, 0.0, 1.0;
  const Homography gt = Homography::from_matrix(m);
  Rng rng(73);
  std::vector<std::pair<Pixel, Pixel>> pairs;
  for (int i = 0; i < 60; ++i) {
    const Pixel src{rng.uniform01() * 600.0, rng.uniform01() * 500.0};
    Pixel dst = gt.apply(src);
    if (i % 4 == 0) dst = {rng.uniform01() * 600.0, rng.uniform01() * 500.0};
    pairs.emplace_back(src, dst);
  }
  HomographyRansacParams params;
  params.rng_seed = 5;
  const Homography a = homography_from_matches(pairs, params);

  auto shuffled = pairs;
  for (std::size_t i = shuffled.size() - 1; i > 0; --i)
    std::swap(shuffled[i], shuffled[rng.uniform_int(static_cast<std::uint32_t>(i + 1))]);
  const Homography b = homography_from_matches(shuffled, params);
  CHECK(a.m == b.m);

  for (int i = 0; i < 20; ++i) {
    const Pixel src{rng.uniform01() * 600.0, rng.uniform01() * 500.0};
    const Pixel want = gt.apply(src);
    const Pixel got = a.apply(src);
    CHECK(std::hypot(want.u - got.u, want.v - got.v) < 1e-6);
  }
}

TEST_CASE("homography_from_matches rejects unusable inputs") {
  std::vector<std::pair<Pixel, Pixel>> three = {
      {{0, 0}, {1, 1}}, {{10, 0}, {11, 1}}, {{0, 10}, {1, 11}}};
  CHECK_THROWS_AS(homography_from_matches(three, {}), Error);

  // All source points collinear: every sample is degenerate.
  std::vector<std::pair<Pixel, Pixel>> collinear;
  for (int i = 0; i < 12; ++i)
    collinear.push_back({{static_cast<double>(i), 2.0 * i}, {static_cast<double>(i), 2.0 * i}});
  CHECK_THROWS_AS(homography_from_matches(collinear, {}), Error);
}

TEST_CASE("identity warp under nearest interpolation is bit exact") {
  const ImageU8 img = texture(97, 61, 74);
  const auto out = warp_image(img, Homography{}, img.width, img.height, Interpolation::nearest);
  CHECK(out.image == img);
  for (const auto m : out.mask.data) CHECK(m == 255);
}

TEST_CASE("integer translation warp shifts content and masks the gap") {
  const ImageU8 img = texture(50, 40, 75);
  // Output pixel (x, y) samples src at (x + 10, y): content shifts left.
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 2) = 10.0;
  const auto out = warp_image(img, Homography::from_matrix(m), 50, 40, Interpolation::nearest);
  for (int y = 0; y < 40; ++y) {
    for (int x = 0; x < 40; ++x) {
      CHECK(out.image.at(x, y) == img.at(x + 10, y));
      CHECK(out.mask.at(x, y) == 255);
    }
    for (int x = 40; x < 50; ++x) {
      CHECK(out.image.at(x, y) == 0);
      CHECK(out.mask.at(x, y) == 0);
    }
  }
}

TEST_CASE("warp then inverse warp returns close to the original") {
  const ImageU8 img = texture(120, 90, 76);
  Eigen::Matrix3d m;
  m << 1.01, 0.02, 3.0, -0.015, 0.99, 2.0, 1e-5, -1e-5, 1.0;
  const Homography h = Homography::from_matrix(m);
  const auto once = warp_image(img, h, img.width, img.height, Interpolation::bilinear);
  const auto back =
      warp_image(once.image, h.inverse(), img.width, img.height, Interpolation::bilinear);
  int checked = 0;
  for (int y = 8; y < img.height - 8; ++y)
    for (int x = 8; x < img.width - 8; ++x) {
      // Only compare pixels whose round trip stayed inside bounds both ways.
      if (back.mask.at(x, y) != 255 || once.mask.at(x, y) != 255) continue;
      ++checked;
      CHECK(std::abs(static_cast<int>(back.image.at(x, y)) - static_cast<int>(img.at(x, y))) <= 2);
    }
  CHECK(checked > 5000);
}

TEST_CASE("warp composition collapses to a single warp") {
  const ImageU8 img = texture(100, 80, 77);
  Eigen::Matrix3d m1, m2;
  m1 << 1, 0, 4, 0, 1, -3, 0, 0, 1;
  m2 << 1, 0, -6, 0, 1, 2, 0, 0, 1;
  const Homography h1 = Homography::from_matrix(m1);
  const Homography h2 = Homography::from_matrix(m2);
  const auto two_step = warp_image(warp_image(img, h1, 100, 80, Interpolation::nearest).image, h2,
                                   100, 80, Interpolation::nearest);
  const auto one_step = warp_image(img, h1 * h2, 100, 80, Interpolation::nearest);
  // Interior pixels agree; the two-step version loses an extra border strip.
  for (int y = 10; y < 70; ++y)
    for (int x = 10; x < 90; ++x)
      if (two_step.mask.at(x, y) == 255) CHECK(two_step.image.at(x, y) == one_step.image.at(x, y));
}

TEST_CASE("rgb8 warp carries all three channels") {
  ImageRgb8 img(20, 20);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x)
      img.at(x, y) = {static_cast<std::uint8_t>(x * 12), static_cast<std::uint8_t>(y * 12),
                      static_cast<std::uint8_t>((x + y) * 6)};
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 2) = 2.0;
  const auto out = warp_image(img, Homography::from_matrix(m), 20, 20, Interpolation::nearest);
  CHECK(out.image.at(3, 5).r == img.at(5, 5).r);
  CHECK(out.image.at(3, 5).g == img.at(5, 5).g);
  CHECK(out.image.at(3, 5).b == img.at(5, 5).b);
}

TEST_CASE("plane_induced_map agrees with the linear homography when undistorted") {
  const CameraIntrinsics k_ir = camera(450.0, 319.5, 255.5, 640, 512);
  const CameraIntrinsics k_rgb = camera(700.0, 479.5, 359.5, 960, 720);
  const RigidTransform t_rgb_ir{
      Eigen::Quaterniond(Eigen::AngleAxisd(0.03, Eigen::Vector3d::UnitY())),
      Eigen::Vector3d(0.1, 0.0, 0.05)};
  PlaneModel plane;
  plane.normal = Eigen::Vector3d(0.05, -1.0, -0.1).normalized();
  plane.d = 2.0;
  const Homography h = homography_from_extrinsics(t_rgb_ir, k_rgb, k_ir, plane);
  Rng rng(78);
  int mapped_count = 0;
  for (int i = 0; i < 300; ++i) {
    const Pixel ir_px{rng.uniform01() * 639.0, 300.0 + rng.uniform01() * 211.0};
    Pixel via_map;
    if (!plane_induced_map(t_rgb_ir, k_rgb, k_ir, plane, ir_px, via_map)) continue;
    ++mapped_count;
    const Pixel via_h = h.apply(ir_px);
    CHECK(std::hypot(via_map.u - via_h.u, via_map.v - via_h.v) < 1e-9);
  }
  CHECK(mapped_count > 200);
}

TEST_CASE("warp_image_plane handles distortion consistently with plane_induced_map") {
  CameraIntrinsics k_ir = camera(100.0, 79.5, 63.5, 160, 128);
  CameraIntrinsics k_rgb = camera(100.0, 79.5, 59.5, 160, 120);
  k_rgb.k1 = -0.15;
  k_rgb.k2 = 0.02;
  const RigidTransform t_rgb_ir{Eigen::Quaterniond::Identity(), Eigen::Vector3d(0.08, 0.0, 0.0)};
  PlaneModel plane;
  plane.normal = Eigen::Vector3d(0.0, -1.0, 0.0);
  plane.d = 1.0;
  const ImageU8 rgb = texture(160, 120, 79);
  const auto out = warp_image_plane(rgb, t_rgb_ir, k_rgb, k_ir, plane, Interpolation::nearest);
  REQUIRE(out.image.width == k_ir.width);
  REQUIRE(out.image.height == k_ir.height);
  int inside = 0;
  for (int y = 0; y < k_ir.height; ++y)
    for (int x = 0; x < k_ir.width; ++x) {
      Pixel rgb_px;
      const bool ok = plane_induced_map(t_rgb_ir, k_rgb, k_ir, plane,
                                        {static_cast<double>(x), static_cast<double>(y)}, rgb_px);
      // Nearest interpolation accepts any sample that rounds into bounds.
      const int sx = ok ? static_cast<int>(std::lround(rgb_px.u)) : -1;
      const int sy = ok ? static_cast<int>(std::lround(rgb_px.v)) : -1;
      const bool in_bounds =
          ok && sx >= 0 && sx <= k_rgb.width - 1 && sy >= 0 && sy <= k_rgb.height - 1;
      CHECK((out.mask.at(x, y) == 255) == in_bounds);
      if (!in_bounds) continue;
      ++inside;
      CHECK(out.image.at(x, y) == rgb.at(sx, sy));
    }
  CHECK(inside > 500);
}
