#include "terracal/cloudmap.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <unordered_map>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "terracal/errors.hpp"
#include "terracal/image.hpp"
#include "terracal/kdtree.hpp"
#include "terracal/png_io.hpp"

namespace terracal {

namespace {
constexpr const char* kModule = "cloudmap";

struct VoxelKey {
  std::int64_t x, y, z;
  bool operator==(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::uint64_t v : {static_cast<std::uint64_t>(k.x), static_cast<std::uint64_t>(k.y),
                            static_cast<std::uint64_t>(k.z)}) {
      h ^= v;
      h *= 0x100000001b3ull;
    }
    return static_cast<std::size_t>(h);
  }
};

// Kabsch closed-form alignment of paired points: returns T with
// t_i ~= T(s_i) in the least-squares sense.
RigidTransform kabsch(const std::vector<Eigen::Vector3d>& src,
                      const std::vector<Eigen::Vector3d>& tgt) {
  Eigen::Vector3d cs = Eigen::Vector3d::Zero();
  Eigen::Vector3d ct = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    cs += src[i];
    ct += tgt[i];
  }
  cs /= static_cast<double>(src.size());
  ct /= static_cast<double>(src.size());
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) h += (src[i] - cs) * (tgt[i] - ct).transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Eigen::Matrix3d r = svd.matrixV() * d * svd.matrixU().transpose();
  RigidTransform t;
  t.rotation = Eigen::Quaterniond(r);
  t.translation = ct - r * cs;
  return t;
}

double percentile(std::vector<float> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return (1.0 - frac) * values[lo] + frac * values[hi];
}

constexpr char kSidecarMagic[8] = {'T', 'C', 'I', 'M', '0', '0', '0', '1'};

}  // namespace

void validate(const IcpParams& params) {
  if (params.max_iterations <= 0 || params.convergence_eps <= 0.0 ||
      params.max_correspondence_dist <= 0.0 || params.voxel_size <= 0.0)
    raise(errc::invalid_argument, kModule, "IcpParams fields must be strictly positive");
}

PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size) {
  if (voxel_size <= 0.0) raise(errc::invalid_argument, kModule, "voxel_size must be positive");
  struct Slot {
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    double intensity_sum = 0.0;
    std::size_t count = 0;
  };
  std::unordered_map<VoxelKey, std::size_t, VoxelKeyHash> index;
  index.reserve(cloud.size());
  std::vector<Slot> slots;
  slots.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d& p = cloud.points[i];
    const VoxelKey key{static_cast<std::int64_t>(std::floor(p.x() / voxel_size)),
                       static_cast<std::int64_t>(std::floor(p.y() / voxel_size)),
                       static_cast<std::int64_t>(std::floor(p.z() / voxel_size))};
    auto [it, inserted] = index.try_emplace(key, slots.size());
    if (inserted) slots.emplace_back();
    Slot& s = slots[it->second];
    s.sum += p;
    s.intensity_sum += cloud.intensities[i];
    ++s.count;
  }
  PointCloud out;
  out.points.reserve(slots.size());
  out.intensities.reserve(slots.size());
  for (const Slot& s : slots)
    out.push_back(s.sum / static_cast<double>(s.count),
                  static_cast<float>(s.intensity_sum / static_cast<double>(s.count)));
  return out;
}

IcpResult icp_align(const PointCloud& source, const PointCloud& target,
                    const RigidTransform& initial, const IcpParams& params) {
  validate(params);
  if (source.empty() || target.empty())
    raise(errc::invalid_argument, kModule, "icp_align requires non-empty clouds");

  const PointCloud src = voxel_downsample(source, params.voxel_size);
  const PointCloud tgt = voxel_downsample(target, params.voxel_size);
  const KdTree tree(tgt.points);
  const double max_d2 = params.max_correspondence_dist * params.max_correspondence_dist;

  IcpResult result;
  result.transform = initial;
  std::vector<Eigen::Vector3d> pair_src, pair_tgt;
  double prev_mean = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < params.max_iterations; ++iter) {
    pair_src.clear();
    pair_tgt.clear();
    double sq_sum = 0.0;
    for (const Eigen::Vector3d& p : src.points) {
      const Eigen::Vector3d q = apply(result.transform, p);
      const auto [idx, d2] = tree.nearest(q);
      if (d2 > max_d2) continue;
      pair_src.push_back(q);
      pair_tgt.push_back(tgt.points[idx]);
      sq_sum += d2;
    }
    if (pair_src.empty())
      raise(errc::no_correspondences, kModule,
            fmt::format("no point pair within {} m at iteration {}", params.max_correspondence_dist,
                        iter));
    // RMS over the current pairs: the SVD step minimizes exactly this, and
    // re-matching to nearest neighbours can only shrink it, so the history is
    // non-increasing while the correspondence set is stable.
    const double rms_dist = std::sqrt(sq_sum / static_cast<double>(pair_src.size()));
    result.error_history.push_back(rms_dist);
    result.transform = compose(kabsch(pair_src, pair_tgt), result.transform);
    result.iterations = iter + 1;
    if (std::abs(prev_mean - rms_dist) < params.convergence_eps) break;
    prev_mean = rms_dist;
  }

  double sq_sum = 0.0;
  std::size_t inliers = 0;
  for (const Eigen::Vector3d& p : src.points) {
    const auto [idx, d2] = tree.nearest(apply(result.transform, p));
    if (d2 > max_d2) continue;
    sq_sum += d2;
    ++inliers;
  }
  if (inliers == 0)
    raise(errc::no_correspondences, kModule, "no inlier correspondences after refinement");
  result.rms_error = std::sqrt(sq_sum / static_cast<double>(inliers));
  return result;
}

PointCloud accumulate(const std::vector<PointCloud>& scans,
                      const std::vector<RigidTransform>& poses, double voxel_size) {
  if (scans.empty() || scans.size() != poses.size())
    raise(errc::length_mismatch, kModule,
          fmt::format("{} scans vs {} poses", scans.size(), poses.size()));
  PointCloud merged;
  for (std::size_t s = 0; s < scans.size(); ++s) {
    validate(scans[s]);
    for (std::size_t i = 0; i < scans[s].size(); ++i)
      merged.push_back(apply(poses[s], scans[s].points[i]), scans[s].intensities[i]);
  }
  return voxel_downsample(merged, voxel_size);
}

IntensityImage render_intensity_image(const PointCloud& cloud, const CameraIntrinsics& k,
                                      const RigidTransform& cam_from_cloud, int splat_radius) {
  validate(cloud);
  validate(k);
  if (cloud.empty()) raise(errc::invalid_argument, kModule, "cannot render an empty cloud");
  if (splat_radius < 0) raise(errc::invalid_argument, kModule, "splat_radius must be >= 0");

  IntensityImage img(k.width, k.height);
  const double reach = static_cast<double>(splat_radius) + 0.5;
  const double reach2 = reach * reach;

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d p = apply(cam_from_cloud, cloud.points[i]);
    if (p.z() <= 0.0) continue;
    const Pixel px = project(k, p);
    const float range = static_cast<float>(p.norm());
    const int x0 = std::max(0, static_cast<int>(std::ceil(px.u - reach)));
    const int x1 = std::min(k.width - 1, static_cast<int>(std::floor(px.u + reach)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(px.v - reach)));
    const int y1 = std::min(k.height - 1, static_cast<int>(std::floor(px.v + reach)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double du = static_cast<double>(x) - px.u;
        const double dv = static_cast<double>(y) - px.v;
        if (du * du + dv * dv > reach2) continue;
        const std::size_t o = img.offset(x, y);
        const std::int32_t prev = img.point_index[o];
        if (prev >= 0 && (img.depth[o] < range ||
                          (img.depth[o] == range && prev < static_cast<std::int32_t>(i))))
          continue;
        img.depth[o] = range;
        img.point_index[o] = static_cast<std::int32_t>(i);
      }
    }
  }

  std::vector<float> visible;
  for (std::size_t o = 0; o < img.point_index.size(); ++o)
    if (img.point_index[o] >= 0) visible.push_back(cloud.intensities[img.point_index[o]]);
  if (visible.empty()) raise(errc::empty_view, kModule, "no point projects inside the image");

  const double lo = percentile(visible, 0.01);
  const double hi = percentile(visible, 0.99);
  const double span = hi - lo;
  for (std::size_t o = 0; o < img.point_index.size(); ++o) {
    if (img.point_index[o] < 0) continue;
    if (span <= 0.0) {
      img.intensity[o] = 0.5f;
      continue;
    }
    const double v = (cloud.intensities[img.point_index[o]] - lo) / span;
    img.intensity[o] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  return img;
}

Eigen::Vector3d lookup_3d(const IntensityImage& img, const PointCloud& cloud, const Pixel& px) {
  const int x = static_cast<int>(std::lround(px.u));
  const int y = static_cast<int>(std::lround(px.v));
  if (!img.contains(x, y))
    raise(errc::out_of_bounds, kModule,
          fmt::format("pixel ({:.1f}, {:.1f}) outside {}x{} image", px.u, px.v, img.width,
                      img.height));
  const std::int32_t idx = img.point_index[img.offset(x, y)];
  if (idx < 0) raise(errc::hole_pixel, kModule, fmt::format("hole at pixel ({}, {})", x, y));
  if (static_cast<std::size_t>(idx) >= cloud.size())
    raise(errc::index_out_of_range, kModule,
          fmt::format("point index {} past cloud size {}", idx, cloud.size()));
  return cloud.points[idx];
}

void write_intensity_image(const std::filesystem::path& png_path,
                           const std::filesystem::path& sidecar_path, const IntensityImage& img) {
  ImageU16 png(img.width, img.height);
  for (std::size_t o = 0; o < img.intensity.size(); ++o)
    png.data[o] = img.point_index[o] < 0
                      ? 0
                      : static_cast<std::uint16_t>(std::lround(img.intensity[o] * 65535.0f));
  write_png(png_path, png);

  std::ofstream out(sidecar_path, std::ios::binary);
  if (!out) raise(errc::io_error, kModule, fmt::format("cannot open '{}'", sidecar_path.string()));
  out.write(kSidecarMagic, sizeof(kSidecarMagic));
  const std::uint32_t w = static_cast<std::uint32_t>(img.width);
  const std::uint32_t h = static_cast<std::uint32_t>(img.height);
  out.write(reinterpret_cast<const char*>(&w), sizeof(w));
  out.write(reinterpret_cast<const char*>(&h), sizeof(h));
  out.write(reinterpret_cast<const char*>(img.depth.data()),
            static_cast<std::streamsize>(img.depth.size() * sizeof(float)));
  out.write(reinterpret_cast<const char*>(img.point_index.data()),
            static_cast<std::streamsize>(img.point_index.size() * sizeof(std::int32_t)));
  if (!out) raise(errc::io_error, kModule, fmt::format("error writing '{}'", sidecar_path.string()));
}

IntensityImage read_intensity_image(const std::filesystem::path& png_path,
                                    const std::filesystem::path& sidecar_path) {
  const ImageU16 png = read_png_gray16(png_path);

  std::ifstream in(sidecar_path, std::ios::binary);
  if (!in) raise(errc::io_error, kModule, fmt::format("cannot open '{}'", sidecar_path.string()));
  char magic[8];
  std::uint32_t w = 0, h = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&w), sizeof(w));
  in.read(reinterpret_cast<char*>(&h), sizeof(h));
  if (!in || std::memcmp(magic, kSidecarMagic, sizeof(magic)) != 0)
    raise(errc::parse_error, kModule,
          fmt::format("'{}' is not an intensity-image sidecar", sidecar_path.string()));
  if (static_cast<int>(w) != png.width || static_cast<int>(h) != png.height)
    raise(errc::parse_error, kModule,
          fmt::format("sidecar {}x{} does not match PNG {}x{}", w, h, png.width, png.height));

  IntensityImage img(png.width, png.height);
  in.read(reinterpret_cast<char*>(img.depth.data()),
          static_cast<std::streamsize>(img.depth.size() * sizeof(float)));
  in.read(reinterpret_cast<char*>(img.point_index.data()),
          static_cast<std::streamsize>(img.point_index.size() * sizeof(std::int32_t)));
  if (!in) raise(errc::parse_error, kModule, fmt::format("truncated sidecar '{}'", sidecar_path.string()));
  for (std::size_t o = 0; o < img.point_index.size(); ++o) {
    if (img.point_index[o] < 0) {
      img.intensity[o] = std::numeric_limits<float>::quiet_NaN();
      img.depth[o] = std::numeric_limits<float>::quiet_NaN();
    } else {
      img.intensity[o] = static_cast<float>(png.data[o]) / 65535.0f;
    }
  }
  return img;
}

}  // namespace terracal
