#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "terracal/cloudmap.hpp"
#include "terracal/geometry.hpp"
#include "terracal/image.hpp"
#include "terracal/point_cloud.hpp"

namespace terracal {

struct Keypoint {
  Pixel position;
  float response = 0.0f;    // corner score, dimensionless
  float orientation = 0.0f;  // radians
};

struct BinaryDescriptor {
  std::array<std::uint64_t, 4> bits{};

  int hamming(const BinaryDescriptor& other) const {
    int d = 0;
    for (int i = 0; i < 4; ++i) d += std::popcount(bits[i] ^ other.bits[i]);
    return d;
  }
  bool operator==(const BinaryDescriptor&) const = default;
};

struct Match {
  int index_a = 0;
  int index_b = 0;
  double score = 0.0;  // 1 - hamming/256, in [0,1]
  bool operator==(const Match&) const = default;
};

struct Correspondence2D3D {
  Pixel pixel;             // camera image
  Eigen::Vector3d point;   // LiDAR/world frame, meters
};

// The 256 comparison offsets used by the binary descriptor, baked in as a
// constant so descriptors are stable across builds. All offsets lie within a
// radius-13 disk, which rotation preserves.
struct PatternPair {
  std::int8_t ax, ay, bx, by;
};
extern const std::array<PatternPair, 256> kDescriptorPattern;

struct Feature {
  Keypoint keypoint;
  BinaryDescriptor descriptor;
};

// FAST-9/16 corners with intensity-centroid orientation and a 256-bit
// comparison descriptor computed on a blurred copy. Output is sorted by
// response descending (ties by detection order) and capped at max_keypoints.
std::vector<Feature> detect(const ImageU8& image, int max_keypoints = 1000,
                            int fast_threshold = 20);

// Hamming nearest neighbour with Lowe ratio test; optional mutual-best
// cross-check. At most one match per keypoint on either side; output sorted
// by index_a.
std::vector<Match> match(const std::vector<BinaryDescriptor>& a,
                         const std::vector<BinaryDescriptor>& b, double ratio = 0.8,
                         bool cross_check = false);

struct MatchFile {
  int width_a = 0, height_a = 0;
  int width_b = 0, height_b = 0;
  std::vector<Keypoint> keypoints_a;
  std::vector<Keypoint> keypoints_b;
  std::vector<Match> matches;
};

void save_matches(const std::filesystem::path& path, const MatchFile& file);
MatchFile load_matches(const std::filesystem::path& path);

struct LiftResult {
  std::vector<Correspondence2D3D> correspondences;
  std::size_t dropped = 0;  // matches that landed on hole pixels
};

// Resolves each match's intensity-image keypoint (index_b side) to its source
// 3D point. Matches landing on holes are dropped and counted, never fatal.
LiftResult lift(const std::vector<Match>& matches, const std::vector<Keypoint>& camera_keypoints,
                const std::vector<Keypoint>& intensity_keypoints, const IntensityImage& img,
                const PointCloud& cloud);

}  // namespace terracal
