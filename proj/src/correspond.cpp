#include "terracal/correspond.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "terracal/errors.hpp"

namespace terracal {

namespace {
constexpr const char* kModule = "correspond";

// FAST ring of 16 pixels at radius 3, clockwise from 12 o'clock.
constexpr int kRingDx[16] = {0, 1, 2, 3, 3, 3, 2, 1, 0, -1, -2, -3, -3, -3, -2, -1};
constexpr int kRingDy[16] = {-3, -3, -2, -1, 0, 1, 2, 3, 3, 3, 2, 1, 0, -1, -2, -3};
constexpr int kArc = 9;

constexpr int kBorder = 16;         // keeps ring, centroid disk and pattern inside
constexpr int kCentroidRadius = 15;

// Returns the corner response (sum of |ring - center| over pixels past the
// threshold) or 0 when the segment test fails.
int fast_score(const ImageU8& img, int x, int y, int t) {
  const int c = img.at(x, y);
  int state[16];
  for (int i = 0; i < 16; ++i) {
    const int v = img.at(x + kRingDx[i], y + kRingDy[i]);
    state[i] = v > c + t ? 1 : (v < c - t ? -1 : 0);
  }
  for (int sign : {1, -1}) {
    int run = 0;
    // Walk the ring twice to catch arcs that wrap around index 0.
    for (int i = 0; i < 32; ++i) {
      if (state[i & 15] == sign) {
        if (++run >= kArc) {
          int score = 0;
          for (int j = 0; j < 16; ++j)
            if (state[j] == sign) score += std::abs(img.at(x + kRingDx[j], y + kRingDy[j]) - c);
          return score;
        }
      } else {
        run = 0;
      }
    }
  }
  return 0;
}

float intensity_centroid_angle(const ImageU8& img, int x, int y) {
  long m10 = 0, m01 = 0;
  for (int dy = -kCentroidRadius; dy <= kCentroidRadius; ++dy) {
    for (int dx = -kCentroidRadius; dx <= kCentroidRadius; ++dx) {
      if (dx * dx + dy * dy > kCentroidRadius * kCentroidRadius) continue;
      const int v = img.at(x + dx, y + dy);
      m10 += static_cast<long>(dx) * v;
      m01 += static_cast<long>(dy) * v;
    }
  }
  if (m10 == 0 && m01 == 0) return 0.0f;
  return static_cast<float>(std::atan2(static_cast<double>(m01), static_cast<double>(m10)));
}

BinaryDescriptor describe(const ImageU8& blurred, int x, int y, float angle) {
  const double ca = std::cos(angle);
  const double sa = std::sin(angle);
  BinaryDescriptor d;
  for (std::size_t i = 0; i < kDescriptorPattern.size(); ++i) {
    const PatternPair& p = kDescriptorPattern[i];
    const int ax = x + static_cast<int>(std::lround(ca * p.ax - sa * p.ay));
    const int ay = y + static_cast<int>(std::lround(sa * p.ax + ca * p.ay));
    const int bx = x + static_cast<int>(std::lround(ca * p.bx - sa * p.by));
    const int by = y + static_cast<int>(std::lround(sa * p.bx + ca * p.by));
    if (blurred.at(ax, ay) < blurred.at(bx, by)) d.bits[i >> 6] |= 1ull << (i & 63);
  }
  return d;
}

// Best and second-best Hamming distances of q against all of b; lower index
// wins distance ties so results are order-independent of internal scheduling.
void two_nearest(const BinaryDescriptor& q, const std::vector<BinaryDescriptor>& b, int& best_idx,
                 int& best_d, int& second_d) {
  best_idx = -1;
  best_d = std::numeric_limits<int>::max();
  second_d = std::numeric_limits<int>::max();
  for (std::size_t j = 0; j < b.size(); ++j) {
    const int d = q.hamming(b[j]);
    if (d < best_d) {
      second_d = best_d;
      best_d = d;
      best_idx = static_cast<int>(j);
    } else if (d < second_d) {
      second_d = d;
    }
  }
}

nlohmann::json keypoints_to_json(const std::vector<Keypoint>& kps) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Keypoint& k : kps) arr.push_back({k.position.u, k.position.v, k.response});
  return arr;
}

std::vector<Keypoint> keypoints_from_json(const nlohmann::json& arr, int width, int height,
                                          const char* which) {
  if (!arr.is_array()) raise(errc::parse_error, kModule, fmt::format("{} is not an array", which));
  std::vector<Keypoint> kps;
  kps.reserve(arr.size());
  for (const auto& e : arr) {
    if (!e.is_array() || e.size() < 3)
      raise(errc::parse_error, kModule, fmt::format("{} entry is not a [u,v,response] triple", which));
    Keypoint k;
    k.position = {e[0].get<double>(), e[1].get<double>()};
    k.response = e[2].get<float>();
    if (!(k.position.u >= 0.0 && k.position.u < width && k.position.v >= 0.0 &&
          k.position.v < height))
      raise(errc::parse_error, kModule,
            fmt::format("{} keypoint ({}, {}) outside declared {}x{} image", which, k.position.u,
                        k.position.v, width, height));
    kps.push_back(k);
  }
  return kps;
}

}  // namespace

std::vector<Feature> detect(const ImageU8& image, int max_keypoints, int fast_threshold) {
  if (image.width < 32 || image.height < 32)
    raise(errc::image_too_small, kModule,
          fmt::format("{}x{} image, need at least 32x32", image.width, image.height));
  if (max_keypoints <= 0 || fast_threshold <= 0)
    raise(errc::invalid_argument, kModule, "max_keypoints and fast_threshold must be positive");

  std::vector<int> responses(static_cast<std::size_t>(image.width) * image.height, 0);
  for (int y = kBorder; y < image.height - kBorder; ++y)
    for (int x = kBorder; x < image.width - kBorder; ++x)
      responses[static_cast<std::size_t>(y) * image.width + x] =
          fast_score(image, x, y, fast_threshold);

  struct Candidate {
    int x, y, response;
  };
  std::vector<Candidate> candidates;
  auto resp = [&](int x, int y) { return responses[static_cast<std::size_t>(y) * image.width + x]; };
  for (int y = kBorder; y < image.height - kBorder; ++y) {
    for (int x = kBorder; x < image.width - kBorder; ++x) {
      const int r = resp(x, y);
      if (r == 0) continue;
      // 3x3 non-max suppression; earlier raster position wins exact ties.
      bool keep = true;
      for (int dy = -1; dy <= 1 && keep; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int rn = resp(x + dx, y + dy);
          if (rn > r || (rn == r && (dy < 0 || (dy == 0 && dx < 0)))) {
            keep = false;
            break;
          }
        }
      }
      if (keep) candidates.push_back({x, y, r});
    }
  }

  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.response > b.response; });
  if (static_cast<int>(candidates.size()) > max_keypoints) candidates.resize(max_keypoints);

  const ImageU8 blurred = box_blur5(image);
  std::vector<Feature> features;
  features.reserve(candidates.size());
  for (const Candidate& c : candidates) {
    Feature f;
    f.keypoint.position = {static_cast<double>(c.x), static_cast<double>(c.y)};
    f.keypoint.response = static_cast<float>(c.response);
    f.keypoint.orientation = intensity_centroid_angle(image, c.x, c.y);
    f.descriptor = describe(blurred, c.x, c.y, f.keypoint.orientation);
    features.push_back(f);
  }
  return features;
}

std::vector<Match> match(const std::vector<BinaryDescriptor>& a,
                         const std::vector<BinaryDescriptor>& b, double ratio, bool cross_check) {
  if (!(ratio > 0.0 && ratio <= 1.0))
    raise(errc::invalid_argument, kModule, fmt::format("ratio {} outside (0, 1]", ratio));
  if (a.empty() || b.empty()) return {};

  struct Best {
    int idx = -1;
    int dist = 0;
    bool ratio_ok = false;
  };
  auto forward = [&](const std::vector<BinaryDescriptor>& from,
                     const std::vector<BinaryDescriptor>& to) {
    std::vector<Best> out(from.size());
    for (std::size_t i = 0; i < from.size(); ++i) {
      int idx, best, second;
      two_nearest(from[i], to, idx, best, second);
      out[i].idx = idx;
      out[i].dist = best;
      out[i].ratio_ok = second == std::numeric_limits<int>::max() ||
                        static_cast<double>(best) < ratio * static_cast<double>(second);
    }
    return out;
  };

  const std::vector<Best> ab = forward(a, b);
  std::vector<Match> matches;
  if (cross_check) {
    const std::vector<Best> ba = forward(b, a);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const Best& f = ab[i];
      if (!f.ratio_ok || f.idx < 0) continue;
      const Best& r = ba[f.idx];
      if (r.idx != static_cast<int>(i) || !r.ratio_ok) continue;
      matches.push_back({static_cast<int>(i), f.idx, 1.0 - static_cast<double>(f.dist) / 256.0});
    }
  } else {
    // One match per b keypoint: keep the lowest distance, then lowest index_a.
    std::vector<int> claim(b.size(), -1);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const Best& f = ab[i];
      if (!f.ratio_ok || f.idx < 0) continue;
      int& holder = claim[f.idx];
      if (holder < 0 || f.dist < ab[holder].dist) holder = static_cast<int>(i);
    }
    for (std::size_t j = 0; j < b.size(); ++j)
      if (claim[j] >= 0)
        matches.push_back(
            {claim[j], static_cast<int>(j), 1.0 - static_cast<double>(ab[claim[j]].dist) / 256.0});
    std::sort(matches.begin(), matches.end(),
              [](const Match& x, const Match& y) { return x.index_a < y.index_a; });
  }
  return matches;
}

void save_matches(const std::filesystem::path& path, const MatchFile& file) {
  nlohmann::json doc;
  doc["format"] = "terracal-matches";
  doc["version"] = 1;
  doc["image_a"] = {{"width", file.width_a}, {"height", file.height_a}};
  doc["image_b"] = {{"width", file.width_b}, {"height", file.height_b}};
  doc["keypoints_a"] = keypoints_to_json(file.keypoints_a);
  doc["keypoints_b"] = keypoints_to_json(file.keypoints_b);
  nlohmann::json arr = nlohmann::json::array();
  for (const Match& m : file.matches) arr.push_back({m.index_a, m.index_b, m.score});
  doc["matches"] = arr;

  std::ofstream out(path);
  if (!out) raise(errc::io_error, kModule, fmt::format("cannot open '{}'", path.string()));
  out << doc.dump(2) << "\n";
  if (!out) raise(errc::io_error, kModule, fmt::format("error writing '{}'", path.string()));
}

MatchFile load_matches(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(errc::io_error, kModule, fmt::format("cannot open '{}'", path.string()));
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    raise(errc::parse_error, kModule, fmt::format("{}: {}", path.string(), e.what()));
  }

  try {
    if (doc.at("format").get<std::string>() != "terracal-matches" ||
        doc.at("version").get<int>() != 1)
      raise(errc::parse_error, kModule,
            fmt::format("{}: not a terracal-matches v1 document", path.string()));

    MatchFile file;
    file.width_a = doc.at("image_a").at("width").get<int>();
    file.height_a = doc.at("image_a").at("height").get<int>();
    file.width_b = doc.at("image_b").at("width").get<int>();
    file.height_b = doc.at("image_b").at("height").get<int>();
    if (file.width_a <= 0 || file.height_a <= 0 || file.width_b <= 0 || file.height_b <= 0)
      raise(errc::parse_error, kModule, fmt::format("{}: non-positive image size", path.string()));
    file.keypoints_a =
        keypoints_from_json(doc.at("keypoints_a"), file.width_a, file.height_a, "keypoints_a");
    file.keypoints_b =
        keypoints_from_json(doc.at("keypoints_b"), file.width_b, file.height_b, "keypoints_b");

    for (const auto& e : doc.at("matches")) {
      if (!e.is_array() || e.size() < 3)
        raise(errc::parse_error, kModule, "match entry is not an [index_a,index_b,score] triple");
      Match m{e[0].get<int>(), e[1].get<int>(), e[2].get<double>()};
      if (m.index_a < 0 || m.index_a >= static_cast<int>(file.keypoints_a.size()) ||
          m.index_b < 0 || m.index_b >= static_cast<int>(file.keypoints_b.size()))
        raise(errc::index_out_of_range, kModule,
              fmt::format("match ({}, {}) references keypoint past end ({} and {} declared)",
                          m.index_a, m.index_b, file.keypoints_a.size(), file.keypoints_b.size()));
      file.matches.push_back(m);
    }
    return file;
  } catch (const nlohmann::json::exception& e) {
    raise(errc::parse_error, kModule, fmt::format("{}: {}", path.string(), e.what()));
  }
}

LiftResult lift(const std::vector<Match>& matches, const std::vector<Keypoint>& camera_keypoints,
                const std::vector<Keypoint>& intensity_keypoints, const IntensityImage& img,
                const PointCloud& cloud) {
  LiftResult result;
  result.correspondences.reserve(matches.size());
  for (const Match& m : matches) {
    if (m.index_a < 0 || m.index_a >= static_cast<int>(camera_keypoints.size()) || m.index_b < 0 ||
        m.index_b >= static_cast<int>(intensity_keypoints.size()))
      raise(errc::index_out_of_range, kModule,
            fmt::format("match ({}, {}) references keypoint past end", m.index_a, m.index_b));
    const Pixel px = intensity_keypoints[m.index_b].position;
    const int x = static_cast<int>(std::lround(px.u));
    const int y = static_cast<int>(std::lround(px.v));
    if (!img.contains(x, y) || img.is_hole(x, y)) {
      ++result.dropped;
      continue;
    }
    result.correspondences.push_back(
        {camera_keypoints[m.index_a].position, lookup_3d(img, cloud, px)});
  }
  return result;
}

}  // namespace terracal
