#include "terracal/costpipe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "terracal/errors.hpp"
#include "terracal/rng.hpp"

namespace terracal {

namespace {
constexpr const char* kModule = "costpipe";

std::vector<double> parse_csv_line(const std::string& line, std::size_t expected,
                                   const std::filesystem::path& path, std::size_t lineno) {
  std::vector<double> vals;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      vals.push_back(std::stod(cell));
    } catch (const std::exception&) {
      raise(errc::parse_error, kModule,
            fmt::format("{}:{}: '{}' is not a number", path.string(), lineno, cell));
    }
  }
  if (vals.size() != expected)
    raise(errc::parse_error, kModule,
          fmt::format("{}:{}: expected {} fields, got {}", path.string(), lineno, expected,
                      vals.size()));
  return vals;
}

void expect_header(std::ifstream& in, const char* header, const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(in, line))
    raise(errc::parse_error, kModule, fmt::format("{}: empty file", path.string()));
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header)
    raise(errc::parse_error, kModule,
          fmt::format("{}: expected header '{}', got '{}'", path.string(), header, line));
}

}  // namespace

void validate(const PatchGridConfig& cfg) {
  if (cfg.i < 1 || cfg.i > std::min(cfg.w, cfg.h))
    raise(errc::invalid_argument, kModule,
          fmt::format("patch side {} outside [1, min({}, {})]", cfg.i, cfg.w, cfg.h));
  if (cfg.s < 1) raise(errc::invalid_argument, kModule, "stride must be >= 1");
}

PatchCount patch_count(const PatchGridConfig& cfg) {
  validate(cfg);
  PatchCount out;
  out.cols = (cfg.w - cfg.i) / cfg.s + 1;
  out.rows = (cfg.h - cfg.i) / cfg.s + 1;
  out.total = static_cast<long>(out.rows) * out.cols;
  return out;
}

std::vector<PatchPair> extract_patch_pairs(const ImageU8& rgb_warped, const ImageU8& ir,
                                           const PatchGridConfig& cfg, const ImageU8& validity_mask,
                                           double max_invalid_fraction) {
  const PatchCount count = patch_count(cfg);
  if (rgb_warped.width != cfg.w || rgb_warped.height != cfg.h || ir.width != cfg.w ||
      ir.height != cfg.h || validity_mask.width != cfg.w || validity_mask.height != cfg.h)
    raise(errc::size_mismatch, kModule,
          fmt::format("images must be {}x{} per the grid config", cfg.w, cfg.h));
  if (!(max_invalid_fraction >= 0.0 && max_invalid_fraction <= 1.0))
    raise(errc::invalid_argument, kModule, "max_invalid_fraction outside [0, 1]");

  std::vector<PatchPair> pairs;
  pairs.reserve(static_cast<std::size_t>(count.total));
  const double patch_pixels = static_cast<double>(cfg.i) * cfg.i;
  for (int r = 0; r < count.rows; ++r) {
    for (int c = 0; c < count.cols; ++c) {
      const int x0 = c * cfg.s;
      const int y0 = r * cfg.s;
      long invalid = 0;
      for (int y = y0; y < y0 + cfg.i; ++y)
        for (int x = x0; x < x0 + cfg.i; ++x)
          if (validity_mask.at(x, y) == 0) ++invalid;
      PatchPair pair;
      pair.row = r;
      pair.col = c;
      if (static_cast<double>(invalid) / patch_pixels > max_invalid_fraction) {
        pair.skipped = true;
      } else {
        pair.rgb = crop(rgb_warped, x0, y0, cfg.i, cfg.i);
        pair.ir = crop(ir, x0, y0, cfg.i, cfg.i);
      }
      pairs.push_back(std::move(pair));
    }
  }
  return pairs;
}

Psd welch_psd(const std::vector<double>& x, double sample_rate, int nperseg) {
  if (x.size() < 2)
    raise(errc::window_too_short, kModule,
          fmt::format("{} samples, need at least 2", x.size()));
  if (sample_rate <= 0.0) raise(errc::invalid_argument, kModule, "sample_rate must be positive");
  if (nperseg < 2) raise(errc::invalid_argument, kModule, "nperseg must be >= 2");

  const int n = static_cast<int>(x.size());
  const int seg = std::min(nperseg, n);
  const int step = seg - seg / 2;  // 50% overlap
  const int bins = seg / 2 + 1;

  std::vector<double> window(seg);
  double win_sq_sum = 0.0;
  for (int k = 0; k < seg; ++k) {
    // Periodic Hann, the spectral-analysis variant.
    window[k] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * k / seg);
    win_sq_sum += window[k] * window[k];
  }
  const double scale = 1.0 / (sample_rate * win_sq_sum);

  Psd out;
  out.freq.resize(bins);
  for (int k = 0; k < bins; ++k) out.freq[k] = static_cast<double>(k) * sample_rate / seg;
  out.density.assign(bins, 0.0);

  int segments = 0;
  std::vector<double> buf(seg);
  for (int start = 0; start + seg <= n; start += step, ++segments) {
    double mean = 0.0;
    for (int k = 0; k < seg; ++k) mean += x[start + k];
    mean /= seg;
    for (int k = 0; k < seg; ++k) buf[k] = (x[start + k] - mean) * window[k];

    // Direct DFT; segments are at most 256 samples.
    for (int k = 0; k < bins; ++k) {
      double re = 0.0, im = 0.0;
      for (int j = 0; j < seg; ++j) {
        const double phase = -2.0 * std::numbers::pi * j * k / seg;
        re += buf[j] * std::cos(phase);
        im += buf[j] * std::sin(phase);
      }
      double p = (re * re + im * im) * scale;
      const bool nyquist = seg % 2 == 0 && k == bins - 1;
      if (k != 0 && !nyquist) p *= 2.0;  // one-sided spectrum
      out.density[k] += p;
    }
  }
  for (double& d : out.density) d /= segments;
  return out;
}

double psd_area(const Psd& psd) {
  double area = 0.0;
  for (std::size_t k = 1; k < psd.freq.size(); ++k)
    area += 0.5 * (psd.density[k] + psd.density[k - 1]) * (psd.freq[k] - psd.freq[k - 1]);
  return area;
}

CostLabel psd_cost(const ImuWindow& imu, const VelocitySample& vel) {
  if (imu.acc_z.size() < 2)
    raise(errc::window_too_short, kModule,
          fmt::format("{} acc_z samples, need at least 2", imu.acc_z.size()));
  if (imu.sample_rate <= 0.0)
    raise(errc::invalid_argument, kModule, "sample_rate must be positive");
  if (!std::isfinite(vel.vx) || !std::isfinite(vel.vy))
    raise(errc::invalid_argument, kModule, "velocity must be finite");

  // Gravity/DC removal; without it the DC bin dominates the area.
  double mean = 0.0;
  for (double a : imu.acc_z) mean += a;
  mean /= static_cast<double>(imu.acc_z.size());
  std::vector<double> centered(imu.acc_z.size());
  for (std::size_t i = 0; i < imu.acc_z.size(); ++i) centered[i] = imu.acc_z[i] - mean;

  const Psd psd = welch_psd(centered, imu.sample_rate);
  CostLabel label;
  label.y = psd_area(psd) / (std::hypot(vel.vx, vel.vy) + 10.0);
  label.t_start = imu.t_start;
  label.t_end = imu.t_end;
  return label;
}

FourierEncoder::FourierEncoder(int m, double sigma, std::uint64_t rng_seed)
    : sigma_(sigma), seed_(rng_seed) {
  if (m <= 0) raise(errc::invalid_argument, kModule, "feature count m must be positive");
  if (sigma <= 0.0) raise(errc::invalid_argument, kModule, "sigma must be positive");
  Rng rng(rng_seed);
  b_.resize(m);
  for (int i = 0; i < m; ++i) b_(i) = sigma * rng.gaussian();
}

std::vector<double> FourierEncoder::encode(double v) const {
  if (!std::isfinite(v) || v < 0.0)
    raise(errc::invalid_argument, kModule, fmt::format("speed {} must be finite and >= 0", v));
  const int mm = m();
  std::vector<double> out(static_cast<std::size_t>(2) * mm);
  for (int k = 0; k < mm; ++k) {
    const double phase = 2.0 * std::numbers::pi * b_(k) * v;
    out[k] = std::cos(phase);
    out[mm + k] = std::sin(phase);
  }
  return out;
}

RigidTransform interpolate_pose(const std::vector<TimedPose>& trajectory, double t) {
  if (trajectory.empty()) raise(errc::invalid_argument, kModule, "empty trajectory");
  if (t < trajectory.front().timestamp || t > trajectory.back().timestamp)
    raise(errc::trajectory_gap, kModule,
          fmt::format("t = {} outside trajectory span [{}, {}]", t, trajectory.front().timestamp,
                      trajectory.back().timestamp));
  const auto upper = std::upper_bound(
      trajectory.begin(), trajectory.end(), t,
      [](double value, const TimedPose& p) { return value < p.timestamp; });
  if (upper == trajectory.begin()) return trajectory.front().pose;
  if (upper == trajectory.end()) return trajectory.back().pose;
  const TimedPose& a = *(upper - 1);
  const TimedPose& b = *upper;
  const double span = b.timestamp - a.timestamp;
  if (span <= 0.0) return a.pose;
  const double f = (t - a.timestamp) / span;
  return {a.pose.rotation.slerp(f, b.pose.rotation),
          (1.0 - f) * a.pose.translation + f * b.pose.translation};
}

FootprintPatch footprint_patch(const ImageU8& image_at_t0, const RigidTransform& cam_from_world_t0,
                               const std::vector<TimedPose>& trajectory, double t1,
                               const CameraIntrinsics& k, const FootprintRect& footprint,
                               int patch_side) {
  validate(k);
  if (patch_side < 1) raise(errc::invalid_argument, kModule, "patch_side must be >= 1");
  if (footprint.length <= 0.0 || footprint.width <= 0.0)
    raise(errc::invalid_argument, kModule, "footprint extents must be positive");
  if (image_at_t0.width != k.width || image_at_t0.height != k.height)
    raise(errc::size_mismatch, kModule, "image size does not match the intrinsics");

  const RigidTransform world_from_body = interpolate_pose(trajectory, t1);
  const double hl = footprint.length / 2.0;
  const double hw = footprint.width / 2.0;
  const Eigen::Vector3d corners_body[4] = {
      {hl, hw, 0.0}, {hl, -hw, 0.0}, {-hl, hw, 0.0}, {-hl, -hw, 0.0}};

  double min_u = std::numeric_limits<double>::infinity();
  double max_u = -std::numeric_limits<double>::infinity();
  double min_v = std::numeric_limits<double>::infinity();
  double max_v = -std::numeric_limits<double>::infinity();
  for (const Eigen::Vector3d& corner : corners_body) {
    const Eigen::Vector3d p_cam = apply(cam_from_world_t0, apply(world_from_body, corner));
    if (p_cam.z() <= 0.0)
      raise(errc::footprint_not_visible, kModule, "footprint corner behind the camera");
    const Pixel px = project(k, p_cam);
    if (!(px.u >= 0.0 && px.u <= k.width - 1 && px.v >= 0.0 && px.v <= k.height - 1))
      raise(errc::footprint_not_visible, kModule,
            fmt::format("footprint corner projects to ({:.1f}, {:.1f}), outside the image", px.u,
                        px.v));
    min_u = std::min(min_u, px.u);
    max_u = std::max(max_u, px.u);
    min_v = std::min(min_v, px.v);
    max_v = std::max(max_v, px.v);
  }

  const int x0 = std::max(0, static_cast<int>(std::floor(min_u)));
  const int y0 = std::max(0, static_cast<int>(std::floor(min_v)));
  const int x1 = std::min(image_at_t0.width - 1, static_cast<int>(std::ceil(max_u)));
  const int y1 = std::min(image_at_t0.height - 1, static_cast<int>(std::ceil(max_v)));

  FootprintPatch out;
  out.patch = resize_bilinear(crop(image_at_t0, x0, y0, x1 - x0 + 1, y1 - y0 + 1), patch_side,
                              patch_side);
  out.center = {(min_u + max_u) / 2.0, (min_v + max_v) / 2.0};
  return out;
}

double VarianceScorer::score(const ImageU8& rgb_patch, const ImageU8& ir_patch,
                             const std::vector<double>&) const {
  auto variance = [](const ImageU8& img) {
    if (img.data.empty()) return 0.0;
    double mean = 0.0;
    for (std::uint8_t v : img.data) mean += v / 255.0;
    mean /= static_cast<double>(img.data.size());
    double var = 0.0;
    for (std::uint8_t v : img.data) {
      const double d = v / 255.0 - mean;
      var += d * d;
    }
    return var / static_cast<double>(img.data.size());
  };
  return 0.5 * (variance(rgb_patch) + variance(ir_patch));
}

CostGrid score_grid(const std::vector<PatchPair>& pairs, const PatchGridConfig& cfg, double speed,
                    const PatchScorer& scorer, const FourierEncoder& enc) {
  const PatchCount count = patch_count(cfg);
  if (pairs.size() != static_cast<std::size_t>(count.total))
    raise(errc::size_mismatch, kModule,
          fmt::format("{} patch pairs for a {}x{} grid", pairs.size(), count.rows, count.cols));

  CostGrid grid;
  grid.rows = count.rows;
  grid.cols = count.cols;
  grid.cfg = cfg;
  grid.costs.assign(static_cast<std::size_t>(count.total), CostGrid::kUnknown);

  const std::vector<double> encoded = enc.encode(speed);
  for (const PatchPair& pair : pairs) {
    if (pair.skipped) continue;
    try {
      grid.at(pair.row, pair.col) = scorer.score(pair.rgb, pair.ir, encoded);
    } catch (const std::exception&) {
      ++grid.failed_cells;  // cell stays unknown
    }
  }
  return grid;
}

ImageRgb8 render_costmap(const CostGrid& grid, const PatchGridConfig& cfg) {
  const PatchCount count = patch_count(cfg);
  if (grid.rows != count.rows || grid.cols != count.cols)
    raise(errc::size_mismatch, kModule, "grid dimensions do not match the config");

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : grid.costs) {
    if (std::isnan(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }

  constexpr Rgb8 kGray{128, 128, 128};
  ImageRgb8 out(cfg.w, cfg.h);
  for (int y = 0; y < cfg.h; ++y) {
    for (int x = 0; x < cfg.w; ++x) {
      const int r = std::min(y / cfg.s, grid.rows - 1);
      const int c = std::min(x / cfg.s, grid.cols - 1);
      const double v = grid.at(r, c);
      if (std::isnan(v)) {
        out.at(x, y) = kGray;
        continue;
      }
      const double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
      const auto level = static_cast<std::uint8_t>(std::lround(255.0 * t));
      out.at(x, y) = {level, level, static_cast<std::uint8_t>(255 - level)};  // blue to yellow
    }
  }
  return out;
}

std::vector<ImuRecord> read_imu_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(errc::io_error, kModule, fmt::format("cannot open '{}'", path.string()));
  expect_header(in, "timestamp,acc_z,vx,vy", path);
  std::vector<ImuRecord> records;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto vals = parse_csv_line(line, 4, path, lineno);
    records.push_back({vals[0], vals[1], vals[2], vals[3]});
  }
  if (!std::is_sorted(records.begin(), records.end(),
                      [](const ImuRecord& a, const ImuRecord& b) { return a.timestamp < b.timestamp; }))
    raise(errc::parse_error, kModule, fmt::format("{}: timestamps not ascending", path.string()));
  return records;
}

std::vector<TimedPose> read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(errc::io_error, kModule, fmt::format("cannot open '{}'", path.string()));
  expect_header(in, "timestamp,x,y,z,qx,qy,qz,qw", path);
  std::vector<TimedPose> trajectory;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto vals = parse_csv_line(line, 8, path, lineno);
    TimedPose p;
    p.timestamp = vals[0];
    p.pose = {Eigen::Quaterniond(vals[7], vals[4], vals[5], vals[6]),
              Eigen::Vector3d(vals[1], vals[2], vals[3])};
    trajectory.push_back(p);
  }
  if (!std::is_sorted(trajectory.begin(), trajectory.end(),
                      [](const TimedPose& a, const TimedPose& b) { return a.timestamp < b.timestamp; }))
    raise(errc::parse_error, kModule, fmt::format("{}: timestamps not ascending", path.string()));
  return trajectory;
}

void write_labels_csv(const std::filesystem::path& path, const std::vector<LabelRow>& rows) {
  std::ofstream out(path);
  if (!out) raise(errc::io_error, kModule, fmt::format("cannot open '{}'", path.string()));
  out << "timestamp,patch_u,patch_v,y\n";
  for (const LabelRow& r : rows)
    out << fmt::format("{:.12g},{:.12g},{:.12g},{:.12g}\n", r.timestamp, r.patch_u, r.patch_v, r.y);
  if (!out) raise(errc::io_error, kModule, fmt::format("error writing '{}'", path.string()));
}

std::vector<LabelRow> read_labels_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(errc::io_error, kModule, fmt::format("cannot open '{}'", path.string()));
  expect_header(in, "timestamp,patch_u,patch_v,y", path);
  std::vector<LabelRow> rows;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto vals = parse_csv_line(line, 4, path, lineno);
    rows.push_back({vals[0], vals[1], vals[2], vals[3]});
  }
  return rows;
}

void write_grid_csv(const std::filesystem::path& path, const CostGrid& grid) {
  std::ofstream out(path);
  if (!out) raise(errc::io_error, kModule, fmt::format("cannot open '{}'", path.string()));
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      if (c) out << ",";
      out << fmt::format("{:.12g}", grid.at(r, c));
    }
    out << "\n";
  }
  if (!out) raise(errc::io_error, kModule, fmt::format("error writing '{}'", path.string()));
}

CostGrid read_grid_csv(const std::filesystem::path& path, const PatchGridConfig& cfg) {
  const PatchCount count = patch_count(cfg);
  std::ifstream in(path);
  if (!in) raise(errc::io_error, kModule, fmt::format("cannot open '{}'", path.string()));
  CostGrid grid;
  grid.rows = count.rows;
  grid.cols = count.cols;
  grid.cfg = cfg;
  grid.costs.reserve(static_cast<std::size_t>(count.total));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      if (cell == "nan" || cell == "-nan") {
        grid.costs.push_back(CostGrid::kUnknown);
        continue;
      }
      try {
        grid.costs.push_back(std::stod(cell));
      } catch (const std::exception&) {
        raise(errc::parse_error, kModule,
              fmt::format("{}:{}: '{}' is not a number", path.string(), lineno, cell));
      }
    }
  }
  if (grid.costs.size() != static_cast<std::size_t>(count.total))
    raise(errc::parse_error, kModule,
          fmt::format("{}: {} cells, grid needs {}", path.string(), grid.costs.size(),
                      count.total));
  return grid;
}

ImuWindow make_imu_window(const std::vector<ImuRecord>& records, double t_center, double duration) {
  if (duration <= 0.0) raise(errc::invalid_argument, kModule, "duration must be positive");
  const double t0 = t_center - duration / 2.0;
  const double t1 = t_center + duration / 2.0;
  ImuWindow window;
  std::vector<double> times;
  for (const ImuRecord& r : records) {
    if (r.timestamp < t0 || r.timestamp > t1) continue;
    window.acc_z.push_back(r.acc_z);
    times.push_back(r.timestamp);
  }
  if (window.acc_z.size() < 2)
    raise(errc::window_too_short, kModule,
          fmt::format("{} samples in [{:.3f}, {:.3f}]", window.acc_z.size(), t0, t1));
  window.t_start = times.front();
  window.t_end = times.back();
  std::vector<double> dts(times.size() - 1);
  for (std::size_t i = 1; i < times.size(); ++i) dts[i - 1] = times[i] - times[i - 1];
  std::nth_element(dts.begin(), dts.begin() + dts.size() / 2, dts.end());
  const double median_dt = dts[dts.size() / 2];
  if (median_dt <= 0.0)
    raise(errc::invalid_argument, kModule, "non-increasing timestamps inside the window");
  window.sample_rate = 1.0 / median_dt;
  return window;
}

VelocitySample velocity_at(const std::vector<ImuRecord>& records, double t) {
  if (records.empty()) raise(errc::invalid_argument, kModule, "no IMU records");
  if (t <= records.front().timestamp)
    return {records.front().vx, records.front().vy, records.front().timestamp};
  if (t >= records.back().timestamp)
    return {records.back().vx, records.back().vy, records.back().timestamp};
  const auto upper = std::upper_bound(
      records.begin(), records.end(), t,
      [](double value, const ImuRecord& r) { return value < r.timestamp; });
  const ImuRecord& a = *(upper - 1);
  const ImuRecord& b = *upper;
  const double span = b.timestamp - a.timestamp;
  const double f = span > 0.0 ? (t - a.timestamp) / span : 0.0;
  return {(1.0 - f) * a.vx + f * b.vx, (1.0 - f) * a.vy + f * b.vy, t};
}

}  // namespace terracal
