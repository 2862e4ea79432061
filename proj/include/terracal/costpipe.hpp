#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "terracal/geometry.hpp"
#include "terracal/image.hpp"

namespace terracal {

// Sliding-window layout: patches of side i at stride s over a w x h image.
struct PatchGridConfig {
  int w = 0, h = 0;
  int i = 0;  // patch side, pixels
  int s = 1;  // stride, pixels
};

void validate(const PatchGridConfig& cfg);

struct PatchCount {
  int rows = 0, cols = 0;
  long total = 0;
};

// cols = floor((w-i)/s + 1), rows = floor((h-i)/s + 1).
PatchCount patch_count(const PatchGridConfig& cfg);

struct PatchPair {
  ImageU8 rgb;
  ImageU8 ir;
  int row = 0, col = 0;
  bool skipped = false;  // too much of the patch fell on invalid mask pixels
};

// Emits every grid cell in row-major order; cells whose invalid-mask fraction
// exceeds max_invalid_fraction are marked skipped (with empty pixel payload),
// never dropped.
std::vector<PatchPair> extract_patch_pairs(const ImageU8& rgb_warped, const ImageU8& ir,
                                           const PatchGridConfig& cfg, const ImageU8& validity_mask,
                                           double max_invalid_fraction = 0.1);

struct ImuWindow {
  double sample_rate = 0.0;  // Hz
  std::vector<double> acc_z;  // m/s^2
  double t_start = 0.0, t_end = 0.0;  // seconds
};

struct VelocitySample {
  double vx = 0.0, vy = 0.0;  // m/s
  double timestamp = 0.0;
};

struct Psd {
  std::vector<double> freq;     // Hz
  std::vector<double> density;  // power per Hz
};

// Welch's method: Hann (periodic) window, 50% overlap, per-segment constant
// detrend, one-sided density scaling, mean average over segments.
Psd welch_psd(const std::vector<double>& x, double sample_rate, int nperseg = 256);

// Trapezoidal integral of the density over its full frequency support.
double psd_area(const Psd& psd);

struct CostLabel {
  double y = 0.0;  // PSD-area units per (m/s + offset); always >= 0
  double t_start = 0.0, t_end = 0.0;
};

// y = area(PSD(acc_z - mean)) / (sqrt(vx^2 + vy^2) + 10). The +10 keeps the
// denominator away from zero for a stationary vehicle.
CostLabel psd_cost(const ImuWindow& imu, const VelocitySample& vel);

// Random Fourier features of a scalar speed: gamma(v) = [cos(2 pi B v); sin(2
// pi B v)] with B an m-vector drawn once from N(0, sigma^2) at construction.
class FourierEncoder {
 public:
  FourierEncoder(int m, double sigma, std::uint64_t rng_seed);

  int m() const { return static_cast<int>(b_.size()); }
  double sigma() const { return sigma_; }
  std::uint64_t seed() const { return seed_; }
  const Eigen::VectorXd& frequencies() const { return b_; }

  // Length 2m: cos block then sin block. Requires v finite and >= 0.
  std::vector<double> encode(double v) const;

 private:
  Eigen::VectorXd b_;
  double sigma_;
  std::uint64_t seed_;
};

struct TimedPose {
  double timestamp = 0.0;
  RigidTransform pose;  // world from body
};

// Linear translation interpolation + slerp between the bracketing poses.
// Throws TrajectoryGap when t falls outside the covered span.
RigidTransform interpolate_pose(const std::vector<TimedPose>& trajectory, double t);

// Ground-contact rectangle in the body frame (z = 0 plane), x extent length,
// y extent width, centered on the body origin.
struct FootprintRect {
  double length = 0.8;  // meters
  double width = 0.6;   // meters
};

struct FootprintPatch {
  ImageU8 patch;  // resized to patch_side x patch_side
  Pixel center;   // projection of the footprint bounding box center
};

// Projects the robot footprint at time t1 into the t0 camera image and cuts
// the enclosing axis-aligned patch. Throws FootprintNotVisible when a corner
// falls behind the camera or outside the image.
FootprintPatch footprint_patch(const ImageU8& image_at_t0, const RigidTransform& cam_from_world_t0,
                               const std::vector<TimedPose>& trajectory, double t1,
                               const CameraIntrinsics& k, const FootprintRect& footprint,
                               int patch_side);

// One scalar per patch pair. Implementations advertise whether score() may be
// called from multiple threads concurrently.
class PatchScorer {
 public:
  virtual ~PatchScorer() = default;
  virtual bool thread_safe() const { return true; }
  virtual double score(const ImageU8& rgb_patch, const ImageU8& ir_patch,
                       const std::vector<double>& encoded_velocity) const = 0;
};

// Baseline: grayscale variance (pixels scaled to [0,1]) averaged across the
// two modalities. Exists so the pipeline runs end to end without a learned
// model; ignores the velocity encoding.
class VarianceScorer : public PatchScorer {
 public:
  double score(const ImageU8& rgb_patch, const ImageU8& ir_patch,
               const std::vector<double>& encoded_velocity) const override;
};

struct CostGrid {
  int rows = 0, cols = 0;
  std::vector<double> costs;  // row-major; kUnknown marks skipped/failed cells
  PatchGridConfig cfg;
  int failed_cells = 0;  // scorer failures folded into kUnknown

  // Unknown-cell sentinel, distinct from every valid cost (costs are finite).
  static constexpr double kUnknown = std::numeric_limits<double>::quiet_NaN();

  double at(int r, int c) const { return costs[static_cast<std::size_t>(r) * cols + c]; }
  double& at(int r, int c) { return costs[static_cast<std::size_t>(r) * cols + c]; }
  Pixel cell_top_left(int r, int c) const {
    return {static_cast<double>(c) * cfg.s, static_cast<double>(r) * cfg.s};
  }
};

CostGrid score_grid(const std::vector<PatchPair>& pairs, const PatchGridConfig& cfg, double speed,
                    const PatchScorer& scorer, const FourierEncoder& enc);

// Blue-to-yellow colormap over [min, max] of the valid cells, unknown cells
// gray, upscaled to the source image size (each pixel takes its nearest
// cell's color).
ImageRgb8 render_costmap(const CostGrid& grid, const PatchGridConfig& cfg);

// CSV formats. Numeric fields are written with 12 significant digits.
struct ImuRecord {
  double timestamp = 0.0;
  double acc_z = 0.0;
  double vx = 0.0, vy = 0.0;
};

std::vector<ImuRecord> read_imu_csv(const std::filesystem::path& path);        // timestamp,acc_z,vx,vy
std::vector<TimedPose> read_trajectory_csv(const std::filesystem::path& path);  // timestamp,x,y,z,qx,qy,qz,qw

struct LabelRow {
  double timestamp = 0.0;
  double patch_u = 0.0, patch_v = 0.0;
  double y = 0.0;
};

void write_labels_csv(const std::filesystem::path& path, const std::vector<LabelRow>& rows);
std::vector<LabelRow> read_labels_csv(const std::filesystem::path& path);

void write_grid_csv(const std::filesystem::path& path, const CostGrid& grid);
CostGrid read_grid_csv(const std::filesystem::path& path, const PatchGridConfig& cfg);

// Cuts the IMU samples whose timestamps fall in [t_center - duration/2,
// t_center + duration/2]; sample_rate is estimated from the median spacing.
// Throws WindowTooShort when fewer than two samples fall inside.
ImuWindow make_imu_window(const std::vector<ImuRecord>& records, double t_center, double duration);

// Linear interpolation of (vx, vy) at time t, clamped to the record span.
VelocitySample velocity_at(const std::vector<ImuRecord>& records, double t);

}  // namespace terracal
