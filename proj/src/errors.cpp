#include "terracal/errors.hpp"

#include <fmt/format.h>

namespace terracal {

std::string_view errc_name(errc code) {
  switch (code) {
    case errc::behind_camera: return "BehindCamera";
    case errc::non_positive_depth: return "NonPositiveDepth";
    case errc::no_correspondences: return "NoCorrespondences";
    case errc::length_mismatch: return "LengthMismatch";
    case errc::empty_view: return "EmptyView";
    case errc::hole_pixel: return "HolePixel";
    case errc::out_of_bounds: return "OutOfBounds";
    case errc::image_too_small: return "ImageTooSmall";
    case errc::parse_error: return "ParseError";
    case errc::index_out_of_range: return "IndexOutOfRange";
    case errc::degenerate_configuration: return "DegenerateConfiguration";
    case errc::all_behind_camera: return "AllBehindCamera";
    case errc::insufficient_inliers: return "InsufficientInliers";
    case errc::plane_behind_camera: return "PlaneBehindCamera";
    case errc::size_mismatch: return "SizeMismatch";
    case errc::window_too_short: return "WindowTooShort";
    case errc::footprint_not_visible: return "FootprintNotVisible";
    case errc::trajectory_gap: return "TrajectoryGap";
    case errc::invalid_argument: return "InvalidArgument";
    case errc::io_error: return "IoError";
  }
  return "UnknownError";
}

bool is_usage_error(errc code) {
  return code == errc::invalid_argument || code == errc::io_error;
}

Error::Error(errc code, std::string module, const std::string& message)
    : std::runtime_error(fmt::format("{}: {}", errc_name(code), message)),
      code_(code),
      module_(std::move(module)) {}

void raise(errc code, std::string module, const std::string& message) {
  throw Error(code, std::move(module), message);
}

}  // namespace terracal
