#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace terracal {

enum class errc {
  behind_camera,
  non_positive_depth,
  no_correspondences,
  length_mismatch,
  empty_view,
  hole_pixel,
  out_of_bounds,
  image_too_small,
  parse_error,
  index_out_of_range,
  degenerate_configuration,
  all_behind_camera,
  insufficient_inliers,
  plane_behind_camera,
  size_mismatch,
  window_too_short,
  footprint_not_visible,
  trajectory_gap,
  invalid_argument,
  io_error,
};

std::string_view errc_name(errc code);

/// True for errors caused by bad configuration or usage (missing files,
/// invalid parameters) as opposed to data/algorithm failures. The CLI maps
/// usage errors to exit code 2 and everything else to exit code 3.
bool is_usage_error(errc code);

class Error : public std::runtime_error {
 public:
  Error(errc code, std::string module, const std::string& message);

  errc code() const { return code_; }
  const std::string& module() const { return module_; }

 private:
  errc code_;
  std::string module_;
};

[[noreturn]] void raise(errc code, std::string module, const std::string& message);

}  // namespace terracal
