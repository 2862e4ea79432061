#pragma once

#include <cstdint>
#include <filesystem>

#include <nlohmann/json.hpp>

namespace terracal {

// Parsed pipeline configuration. Relative paths inside the document resolve
// against the config file's directory; fields are validated by the command
// that consumes them, with section.field context in error messages.
struct PipelineConfig {
  nlohmann::json doc;
  std::filesystem::path base_dir;
  std::uint64_t seed = 0;
  int threads = 1;
  bool verbose = false;

  static PipelineConfig load(const std::filesystem::path& path);

  // Resolves a possibly relative path from the document.
  std::filesystem::path resolve(const std::string& p) const;
};

// One function per CLI subcommand. All throw Error; the CLI maps usage errors
// (InvalidArgument, IoError) to exit code 2 and everything else to 3.
void cmd_accumulate(const PipelineConfig& cfg);
void cmd_render(const PipelineConfig& cfg);
void cmd_detect(const PipelineConfig& cfg);
void cmd_match(const PipelineConfig& cfg);
void cmd_lift(const PipelineConfig& cfg);
void cmd_calibrate(const PipelineConfig& cfg);
void cmd_warp(const PipelineConfig& cfg);
void cmd_label(const PipelineConfig& cfg);
void cmd_costmap(const PipelineConfig& cfg);
void cmd_report(const PipelineConfig& cfg);

}  // namespace terracal
