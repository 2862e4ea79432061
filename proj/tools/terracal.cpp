#include <cstdint>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "terracal/docio.hpp"
#include "terracal/errors.hpp"
#include "terracal/pipeline.hpp"

namespace {

using terracal::PipelineConfig;

const std::map<std::string, std::pair<const char*, void (*)(const PipelineConfig&)>> kCommands = {
    {"accumulate", {"Register and merge LiDAR scans into one cloud", terracal::cmd_accumulate}},
    {"render", {"Render the cloud as a LiDAR intensity image", terracal::cmd_render}},
    {"detect", {"Detect keypoints and descriptors in an image", terracal::cmd_detect}},
    {"match", {"Match two feature files", terracal::cmd_match}},
    {"lift", {"Lift 2D-2D matches to 2D-3D correspondences", terracal::cmd_lift}},
    {"calibrate", {"Estimate rgb/ir-from-lidar extrinsics and compose rgb-from-ir",
                   terracal::cmd_calibrate}},
    {"warp", {"Warp the RGB image into the IR frame", terracal::cmd_warp}},
    {"label", {"Produce self-supervised traversability labels", terracal::cmd_label}},
    {"costmap", {"Score patch pairs into a cost grid and render it", terracal::cmd_costmap}},
    {"report", {"Compare a calibration against a measured reference", terracal::cmd_report}},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"terracal: targetless RGB/IR/LiDAR extrinsic calibration and "
               "self-supervised traversability costmap pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string("terracal ") + terracal::kToolVersion);

  std::string config_path;
  std::uint64_t seed = 0;
  int threads = 0;
  bool verbose = false;
  app.add_option("--config", config_path, "Pipeline configuration file (JSON)")->required();
  CLI::Option* seed_opt = app.add_option("--seed", seed, "Override the config's seed");
  CLI::Option* threads_opt = app.add_option("--threads", threads, "Override the config's threads");
  CLI::Option* verbose_opt = app.add_flag("--verbose", verbose, "Log progress to stderr");

  for (const auto& [name, entry] : kCommands) app.add_subcommand(name, entry.first);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    std::cerr << fmt::format("ERROR 2 cli {}\n", e.what());
    return 2;
  }

  try {
    PipelineConfig cfg = PipelineConfig::load(config_path);
    if (seed_opt->count() > 0) cfg.seed = seed;
    if (threads_opt->count() > 0) cfg.threads = threads;
    if (verbose_opt->count() > 0) cfg.verbose = verbose;

    for (const auto& [name, entry] : kCommands) {
      if (app.got_subcommand(name)) {
        entry.second(cfg);
        return 0;
      }
    }
    std::cerr << "ERROR 2 cli no subcommand\n";
    return 2;
  } catch (const terracal::Error& e) {
    const int code = terracal::is_usage_error(e.code()) ? 2 : 3;
    std::cerr << fmt::format("ERROR {} {} {}\n", code, e.module(), e.what());
    return code;
  } catch (const std::exception& e) {
    std::cerr << fmt::format("ERROR 3 cli {}\n", e.what());
    return 3;
  }
}
