#include <torch/torch.h>

#include <functional>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "bathyscope/cli/commands.hpp"
#include "bathyscope/cli/config.hpp"

namespace {

using bathyscope::PipelineConfig;

struct CommonFlags {
  std::string config_path;
  int64_t jobs = 1;
  int64_t seed = -1;
  std::string variant;
  double scale = -1;
  double dmax = -1;
  double glint_z = -1;
  int64_t glint_window = -1;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "pipeline configuration (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--jobs", flags.jobs, "worker threads for tile-parallel stages");
  cmd->add_option("--seed", flags.seed, "override every module seed");
  cmd->add_option("--variant", flags.variant,
                  "attention variant: cross_only|self_only|self_cross");
  cmd->add_option("--scale", flags.scale, "reflectance scale divisor");
  cmd->add_option("--dmax", flags.dmax, "depth cap in meters");
  cmd->add_option("--glint-z", flags.glint_z, "glint threshold in sigmas");
  cmd->add_option("--glint-window", flags.glint_window, "glint replacement window (odd)");
}

PipelineConfig resolve(const CommonFlags& flags) {
  auto cfg = PipelineConfig::load(flags.config_path);
  cfg.apply_env();
  cfg.jobs = flags.jobs;
  if (flags.seed >= 0) cfg.override_seed(flags.seed);
  if (!flags.variant.empty()) cfg.net.variant = bathyscope::variant_from_string(flags.variant);
  if (flags.scale > 0) cfg.data.scale = flags.scale;
  if (flags.dmax > 0) cfg.data.d_max = flags.dmax;
  if (flags.glint_z > 0) cfg.data.glint_z = flags.glint_z;
  if (flags.glint_window > 0) cfg.data.glint_window = flags.glint_window;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  // Single-threaded tensor math keeps every pipeline rerun byte-identical;
  // the --jobs flag governs tile-level parallelism instead.
  torch::set_num_threads(1);

  CLI::App app{"bathyscope: interpretable satellite-derived-bathymetry workbench"};
  app.require_subcommand(1);

  const std::map<std::string, std::pair<std::string, std::function<void(const PipelineConfig&)>>>
      commands{
          {"synth", {"generate synthetic region datasets", bathyscope::cmd_synth}},
          {"train", {"train the depth regressor on region A", bathyscope::cmd_train}},
          {"eval", {"evaluate the checkpoint on held-out tiles", bathyscope::cmd_eval}},
          {"lobo", {"leave-one-band-out band importance", bathyscope::cmd_lobo}},
          {"explain", {"ablation-CAM regression saliency maps", bathyscope::cmd_explain}},
          {"retain", {"performance-retention validity test", bathyscope::cmd_retain}},
          {"features", {"feature correlations inside salient regions", bathyscope::cmd_features}},
          {"bins", {"depth-binned error profile on region A", bathyscope::cmd_bins}},
          {"xregion", {"cross-region evaluation on region B", bathyscope::cmd_xregion}},
      };

  std::map<std::string, CommonFlags> flags;
  for (const auto& [name, entry] : commands) {
    auto* sub = app.add_subcommand(name, entry.first);
    add_common(sub, flags[name]);
  }

  CLI11_PARSE(app, argc, argv);

  const auto* sub = app.get_subcommands().front();
  const auto& name = sub->get_name();
  try {
    auto cfg = resolve(flags.at(name));
    commands.at(name).second(cfg);
  } catch (const std::exception& e) {
    std::cerr << "bathyscope " << name << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
