#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bathyscope/geo/preprocess.hpp"
#include "bathyscope/loss/losses.hpp"
#include "bathyscope/net/config.hpp"
#include "bathyscope/synth/scene.hpp"
#include "bathyscope/train/trainer.hpp"

namespace bathyscope {

struct SceneSection {
  SceneSpec scene;
  OpticsProfile optics = OpticsProfile::defaults();
  int64_t n_tiles = 32;
  double train_frac = 0.75;
};

struct ExplainSection {
  std::vector<double> rhos{20, 30, 50};
  int64_t pad = 16;
  double eps = 1e-8;
};

struct DiagnosticsSection {
  int64_t k = 7;
  double sigma = 1.0;
  double ratio_clip = 10.0;
  double rho = 30.0;  // retention level for feature correlations
  double vis_quantile = 0.95;
  double var_quantile = 0.95;
  double shore_dist_px = 20.0;
  double bin_width_m = 0.25;
  int64_t min_count = 50;
  bool lobo_global_fill = false;
};

struct TrainSection {
  TrainSpec spec;
  bool paper_protocol = false;  // evaluate on the training tiles
};

// Resolved pipeline configuration. Unknown keys in the file are rejected
// with an error naming the key; every command writes the resolved snapshot
// next to its outputs.
struct PipelineConfig {
  std::string run_id = "run";
  std::string output_dir = "out";
  PreprocessOptions data;
  SceneSection scene;
  std::optional<SceneSection> scene_b;
  NetConfig net = NetConfig::desk();
  TrainSection train;
  ExplainSection explain;
  DiagnosticsSection diagnostics;
  int64_t jobs = 1;

  static PipelineConfig load(const std::string& path);
  static PipelineConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  std::string run_dir() const { return output_dir + "/" + run_id; }

  // Applies the BATHYSCOPE_OUT environment override.
  void apply_env();
  // Sets every module seed at once (scene keeps per-region offsets).
  void override_seed(int64_t seed);
};

}  // namespace bathyscope
