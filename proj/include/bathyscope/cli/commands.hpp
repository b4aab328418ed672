#pragma once

#include <string>
#include <vector>

#include "bathyscope/cli/config.hpp"
#include "bathyscope/geo/preprocess.hpp"

namespace bathyscope {

// Each command is idempotent for a fixed configuration: re-running overwrites
// its outputs with identical bytes. Commands throw with a message naming any
// missing upstream artifact.
void cmd_synth(const PipelineConfig& cfg);
void cmd_train(const PipelineConfig& cfg);
void cmd_eval(const PipelineConfig& cfg);
void cmd_lobo(const PipelineConfig& cfg);
void cmd_explain(const PipelineConfig& cfg);
void cmd_retain(const PipelineConfig& cfg);
void cmd_features(const PipelineConfig& cfg);
void cmd_bins(const PipelineConfig& cfg);
void cmd_xregion(const PipelineConfig& cfg);

// Dataset directory helpers shared by commands and tests.
struct LoadedDataset {
  std::vector<SupervisionPair> tiles;
  std::vector<std::string> tile_ids;
  double d_max = 0.0;
};

std::string dataset_dir(const PipelineConfig& cfg, const std::string& region);
LoadedDataset load_dataset(const std::string& dir, const std::string& split /* train|test|all */);

}  // namespace bathyscope
