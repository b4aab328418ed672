#pragma once

#include <torch/torch.h>

#include <string>
#include <tuple>
#include <vector>

#include "bathyscope/geo/preprocess.hpp"
#include "bathyscope/loss/losses.hpp"
#include "bathyscope/net/model.hpp"

namespace bathyscope {

struct TrainSpec {
  int64_t epochs = 30;
  double lr0 = 2.5e-4;
  int64_t batch = 1;
  int64_t crop = 64;
  int64_t seed = 0;
  LossSpec loss{};
  bool augment = true;

  void validate() const;
};

struct EpochStat {
  int64_t epoch;
  double loss;
  double lr;
};

struct TrainResult {
  ModelHandle model;
  std::vector<EpochStat> history;
  double best_val_rmse_m = 0.0;  // meaningful only when a validation set was given
};

struct EvalReport {
  double rmse_m = 0.0;
  double mae_m = 0.0;
  double r2 = 0.0;
  int64_t n_pixels = 0;
};

// One of {0,90,180,270} degrees plus independent horizontal/vertical flips,
// applied identically to image, target and mask.
std::tuple<torch::Tensor, torch::Tensor, torch::Tensor> augment(const torch::Tensor& x,
                                                                const torch::Tensor& y,
                                                                const torch::Tensor& mask,
                                                                uint64_t seed);

// Adam with a cosine-annealed step size over all steps. When `val` is given,
// the returned model is the epoch snapshot with the best validation RMSE;
// checkpoints are written per epoch when `checkpoint_dir` is non-empty.
TrainResult train(const std::vector<SupervisionPair>& data, const NetConfig& net_config,
                  const TrainSpec& spec, const std::vector<SupervisionPair>* val = nullptr,
                  const std::string& checkpoint_dir = "");

// Test-time protocol: reflect padding, forward, central crop.
torch::Tensor infer_padded(const ModelHandle& model, const torch::Tensor& x_chw, int64_t pad = 16);

// Pooled masked metrics in meters plus the coefficient of determination over
// the union of valid pixels.
EvalReport evaluate(const DepthPredictor& model, const std::vector<SupervisionPair>& data,
                    double d_max);

void write_history_csv(const std::string& path, const std::vector<EpochStat>& history);

}  // namespace bathyscope
