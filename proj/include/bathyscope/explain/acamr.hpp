#pragma once

#include <torch/torch.h>

#include <string>
#include <vector>

#include "bathyscope/net/model.hpp"

namespace bathyscope {

// Per-pixel evidence map, max-normalized to [0,1] unless identically zero.
struct SaliencyMap {
  torch::Tensor grid;  // [H,W] float32, >= 0
  std::string source_layer;
  std::string tile_id;
  std::vector<double> channel_weights;  // construction record, one per channel
  double e_full_m = 0.0;                // baseline masked RMSE in meters
};

struct RetentionRow {
  double rho;        // percent of pixels kept
  double e_mask_m;   // meters
  double delta_pct;  // 100*(e_mask - e_full)/e_full
};

struct RetentionReport {
  std::string tile_id;
  double e_full_m = 0.0;
  std::vector<RetentionRow> rows;
};

// Channel-ablation saliency for regression: ablation error deltas weight the
// activations of `layer`, the weighted sum is rectified, upsampled to the
// input grid and max-normalized. Exactly channel_count+1 forward passes.
SaliencyMap acamr(const AblatableModel& model, const torch::Tensor& x, const torch::Tensor& y,
                  const torch::Tensor& mask, double d_max, double eps = 1e-8,
                  const std::string& layer = "last_decoder_block",
                  const std::string& tile_id = "");

// Top rho-percent pixels by saliency as a boolean [H,W] mask;
// |set| = round(rho/100 * H*W), ties broken in raster order.
torch::Tensor top_p_mask(const SaliencyMap& saliency, double rho);

// Keeps x inside omega; outside, each band is filled with its mean over
// omega intersected with the supervision mask (falling back to the band's
// whole-image mean when that intersection is empty).
torch::Tensor neutralize(const torch::Tensor& x, const torch::Tensor& omega,
                         const torch::Tensor& mask);

RetentionReport retention_test(const DepthPredictor& model, const torch::Tensor& x,
                               const torch::Tensor& y, const torch::Tensor& mask,
                               const SaliencyMap& saliency,
                               const std::vector<double>& rhos = {20, 30, 50}, double d_max = 1.0,
                               const std::string& tile_id = "");

void write_retention_csv(const std::string& path, const std::vector<RetentionReport>& reports);

}  // namespace bathyscope
