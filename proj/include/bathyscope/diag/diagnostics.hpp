#pragma once

#include <torch/torch.h>

#include <optional>
#include <string>
#include <vector>

#include "bathyscope/geo/preprocess.hpp"
#include "bathyscope/net/model.hpp"
#include "bathyscope/train/trainer.hpp"

namespace bathyscope {

struct BandImportanceRow {
  int64_t band;
  std::string band_name;
  double delta_rmse_m;
  int64_t rank;  // 1 = most important
};

struct BandImportanceReport {
  double baseline_rmse_m = 0.0;
  std::vector<BandImportanceRow> rows;  // in band order
};

// Leave-one-band-out: each band replaced by its neutral fill (mean over
// valid pixels; per tile by default, dataset-global on request), RMSEs pooled
// over the dataset and de-normalized to meters.
BandImportanceReport lobo(const DepthPredictor& model, const std::vector<SupervisionPair>& data,
                          double d_max, bool global_fill = false);

struct FeatureMaps {
  torch::Tensor vis;     // mean of the first three bands
  torch::Tensor r01;     // B0/(B1+eps), clipped
  torch::Tensor r12;     // B1/(B2+eps), clipped
  torch::Tensor var;     // local variance of VIS over k x k
  torch::Tensor grad;    // Sobel gradient magnitude of VIS
  torch::Tensor lapvar;  // local variance of the Laplacian of Gaussian-smoothed VIS

  torch::Tensor by_name(const std::string& name) const;
  static const std::vector<std::string>& names();
};

FeatureMaps feature_maps(const torch::Tensor& x_norm, int64_t k = 7, double sigma = 1.0,
                         double ratio_clip = 10.0);

struct FeatureCorrRow {
  std::string feature;
  double mean;
  double p90;
  double corr_s;  // z-score product correlation with saliency, in [-1,1]
};

std::vector<FeatureCorrRow> saliency_correlations(const FeatureMaps& features,
                                                  const torch::Tensor& saliency,
                                                  const torch::Tensor& omega, double eps = 1e-8);

struct QcGateOptions {
  double vis_quantile = 0.95;
  double var_quantile = 0.95;
  double shore_dist_px = 20.0;
};

// Excludes bright, high-variance pixels near the land boundary. Quantiles
// are taken over non-land pixels.
torch::Tensor qc_gate(const FeatureMaps& features, const torch::Tensor& land_mask,
                      const QcGateOptions& opts = {});

struct DepthBinRow {
  double lo_m, hi_m;
  int64_t count;
  std::optional<double> mae_m;   // absent for empty bins
  std::optional<double> rmse_m;  // absent below min_count
};

struct DepthBinReport {
  double bin_width_m = 0.25;
  int64_t min_count = 50;
  std::vector<DepthBinRow> rows;  // contiguous from 0
};

DepthBinReport depth_binned_eval(const torch::Tensor& pred_m, const torch::Tensor& truth_m,
                                 const torch::Tensor& mask, double bin_width_m = 0.25,
                                 int64_t min_count = 50);

// Fixed model from one region evaluated on another: pooled metrics plus the
// depth-binned error profile.
std::pair<EvalReport, DepthBinReport> cross_region_eval(const DepthPredictor& model,
                                                        const std::vector<SupervisionPair>& data_b,
                                                        double d_max_b, double bin_width_m = 0.25,
                                                        int64_t min_count = 50);

void write_lobo_csv(const std::string& path, const BandImportanceReport& report);
void write_feature_corr_csv(const std::string& path, const std::string& tile_id,
                            const std::vector<FeatureCorrRow>& rows, bool append);
void write_depth_bins_csv(const std::string& path, const DepthBinReport& report);

}  // namespace bathyscope
