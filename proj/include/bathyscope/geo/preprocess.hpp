#pragma once

#include <torch/torch.h>

#include <string>
#include <vector>

#include "bathyscope/geo/raster.hpp"

namespace bathyscope {

// Normalized input stack, normalized depth target and supervision mask for
// one tile. All tensors are float32; mask holds {0,1}.
struct SupervisionPair {
  torch::Tensor x_norm;  // [C,H,W] in [0,1]
  torch::Tensor y;       // [H,W] in [0,1]
  torch::Tensor mask;    // [H,W] binary
  double d_max = 0.0;    // meters
  int sign_s = 1;        // {-1,+1}
  std::string tile_id;
};

struct DepthTarget {
  torch::Tensor y;      // [H,W] in [0,1]
  torch::Tensor valid;  // [H,W] binary, the valid depth set
  int sign_s = 1;
};

struct PreprocessOptions {
  double scale = 1e4;       // digital-number-to-reflectance divisor
  double d_max = 14.556;    // site depth cap, meters
  bool apply_glint = true;
  double glint_z = 3.0;
  int64_t glint_window = 7;
};

// Per-band reflectance scaling: clip(raw/scale, 0, 1).
torch::Tensor normalize_bands(const torch::Tensor& raw, double scale);

// Sign-robust depth scaling into [0,1] with validity set
// {u : d(u) != 0 and |d(u)| <= 1.5*d_max}. The sign is chosen so the
// median of sign_s*d over the valid set is positive.
DepthTarget form_depth_target(const torch::Tensor& depth, double d_max);

// Supervision mask: pixels with positive target and at least one positive band.
torch::Tensor build_mask(const torch::Tensor& y, const torch::Tensor& x_norm);

// Replaces pixels whose visible brightness exceeds mean + z*std (statistics
// over nonzero pixels) by the windowed mean of non-flagged pixels.
torch::Tensor glint_suppress(const torch::Tensor& x_norm, double z_threshold = 3.0,
                             int64_t window = 7);

// Maps nodata sentinels to 0 so they drop out of the supervision mask.
torch::Tensor apply_nodata(const torch::Tensor& bands, std::optional<double> nodata);

// Bilinear depth resampling to a target grid (masks go through nearest).
torch::Tensor resample_bilinear(const torch::Tensor& grid_hw, int64_t out_h, int64_t out_w);
torch::Tensor resample_nearest(const torch::Tensor& grid_hw, int64_t out_h, int64_t out_w);

// Full tile preprocessing: nodata handling, normalization, optional glint
// suppression, depth resampling, target formation and mask intersection.
SupervisionPair make_supervision_pair(const RasterTile& tile, const DepthRaster& depth,
                                      const PreprocessOptions& opts,
                                      const std::string& tile_id = "");

}  // namespace bathyscope
