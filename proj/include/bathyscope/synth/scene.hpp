#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bathyscope/geo/preprocess.hpp"
#include "bathyscope/geo/raster.hpp"

namespace bathyscope {

// Water-column optics for the forward renderer. All per-band vectors share
// the same length (the band count).
struct OpticsProfile {
  std::vector<double> k_att;        // diffuse attenuation, 1/m, > 0
  std::vector<double> albedo_mean;  // bottom albedo statistics, reflectance
  std::vector<double> albedo_var;
  std::vector<double> r_inf;        // deep-water reflectance in [0,1)
  double glint_frac = 0.0;          // fraction of pixels with specular speckle
  double noise_sigma = 0.0;         // additive reflectance noise std

  int64_t bands() const { return static_cast<int64_t>(k_att.size()); }
  void validate() const;

  // Blue/green/red defaults with k_green < k_blue < k_red.
  static OpticsProfile defaults();
};

enum class DepthMode { kRamp, kSmoothField, kBimodal };

DepthMode depth_mode_from_string(const std::string& s);
std::string to_string(DepthMode m);

struct SceneSpec {
  int64_t height = 64;
  int64_t width = 64;
  double depth_min = 0.0;  // meters
  double depth_max = 5.0;
  DepthMode mode = DepthMode::kSmoothField;
  bool shoreline = false;  // zero-depth land strip on the left edge
  uint64_t seed = 0;

  void validate() const;
};

// Deterministic depth field in meters (positive down). Land pixels are 0.
DepthRaster gen_depth_field(const SceneSpec& spec);

// Exponential-attenuation forward model:
//   R_b = (A_b - r_inf_b) * exp(-2 k_b z) + r_inf_b (+ glint + noise)
// with smooth per-band albedo fields A_b; returns raw digital numbers
// round(1e4 * clip(R,0,1)).
RasterTile render_bands(const DepthRaster& depth, const OpticsProfile& optics, uint64_t seed);

struct RegionSpec {
  SceneSpec scene;
  OpticsProfile optics;
};

struct RegionDataset {
  std::vector<SupervisionPair> tiles;
  double d_max = 0.0;
};

struct SynthTile {
  RasterTile bands;   // raw digital numbers
  DepthRaster depth;  // stored negative-down, source convention
  std::string tile_id;
};

// One raw tile of a region (bands + signed depth raster), seed-derived per index.
SynthTile make_tile(const RegionSpec& region, int64_t index);

// Region A (training) and region B (cross-region evaluation) datasets,
// preprocessed into supervision pairs.
std::pair<RegionDataset, RegionDataset> make_region_pair(const RegionSpec& region_a,
                                                         const RegionSpec& region_b,
                                                         int64_t n_tiles,
                                                         const PreprocessOptions& opts);

}  // namespace bathyscope
