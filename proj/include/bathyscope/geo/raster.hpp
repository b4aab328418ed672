#pragma once

#include <torch/torch.h>

#include <optional>
#include <string>
#include <vector>

#include "bathyscope/geo/affine.hpp"

namespace bathyscope {

// Multiband grid with georeferencing. `bands` is [C,H,W] float32; values are
// raw digital numbers before normalization, reflectance in [0,1] after.
struct RasterTile {
  torch::Tensor bands;
  std::vector<std::string> band_names;
  Affine affine;
  std::string crs_id;
  std::optional<double> nodata;

  int64_t channels() const { return bands.size(0); }
  int64_t height() const { return bands.size(1); }
  int64_t width() const { return bands.size(2); }

  void validate() const;
  static std::vector<std::string> default_band_names(int64_t c);
};

struct DepthRaster {
  enum class Source { kSfm, kLidar, kSynthetic };

  torch::Tensor values;  // [H,W] float32, meters, sign convention of the source
  Source source = Source::kSynthetic;
  Affine affine;
  std::string crs_id;

  int64_t height() const { return values.size(0); }
  int64_t width() const { return values.size(1); }
};

}  // namespace bathyscope
