#pragma once

#include <torch/torch.h>

#include <string>
#include <vector>

#include "bathyscope/diag/diagnostics.hpp"

namespace bathyscope {

// 8-bit RGB PNG, row-major, data.size() == 3*w*h.
void write_png_rgb8(const std::string& path, int64_t width, int64_t height,
                    const std::vector<unsigned char>& data);

// Grid rendered with a dark-blue-to-yellow color ramp after per-image
// min-max scaling. Figures are quick-look views; the numbers always live in
// the co-emitted CSV/GeoTIFF.
void write_heatmap_png(const std::string& path, const torch::Tensor& grid_hw);

// Bars show per-bin pixel counts, the polyline the per-bin MAE.
void write_depth_bin_chart_png(const std::string& path, const DepthBinReport& report);

}  // namespace bathyscope
