#pragma once

#include <torch/torch.h>

#include <optional>
#include <string>
#include <utility>

#include "bathyscope/geo/raster.hpp"

namespace bathyscope {

// Minimal GeoTIFF exchange: uncompressed, little-endian, band-sequential
// strips; float32 data rasters and uint8 masks. Georeferencing goes through
// ModelTransformation (full affine) and a citation geokey carrying the CRS id.

// `bands` is [C,H,W] or [H,W]; float tensors are written as 32-bit IEEE,
// uint8 tensors as 8-bit samples.
void write_geotiff(const std::string& path, const torch::Tensor& bands, const Affine& affine,
                   const std::string& crs_id, std::optional<double> nodata = std::nullopt);

RasterTile read_geotiff(const std::string& path);

// Reads a band tile and, when `depth_path` (or the `_bands`->`_depth` sibling
// of `path`) exists, the paired depth raster.
std::pair<RasterTile, std::optional<DepthRaster>> read_tile(const std::string& path,
                                                            const std::string& depth_path = "");

// Single-band float32 prediction grid in meters.
void write_prediction(const std::string& path, const torch::Tensor& grid_hw, const Affine& affine,
                      const std::string& crs_id);

}  // namespace bathyscope
