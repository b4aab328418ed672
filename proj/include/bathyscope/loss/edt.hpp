#pragma once

#include <torch/torch.h>

namespace bathyscope {

// Exact Euclidean distance transform of a binary mask: per pixel, the
// distance to the nearest mask==0 pixel (0 on mask==0 pixels). When the mask
// has no zero pixel the distances are +inf; downstream clipping turns that
// into the configured bound. Two-pass lower-envelope algorithm, exact on
// integer grids. Returns a double [H,W] tensor.
torch::Tensor edt(const torch::Tensor& mask);

// Squared-distance variant, exact integers stored as double.
torch::Tensor edt_squared(const torch::Tensor& mask);

}  // namespace bathyscope
