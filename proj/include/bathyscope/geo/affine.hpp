#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

namespace bathyscope {

// Maps pixel (col,row) to map coordinates:
//   x = a*col + b*row + c
//   y = d*col + e*row + f
struct Affine {
  double a = 1.0, b = 0.0, c = 0.0;
  double d = 0.0, e = 1.0, f = 0.0;

  std::pair<double, double> apply(double col, double row) const {
    return {a * col + b * row + c, d * col + e * row + f};
  }

  bool almost_equal(const Affine& o, double tol) const {
    return std::fabs(a - o.a) <= tol && std::fabs(b - o.b) <= tol &&
           std::fabs(c - o.c) <= tol && std::fabs(d - o.d) <= tol &&
           std::fabs(e - o.e) <= tol && std::fabs(f - o.f) <= tol;
  }
};

// Rescale pixel sizes so a raster resampled from (H_s,W_s) to (H_t,W_t)
// keeps its geospatial footprint. Right-multiplies by diag(W_s/W_t, H_s/H_t, 1).
Affine rescale_transform(const Affine& src, std::pair<int64_t, int64_t> src_size_hw,
                         std::pair<int64_t, int64_t> tgt_size_hw);

}  // namespace bathyscope
