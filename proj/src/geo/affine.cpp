#include "bathyscope/geo/affine.hpp"

#include <stdexcept>

namespace bathyscope {

Affine rescale_transform(const Affine& src, std::pair<int64_t, int64_t> src_size_hw,
                         std::pair<int64_t, int64_t> tgt_size_hw) {
  const auto [hs, ws] = src_size_hw;
  const auto [ht, wt] = tgt_size_hw;
  if (hs <= 0 || ws <= 0) throw std::invalid_argument("rescale_transform: source dims must be > 0");
  if (ht <= 0 || wt <= 0) throw std::invalid_argument("rescale_transform: target dims must be > 0");
  const double sx = static_cast<double>(ws) / static_cast<double>(wt);
  const double sy = static_cast<double>(hs) / static_cast<double>(ht);
  Affine out = src;
  out.a = src.a * sx;
  out.b = src.b * sy;
  out.d = src.d * sx;
  out.e = src.e * sy;
  return out;
}

}  // namespace bathyscope
