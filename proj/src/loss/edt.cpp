#include "bathyscope/loss/edt.hpp"

#include <limits>
#include <stdexcept>
#include <vector>

namespace bathyscope {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1-D squared distance transform of sampled function f via the lower
// envelope of parabolas.
void dt_1d(const std::vector<double>& f, std::vector<double>& out) {
  const int n = static_cast<int>(f.size());
  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    if (f[q] == kInf) continue;  // parabola at infinity never contributes
    double s;
    while (true) {
      const int p = v[k];
      if (f[p] == kInf) {
        // everything so far was unreachable; restart the envelope at q
        v[k] = q;
        z[k] = -kInf;
        z[k + 1] = kInf;
        break;
      }
      s = ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) /
          (2.0 * q - 2.0 * p);
      if (s <= z[k]) {
        --k;
        continue;
      }
      ++k;
      v[k] = q;
      z[k] = s;
      z[k + 1] = kInf;
      break;
    }
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const int p = v[k];
    out[q] = f[p] == kInf ? kInf : (static_cast<double>(q) - p) * (static_cast<double>(q) - p) + f[p];
  }
}

}  // namespace

torch::Tensor edt_squared(const torch::Tensor& mask_in) {
  if (mask_in.dim() != 2) throw std::invalid_argument("edt: expected a 2-D mask");
  auto mask = mask_in.to(torch::kFloat64).contiguous();
  const int64_t h = mask.size(0), w = mask.size(1);
  auto macc = mask.accessor<double, 2>();
  for (int64_t i = 0; i < h; ++i)
    for (int64_t j = 0; j < w; ++j)
      if (macc[i][j] != 0.0 && macc[i][j] != 1.0)
        throw std::invalid_argument("edt: mask must be binary");

  auto d2 = torch::empty({h, w}, torch::kFloat64);
  auto dacc = d2.accessor<double, 2>();

  // columns first
  std::vector<double> f(static_cast<size_t>(h)), g(static_cast<size_t>(h));
  for (int64_t j = 0; j < w; ++j) {
    for (int64_t i = 0; i < h; ++i) f[static_cast<size_t>(i)] = macc[i][j] == 0.0 ? 0.0 : kInf;
    dt_1d(f, g);
    for (int64_t i = 0; i < h; ++i) dacc[i][j] = g[static_cast<size_t>(i)];
  }
  // then rows
  std::vector<double> fr(static_cast<size_t>(w)), gr(static_cast<size_t>(w));
  for (int64_t i = 0; i < h; ++i) {
    for (int64_t j = 0; j < w; ++j) fr[static_cast<size_t>(j)] = dacc[i][j];
    dt_1d(fr, gr);
    for (int64_t j = 0; j < w; ++j) dacc[i][j] = gr[static_cast<size_t>(j)];
  }
  return d2;
}

torch::Tensor edt(const torch::Tensor& mask) { return edt_squared(mask).sqrt(); }

}  // namespace bathyscope
