#include "bathyscope/geo/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace bathyscope {

namespace {

void check_hw(const torch::Tensor& t, const char* what) {
  if (t.dim() != 2) throw std::invalid_argument(std::string(what) + ": expected a 2-D grid");
}

void check_chw(const torch::Tensor& t, const char* what) {
  if (t.dim() != 3 || t.size(0) < 1)
    throw std::invalid_argument(std::string(what) + ": expected a [C,H,W] stack with C >= 1");
}

}  // namespace

std::vector<std::string> RasterTile::default_band_names(int64_t c) {
  static const char* rgb[] = {"B0_blue", "B1_green", "B2_red"};
  std::vector<std::string> names;
  for (int64_t i = 0; i < c; ++i) {
    names.push_back(i < 3 ? rgb[i] : "B" + std::to_string(i));
  }
  return names;
}

void RasterTile::validate() const {
  check_chw(bands, "RasterTile");
  if (!band_names.empty() && static_cast<int64_t>(band_names.size()) != channels())
    throw std::invalid_argument("RasterTile: band_names size does not match channel count");
}

torch::Tensor normalize_bands(const torch::Tensor& raw, double scale) {
  check_chw(raw, "normalize_bands");
  if (!(scale > 0)) throw std::invalid_argument("normalize_bands: scale must be > 0");
  if (!raw.isfinite().all().item<bool>()) {
    auto bad = (~raw.isfinite()).nonzero();
    auto first = bad[0];
    std::ostringstream os;
    os << "normalize_bands: non-finite value in band " << first[0].item<int64_t>() << " at pixel ("
       << first[1].item<int64_t>() << "," << first[2].item<int64_t>() << ")";
    throw std::invalid_argument(os.str());
  }
  return torch::clamp(raw / scale, 0.0, 1.0);
}

DepthTarget form_depth_target(const torch::Tensor& depth, double d_max) {
  check_hw(depth, "form_depth_target");
  if (!(d_max > 0)) throw std::invalid_argument("form_depth_target: d_max must be > 0");

  auto d = depth.to(torch::kFloat32);
  auto valid = (d != 0.0) & (d.abs() <= 1.5 * d_max);
  if (valid.sum().item<int64_t>() == 0)
    throw std::runtime_error("form_depth_target: no valid depth pixels");

  auto vals = d.masked_select(valid);
  const double med = std::get<0>(vals.median(0)).item<double>();
  const int sign_s = med > 0 ? 1 : -1;

  auto y = torch::clamp(static_cast<double>(sign_s) * d / d_max, 0.0, 1.0);
  y = torch::where(valid, y, torch::zeros_like(y));
  return {y, valid.to(torch::kFloat32), sign_s};
}

torch::Tensor build_mask(const torch::Tensor& y, const torch::Tensor& x_norm) {
  check_hw(y, "build_mask");
  check_chw(x_norm, "build_mask");
  if (x_norm.size(1) != y.size(0) || x_norm.size(2) != y.size(1))
    throw std::invalid_argument("build_mask: shapes disagree");
  auto any_band = (x_norm > 0).to(torch::kFloat32).mean(0) > 0;
  return ((y > 0) & any_band).to(torch::kFloat32);
}

torch::Tensor glint_suppress(const torch::Tensor& x_norm, double z_threshold, int64_t window) {
  check_chw(x_norm, "glint_suppress");
  if (window < 3 || window % 2 == 0)
    throw std::invalid_argument("glint_suppress: window must be odd and >= 3");

  const int64_t c = x_norm.size(0), h = x_norm.size(1), w = x_norm.size(2);
  const int64_t nvis = std::min<int64_t>(c, 3);
  auto vis = x_norm.narrow(0, 0, nvis).mean(0);

  auto nonzero = vis > 0;
  const int64_t n = nonzero.sum().item<int64_t>();
  if (n == 0) return x_norm.clone();

  auto vals = vis.masked_select(nonzero);
  const double mean = vals.mean().item<double>();
  const double sd = n > 1 ? vals.std(/*unbiased=*/false).item<double>() : 0.0;
  auto flagged = vis > (mean + z_threshold * sd);
  if (flagged.sum().item<int64_t>() == 0) return x_norm.clone();

  auto out = x_norm.clone();
  auto flag_acc = flagged.accessor<bool, 2>();
  auto in_acc = x_norm.accessor<float, 3>();
  auto out_acc = out.accessor<float, 3>();
  const int64_t r = window / 2;

  // Global fallback means over non-flagged pixels, per band.
  std::vector<double> global_mean(c, 0.0);
  {
    auto keep = ~flagged;
    const int64_t kn = keep.sum().item<int64_t>();
    for (int64_t b = 0; b < c; ++b) {
      global_mean[b] = kn > 0 ? x_norm[b].masked_select(keep).mean().item<double>() : 0.0;
    }
  }

  for (int64_t i = 0; i < h; ++i) {
    for (int64_t j = 0; j < w; ++j) {
      if (!flag_acc[i][j]) continue;
      const int64_t i0 = std::max<int64_t>(0, i - r), i1 = std::min<int64_t>(h - 1, i + r);
      const int64_t j0 = std::max<int64_t>(0, j - r), j1 = std::min<int64_t>(w - 1, j + r);
      int64_t cnt = 0;
      for (int64_t ii = i0; ii <= i1; ++ii)
        for (int64_t jj = j0; jj <= j1; ++jj)
          if (!flag_acc[ii][jj]) ++cnt;
      for (int64_t b = 0; b < c; ++b) {
        if (cnt == 0) {
          out_acc[b][i][j] = static_cast<float>(global_mean[b]);
          continue;
        }
        double s = 0.0;
        for (int64_t ii = i0; ii <= i1; ++ii)
          for (int64_t jj = j0; jj <= j1; ++jj)
            if (!flag_acc[ii][jj]) s += in_acc[b][ii][jj];
        out_acc[b][i][j] = static_cast<float>(s / cnt);
      }
    }
  }
  return out;
}

torch::Tensor apply_nodata(const torch::Tensor& bands, std::optional<double> nodata) {
  if (!nodata) return bands;
  return torch::where(bands == *nodata, torch::zeros_like(bands), bands);
}

torch::Tensor resample_bilinear(const torch::Tensor& grid_hw, int64_t out_h, int64_t out_w) {
  check_hw(grid_hw, "resample_bilinear");
  if (grid_hw.size(0) == out_h && grid_hw.size(1) == out_w) return grid_hw;
  auto in = grid_hw.unsqueeze(0).unsqueeze(0).to(torch::kFloat32);
  auto out = torch::nn::functional::interpolate(
      in, torch::nn::functional::InterpolateFuncOptions()
              .size(std::vector<int64_t>{out_h, out_w})
              .mode(torch::kBilinear)
              .align_corners(false));
  return out.squeeze(0).squeeze(0);
}

torch::Tensor resample_nearest(const torch::Tensor& grid_hw, int64_t out_h, int64_t out_w) {
  check_hw(grid_hw, "resample_nearest");
  if (grid_hw.size(0) == out_h && grid_hw.size(1) == out_w) return grid_hw;
  auto in = grid_hw.unsqueeze(0).unsqueeze(0).to(torch::kFloat32);
  auto out = torch::nn::functional::interpolate(
      in, torch::nn::functional::InterpolateFuncOptions()
              .size(std::vector<int64_t>{out_h, out_w})
              .mode(torch::kNearest));
  return out.squeeze(0).squeeze(0);
}

SupervisionPair make_supervision_pair(const RasterTile& tile, const DepthRaster& depth,
                                      const PreprocessOptions& opts, const std::string& tile_id) {
  tile.validate();
  auto raw = apply_nodata(tile.bands, tile.nodata);
  auto x = normalize_bands(raw, opts.scale);
  if (opts.apply_glint) x = glint_suppress(x, opts.glint_z, opts.glint_window);

  auto d = depth.values;
  if (d.size(0) != tile.height() || d.size(1) != tile.width())
    d = resample_bilinear(d, tile.height(), tile.width());

  auto target = form_depth_target(d, opts.d_max);
  auto mask = build_mask(target.y, x);
  return {x, target.y, mask, opts.d_max, target.sign_s, tile_id};
}

}  // namespace bathyscope
