#include "bathyscope/explain/acamr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "bathyscope/loss/losses.hpp"
#include "bathyscope/util/csv.hpp"

namespace bathyscope {

SaliencyMap acamr(const AblatableModel& model, const torch::Tensor& x, const torch::Tensor& y,
                  const torch::Tensor& mask, double d_max, double eps, const std::string& layer,
                  const std::string& tile_id) {
  const int64_t k = model.channel_count(layer);
  if (k == 0) throw std::runtime_error("acamr: layer has no channels");

  auto [pred, acts] = model.forward_with_layer(x, layer);
  const double e_full = to_meters(masked_rmse(pred, y, mask).item<double>(), d_max);
  if (!std::isfinite(e_full)) throw std::runtime_error("acamr: non-finite baseline error");

  std::vector<double> weights(static_cast<size_t>(k));
  for (int64_t c = 0; c < k; ++c) {
    auto pred_c = model.forward_with_channel_ablated(x, layer, c);
    const double e_c = to_meters(masked_rmse(pred_c, y, mask).item<double>(), d_max);
    weights[static_cast<size_t>(c)] = (e_c - e_full) / (e_full + eps);
  }

  auto w = torch::from_blob(weights.data(), {k}, torch::kFloat64)
               .to(acts.dtype())
               .view({k, 1, 1});
  auto combined = torch::relu((w * acts).sum(0));  // [h,w]

  const int64_t h = x.size(1), wd = x.size(2);
  if (combined.size(0) != h || combined.size(1) != wd) {
    namespace F = torch::nn::functional;
    combined = F::interpolate(combined.unsqueeze(0).unsqueeze(0),
                              F::InterpolateFuncOptions()
                                  .size(std::vector<int64_t>{h, wd})
                                  .mode(torch::kBilinear)
                                  .align_corners(false))
                   .squeeze(0)
                   .squeeze(0);
    combined = torch::relu(combined);
  }

  const double mx = combined.max().item<double>();
  if (mx > 0) combined = combined / mx;

  SaliencyMap out;
  out.grid = combined.to(torch::kFloat32);
  out.source_layer = layer;
  out.tile_id = tile_id;
  out.channel_weights = std::move(weights);
  out.e_full_m = e_full;
  return out;
}

torch::Tensor top_p_mask(const SaliencyMap& saliency, double rho) {
  if (!(rho > 0) || rho > 100) throw std::invalid_argument("top_p_mask: rho must be in (0,100]");
  const auto& g = saliency.grid;
  const int64_t h = g.size(0), w = g.size(1), n = h * w;
  const auto take = static_cast<int64_t>(std::llround(rho / 100.0 * static_cast<double>(n)));

  auto flat = g.reshape({n}).to(torch::kFloat64).contiguous();
  auto acc = flat.accessor<double, 1>();
  std::vector<int64_t> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&acc](int64_t a, int64_t b) { return acc[a] > acc[b]; });

  auto omega = torch::zeros({n}, torch::kBool);
  auto oacc = omega.accessor<bool, 1>();
  for (int64_t i = 0; i < std::min(take, n); ++i) oacc[idx[static_cast<size_t>(i)]] = true;
  return omega.view({h, w});
}

torch::Tensor neutralize(const torch::Tensor& x, const torch::Tensor& omega,
                         const torch::Tensor& mask) {
  if (x.dim() != 3) throw std::invalid_argument("neutralize: expected [C,H,W]");
  if (omega.sizes() != mask.sizes() || omega.size(0) != x.size(1) || omega.size(1) != x.size(2))
    throw std::invalid_argument("neutralize: shapes disagree");

  auto omega_b = omega.to(torch::kBool);
  auto inside = omega_b & (mask > 0);
  const bool has_inside = inside.any().item<bool>();

  auto out = x.clone();
  for (int64_t b = 0; b < x.size(0); ++b) {
    const double fill = has_inside ? x[b].masked_select(inside).mean().item<double>()
                                   : x[b].mean().item<double>();
    out[b] = torch::where(omega_b, x[b], torch::full_like(x[b], fill));
  }
  return out;
}

RetentionReport retention_test(const DepthPredictor& model, const torch::Tensor& x,
                               const torch::Tensor& y, const torch::Tensor& mask,
                               const SaliencyMap& saliency, const std::vector<double>& rhos,
                               double d_max, const std::string& tile_id) {
  RetentionReport report;
  report.tile_id = tile_id.empty() ? saliency.tile_id : tile_id;

  auto pred = model.predict(x);
  report.e_full_m = to_meters(masked_rmse(pred, y, mask).item<double>(), d_max);

  for (double rho : rhos) {
    auto omega = top_p_mask(saliency, rho);
    auto xn = neutralize(x, omega, mask);
    auto pred_n = model.predict(xn);
    const double e_mask = to_meters(masked_rmse(pred_n, y, mask).item<double>(), d_max);
    const double delta = 100.0 * (e_mask - report.e_full_m) / report.e_full_m;
    report.rows.push_back({rho, e_mask, delta});
  }
  return report;
}

void write_retention_csv(const std::string& path, const std::vector<RetentionReport>& reports) {
  CsvWriter csv(path);
  csv.header({"tile", "e_full_m", "rho", "e_mask_m", "delta_pct"});
  for (const auto& r : reports) {
    for (const auto& row : r.rows) {
      csv.cell(r.tile_id);
      csv.cell(r.e_full_m);
      csv.cell(row.rho);
      csv.cell(row.e_mask_m);
      csv.cell(row.delta_pct);
      csv.end_row();
    }
  }
}

}  // namespace bathyscope
