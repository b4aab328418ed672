#include "bathyscope/diag/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "bathyscope/loss/edt.hpp"
#include "bathyscope/loss/losses.hpp"
#include "bathyscope/util/csv.hpp"

namespace bathyscope {

namespace {

namespace F = torch::nn::functional;

torch::Tensor reflect_pad2d(const torch::Tensor& grid, int64_t r) {
  return F::pad(grid.unsqueeze(0).unsqueeze(0), F::PadFuncOptions({r, r, r, r}).mode(torch::kReflect))
      .squeeze(0)
      .squeeze(0);
}

torch::Tensor conv2d_same(const torch::Tensor& grid, const torch::Tensor& kernel) {
  const int64_t r = kernel.size(0) / 2;
  auto padded = reflect_pad2d(grid, r).unsqueeze(0).unsqueeze(0);
  return F::conv2d(padded, kernel.unsqueeze(0).unsqueeze(0)).squeeze(0).squeeze(0);
}

// Local mean over a k x k window with reflect padding.
torch::Tensor box_mean(const torch::Tensor& grid, int64_t k) {
  auto kernel = torch::ones({k, k}, grid.dtype()) / static_cast<double>(k * k);
  return conv2d_same(grid, kernel);
}

double quantile_nearest_rank(const torch::Tensor& vals, double q) {
  auto v = vals.to(torch::kFloat64).contiguous();
  const int64_t n = v.numel();
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  auto sorted = std::get<0>(v.reshape({n}).sort());
  const auto rank = std::min<int64_t>(
      n - 1, std::max<int64_t>(0, static_cast<int64_t>(std::ceil(q * n)) - 1));
  return sorted[rank].item<double>();
}

}  // namespace

// ---------------------------------------------------------------------------
// LOBO
// ---------------------------------------------------------------------------

BandImportanceReport lobo(const DepthPredictor& model, const std::vector<SupervisionPair>& data,
                          double d_max, bool global_fill) {
  if (data.empty()) throw std::invalid_argument("lobo: dataset is empty");
  const int64_t c = data[0].x_norm.size(0);

  // Optional dataset-global fill means over valid pixels.
  std::vector<double> global_mean(static_cast<size_t>(c), 0.0);
  if (global_fill) {
    std::vector<double> sums(static_cast<size_t>(c), 0.0);
    double count = 0.0;
    for (const auto& tile : data) {
      auto m = tile.mask.to(torch::kFloat64);
      count += m.sum().item<double>();
      for (int64_t b = 0; b < c; ++b)
        sums[static_cast<size_t>(b)] += (tile.x_norm[b].to(torch::kFloat64) * m).sum().item<double>();
    }
    if (count == 0) throw std::runtime_error("lobo: no valid pixels in dataset");
    for (int64_t b = 0; b < c; ++b) global_mean[static_cast<size_t>(b)] = sums[static_cast<size_t>(b)] / count;
  }

  double se_full = 0.0;
  std::vector<double> se_band(static_cast<size_t>(c), 0.0);
  double n_pix = 0.0;

  for (const auto& tile : data) {
    if (tile.x_norm.size(0) != c) throw std::invalid_argument("lobo: inconsistent band counts");
    auto y = tile.y.to(torch::kFloat64);
    auto m = tile.mask.to(torch::kFloat64);
    const double mcount = m.sum().item<double>();
    if (mcount == 0) continue;
    n_pix += mcount;

    auto pred = model.predict(tile.x_norm).to(torch::kFloat64);
    se_full += ((pred - y).pow(2) * m).sum().item<double>();

    auto valid = tile.mask > 0;
    for (int64_t b = 0; b < c; ++b) {
      double fill;
      if (global_fill) {
        fill = global_mean[static_cast<size_t>(b)];
      } else {
        fill = tile.x_norm[b].masked_select(valid).mean().item<double>();
      }
      auto x_b = tile.x_norm.clone();
      x_b[b] = torch::full_like(x_b[b], static_cast<float>(fill));
      auto pred_b = model.predict(x_b).to(torch::kFloat64);
      se_band[static_cast<size_t>(b)] += ((pred_b - y).pow(2) * m).sum().item<double>();
    }
  }
  if (n_pix == 0) throw std::runtime_error("lobo: no valid pixels in dataset");

  BandImportanceReport report;
  report.baseline_rmse_m = to_meters(std::sqrt(se_full / n_pix), d_max);
  auto names = RasterTile::default_band_names(c);
  std::vector<double> deltas(static_cast<size_t>(c));
  for (int64_t b = 0; b < c; ++b) {
    const double rmse_b = to_meters(std::sqrt(se_band[static_cast<size_t>(b)] / n_pix), d_max);
    deltas[static_cast<size_t>(b)] = rmse_b - report.baseline_rmse_m;
  }
  std::vector<int64_t> order(static_cast<size_t>(c));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&deltas](int64_t a, int64_t b) { return deltas[static_cast<size_t>(a)] > deltas[static_cast<size_t>(b)]; });
  std::vector<int64_t> rank(static_cast<size_t>(c));
  for (int64_t i = 0; i < c; ++i) rank[static_cast<size_t>(order[static_cast<size_t>(i)])] = i + 1;

  for (int64_t b = 0; b < c; ++b) {
    report.rows.push_back({b, names[static_cast<size_t>(b)], deltas[static_cast<size_t>(b)],
                           rank[static_cast<size_t>(b)]});
  }
  return report;
}

// ---------------------------------------------------------------------------
// Feature maps
// ---------------------------------------------------------------------------

const std::vector<std::string>& FeatureMaps::names() {
  static const std::vector<std::string> kNames{"VIS", "R01", "R12", "Var", "Grad", "LapVar"};
  return kNames;
}

torch::Tensor FeatureMaps::by_name(const std::string& name) const {
  if (name == "VIS") return vis;
  if (name == "R01") return r01;
  if (name == "R12") return r12;
  if (name == "Var") return var;
  if (name == "Grad") return grad;
  if (name == "LapVar") return lapvar;
  throw std::invalid_argument("unknown feature '" + name + "'");
}

FeatureMaps feature_maps(const torch::Tensor& x_norm, int64_t k, double sigma, double ratio_clip) {
  if (x_norm.dim() != 3 || x_norm.size(0) < 3)
    throw std::invalid_argument("feature_maps: expected [C,H,W] with C >= 3");
  if (k < 1 || k % 2 == 0) throw std::invalid_argument("feature_maps: k must be odd");

  const double eps = 1e-6;
  auto x = x_norm.to(torch::kFloat64);
  auto b0 = x[0], b1 = x[1], b2 = x[2];

  FeatureMaps f;
  f.vis = (b0 + b1 + b2) / 3.0;
  f.r01 = torch::clamp(b0 / (b1 + eps), 0.0, ratio_clip);
  f.r12 = torch::clamp(b1 / (b2 + eps), 0.0, ratio_clip);

  auto mean = box_mean(f.vis, k);
  auto mean_sq = box_mean(f.vis * f.vis, k);
  f.var = torch::clamp(mean_sq - mean * mean, 0.0,
                       std::numeric_limits<double>::infinity());

  auto gx_kernel = torch::tensor({{-1.0, 0.0, 1.0}, {-2.0, 0.0, 2.0}, {-1.0, 0.0, 1.0}},
                                 torch::kFloat64);
  auto gy_kernel = gx_kernel.t().contiguous();
  auto gx = conv2d_same(f.vis, gx_kernel);
  auto gy = conv2d_same(f.vis, gy_kernel);
  f.grad = torch::sqrt(gx * gx + gy * gy);

  // Gaussian smoothing, then 4-neighbour Laplacian, then local variance.
  const int64_t gr = std::max<int64_t>(1, static_cast<int64_t>(std::ceil(3.0 * sigma)));
  auto coords = torch::arange(-gr, gr + 1, torch::kFloat64);
  auto g1 = torch::exp(-coords * coords / (2.0 * sigma * sigma));
  g1 = g1 / g1.sum();
  auto gauss = torch::outer(g1, g1);
  auto smooth = conv2d_same(f.vis, gauss);
  auto lap_kernel = torch::tensor({{0.0, 1.0, 0.0}, {1.0, -4.0, 1.0}, {0.0, 1.0, 0.0}},
                                  torch::kFloat64);
  auto lap = conv2d_same(smooth, lap_kernel);
  auto lap_mean = box_mean(lap, k);
  auto lap_mean_sq = box_mean(lap * lap, k);
  f.lapvar = torch::clamp(lap_mean_sq - lap_mean * lap_mean, 0.0,
                          std::numeric_limits<double>::infinity());
  return f;
}

std::vector<FeatureCorrRow> saliency_correlations(const FeatureMaps& features,
                                                  const torch::Tensor& saliency,
                                                  const torch::Tensor& omega, double eps) {
  auto sel = omega.to(torch::kBool);
  const int64_t n = sel.sum().item<int64_t>();
  if (n < 2) throw std::invalid_argument("saliency_correlations: need at least two pixels");

  auto l = saliency.to(torch::kFloat64).masked_select(sel);
  const double mu_l = l.mean().item<double>();
  const double sd_l = l.std(/*unbiased=*/false).item<double>();
  auto zl = (l - mu_l) / (sd_l + eps);

  std::vector<FeatureCorrRow> rows;
  for (const auto& name : FeatureMaps::names()) {
    auto fv = features.by_name(name).to(torch::kFloat64).masked_select(sel);
    const double mu = fv.mean().item<double>();
    const double sd = fv.std(/*unbiased=*/false).item<double>();
    auto zf = (fv - mu) / (sd + eps);
    const double corr = (zf * zl).mean().item<double>();
    rows.push_back({name, mu, quantile_nearest_rank(fv, 0.90), corr});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// QC gate
// ---------------------------------------------------------------------------

torch::Tensor qc_gate(const FeatureMaps& features, const torch::Tensor& land_mask,
                      const QcGateOptions& opts) {
  if (!(opts.vis_quantile > 0 && opts.vis_quantile < 1) ||
      !(opts.var_quantile > 0 && opts.var_quantile < 1))
    throw std::invalid_argument("qc_gate: quantiles must lie in (0,1)");

  auto land = land_mask.to(torch::kBool);
  auto water = ~land;
  if (!land.any().item<bool>()) {
    return torch::zeros_like(land, torch::kUInt8);  // no shore, nothing to gate
  }
  if (!water.any().item<bool>()) return torch::zeros_like(land, torch::kUInt8);

  const double vis_thr = quantile_nearest_rank(features.vis.masked_select(water), opts.vis_quantile);
  const double var_thr = quantile_nearest_rank(features.var.masked_select(water), opts.var_quantile);

  // Distance to the nearest land pixel.
  auto dist = edt(water.to(torch::kFloat32));
  auto flagged = (features.vis > vis_thr) & (features.var > var_thr) &
                 (dist < opts.shore_dist_px) & water;
  return flagged.to(torch::kUInt8);
}

// ---------------------------------------------------------------------------
// Depth-binned evaluation
// ---------------------------------------------------------------------------

DepthBinReport depth_binned_eval(const torch::Tensor& pred_m, const torch::Tensor& truth_m,
                                 const torch::Tensor& mask, double bin_width_m,
                                 int64_t min_count) {
  if (!(bin_width_m > 0)) throw std::invalid_argument("depth_binned_eval: bin width must be > 0");
  if (pred_m.sizes() != truth_m.sizes() || pred_m.sizes() != mask.sizes())
    throw std::invalid_argument("depth_binned_eval: shapes disagree");

  auto sel = mask.to(torch::kBool).reshape({-1});
  auto p = pred_m.to(torch::kFloat64).reshape({-1}).masked_select(sel);
  auto t = truth_m.to(torch::kFloat64).reshape({-1}).masked_select(sel);

  DepthBinReport report;
  report.bin_width_m = bin_width_m;
  report.min_count = min_count;
  const int64_t n = t.numel();
  if (n == 0) return report;

  const double tmax = t.max().item<double>();
  const auto nbins = static_cast<int64_t>(std::floor(tmax / bin_width_m)) + 1;

  std::vector<int64_t> count(static_cast<size_t>(nbins), 0);
  std::vector<double> aerr(static_cast<size_t>(nbins), 0.0);
  std::vector<double> serr(static_cast<size_t>(nbins), 0.0);
  auto pa = p.accessor<double, 1>();
  auto ta = t.accessor<double, 1>();
  for (int64_t i = 0; i < n; ++i) {
    auto bin = static_cast<int64_t>(std::floor(ta[i] / bin_width_m));
    bin = std::clamp<int64_t>(bin, 0, nbins - 1);
    const double e = pa[i] - ta[i];
    count[static_cast<size_t>(bin)] += 1;
    aerr[static_cast<size_t>(bin)] += std::fabs(e);
    serr[static_cast<size_t>(bin)] += e * e;
  }

  for (int64_t b = 0; b < nbins; ++b) {
    DepthBinRow row;
    row.lo_m = b * bin_width_m;
    row.hi_m = (b + 1) * bin_width_m;
    row.count = count[static_cast<size_t>(b)];
    if (row.count > 0) {
      row.mae_m = aerr[static_cast<size_t>(b)] / row.count;
      if (row.count >= min_count) row.rmse_m = std::sqrt(serr[static_cast<size_t>(b)] / row.count);
    }
    report.rows.push_back(row);
  }
  return report;
}

std::pair<EvalReport, DepthBinReport> cross_region_eval(const DepthPredictor& model,
                                                        const std::vector<SupervisionPair>& data_b,
                                                        double d_max_b, double bin_width_m,
                                                        int64_t min_count) {
  if (data_b.empty()) throw std::invalid_argument("cross_region_eval: dataset is empty");
  auto report = evaluate(model, data_b, d_max_b);

  std::vector<torch::Tensor> preds, truths, masks;
  for (const auto& tile : data_b) {
    preds.push_back((model.predict(tile.x_norm) * d_max_b).reshape({-1}));
    truths.push_back((tile.y * d_max_b).reshape({-1}));
    masks.push_back(tile.mask.reshape({-1}));
  }
  auto bins = depth_binned_eval(torch::cat(preds), torch::cat(truths), torch::cat(masks),
                                bin_width_m, min_count);
  return {report, bins};
}

// ---------------------------------------------------------------------------
// CSV emission
// ---------------------------------------------------------------------------

void write_lobo_csv(const std::string& path, const BandImportanceReport& report) {
  CsvWriter csv(path);
  csv.header({"band", "band_name", "delta_rmse_m", "rank", "baseline_rmse_m"});
  for (const auto& row : report.rows) {
    csv.cell(row.band);
    csv.cell(row.band_name);
    csv.cell(row.delta_rmse_m);
    csv.cell(row.rank);
    csv.cell(report.baseline_rmse_m);
    csv.end_row();
  }
}

void write_feature_corr_csv(const std::string& path, const std::string& tile_id,
                            const std::vector<FeatureCorrRow>& rows, bool append) {
  std::ofstream probe;
  const bool exists = append && std::ifstream(path).good();
  std::ofstream out(path, append ? std::ios::app | std::ios::binary : std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  if (!exists) out << "tile,feature,mean,p90,corr_s\n";
  for (const auto& r : rows) {
    out << tile_id << "," << r.feature << "," << format_double(r.mean) << ","
        << format_double(r.p90) << "," << format_double(r.corr_s) << "\n";
  }
}

void write_depth_bins_csv(const std::string& path, const DepthBinReport& report) {
  CsvWriter csv(path);
  csv.header({"bin_lo_m", "bin_hi_m", "bin_center_m", "pixel_count", "mae_m", "rmse_m"});
  for (const auto& row : report.rows) {
    csv.cell(row.lo_m);
    csv.cell(row.hi_m);
    csv.cell(0.5 * (row.lo_m + row.hi_m));
    csv.cell(row.count);
    csv.cell(row.mae_m);
    csv.cell(row.rmse_m);
    csv.end_row();
  }
}

}  // namespace bathyscope
