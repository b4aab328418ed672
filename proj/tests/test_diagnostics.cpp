#include <doctest.h>
#include <torch/torch.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "bathyscope/diag/diagnostics.hpp"
#include "bathyscope/synth/scene.hpp"
#include "support/oracles.hpp"

using namespace bathyscope;

namespace {

// Predictor that reads one band only; other bands are irrelevant by
// construction, so their LOBO deltas must be exactly zero.
struct SingleBandModel : DepthPredictor {
  int64_t band = 1;
  torch::Tensor predict(const torch::Tensor& x) const override {
    return torch::clamp(1.0 - x[band], 0.0, 1.0);
  }
};

SupervisionPair synth_pair(uint64_t seed, double d_max = 5.0, bool shoreline = false) {
  SceneSpec scene;
  scene.height = 64;
  scene.width = 64;
  scene.depth_min = 0.2;
  scene.depth_max = 5.0;
  scene.mode = DepthMode::kSmoothField;
  scene.shoreline = shoreline;
  scene.seed = seed;
  RegionSpec region{scene, OpticsProfile::defaults()};
  PreprocessOptions opts;
  opts.d_max = d_max;
  auto tile = make_tile(region, 0);
  return make_supervision_pair(tile.bands, tile.depth, opts, "t" + std::to_string(seed));
}

}  // namespace

TEST_CASE("lobo: unused bands have exactly zero delta") {
  SingleBandModel model;
  std::vector<SupervisionPair> data{synth_pair(1), synth_pair(2)};
  auto report = lobo(model, data, 5.0);
  REQUIRE(report.rows.size() == 3);
  CHECK(report.rows[0].delta_rmse_m == 0.0);  // B0 untouched by the model
  CHECK(report.rows[2].delta_rmse_m == 0.0);  // B2 untouched
  CHECK(report.rows[1].delta_rmse_m != 0.0);
  CHECK(report.rows[1].rank == 1);
  // ranks are a permutation of 1..C
  std::vector<int64_t> ranks;
  for (const auto& r : report.rows) ranks.push_back(r.rank);
  std::sort(ranks.begin(), ranks.end());
  CHECK((ranks == std::vector<int64_t>{1, 2, 3}));
}

TEST_CASE("lobo: a band already constant at its fill value changes nothing") {
  SingleBandModel model;
  auto pair = synth_pair(3);
  // make band 0 constant: its valid-pixel mean equals that constant
  pair.x_norm[0] = torch::full_like(pair.x_norm[0], 0.25f);
  auto report = lobo(model, {pair}, 5.0);
  CHECK(report.rows[0].delta_rmse_m == 0.0);
}

TEST_CASE("lobo supports dataset-global fills") {
  SingleBandModel model;
  std::vector<SupervisionPair> data{synth_pair(4), synth_pair(5)};
  auto per_tile = lobo(model, data, 5.0, false);
  auto global = lobo(model, data, 5.0, true);
  CHECK(per_tile.baseline_rmse_m == doctest::Approx(global.baseline_rmse_m));
  // unused bands stay exactly zero under either fill
  CHECK(global.rows[0].delta_rmse_m == 0.0);
  CHECK(global.rows[2].delta_rmse_m == 0.0);
}

TEST_CASE("feature maps: constant image has no structure") {
  auto x = torch::full({3, 16, 16}, 0.3f);
  auto f = feature_maps(x);
  CHECK(f.var.abs().max().item<double>() < 1e-12);
  CHECK(f.grad.abs().max().item<double>() < 1e-12);
  CHECK(f.lapvar.abs().max().item<double>() < 1e-12);
  CHECK(f.vis.mean().item<double>() == doctest::Approx(0.3).epsilon(1e-6));
  // equal bands give ratios ~ 1
  CHECK(f.r01.mean().item<double>() == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("feature maps: vertical step edge excites Grad and Var") {
  auto x = torch::full({3, 16, 16}, 0.2f);
  using torch::indexing::Slice;
  x.index_put_({Slice(), Slice(), Slice(8, 16)}, 0.8f);
  auto f = feature_maps(x);

  // Sobel response peaks on the step columns (7 and 8)
  auto grad_col = f.grad.mean(0);
  double peak = std::max(grad_col[7].item<double>(), grad_col[8].item<double>());
  CHECK(peak > 10 * grad_col[2].item<double>() + 1e-12);
  // hand value: |gx| = 0.6*4 across the step with reflect padding, gy = 0
  CHECK(grad_col[7].item<double>() == doctest::Approx(0.6 * 4.0).epsilon(1e-6));
  // windows straddling the edge have positive variance
  CHECK(f.var.mean(0)[7].item<double>() > 0.0);
  CHECK(f.var.mean(0)[1].item<double>() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("feature maps: ratio clipping bounds R01/R12") {
  auto x = torch::zeros({3, 4, 4});
  x[0] = torch::full({4, 4}, 1.0f);   // B0 = 1, B1 = 0 -> unclipped ratio 1/eps
  auto f = feature_maps(x, 7, 1.0, 10.0);
  CHECK(f.r01.max().item<double>() == doctest::Approx(10.0));
}

TEST_CASE("saliency correlations: self, constant and affine invariance") {
  torch::manual_seed(5);
  auto x = torch::rand({3, 24, 24});
  auto f = feature_maps(x);
  auto sal = f.vis.clone();  // saliency equal to VIS
  auto omega = torch::ones({24, 24}, torch::kBool);

  auto rows = saliency_correlations(f, sal, omega);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].feature == "VIS");
  CHECK(rows[0].corr_s == doctest::Approx(1.0).epsilon(1e-6));
  for (const auto& r : rows) {
    CHECK(r.corr_s <= 1.0 + 1e-9);
    CHECK(r.corr_s >= -1.0 - 1e-9);
  }

  // constant feature: zero correlation through the eps guard
  FeatureMaps constant = f;
  constant.grad = torch::full_like(f.grad, 0.7);
  auto rows2 = saliency_correlations(constant, sal, omega);
  CHECK(rows2[4].feature == "Grad");
  CHECK(rows2[4].corr_s == doctest::Approx(0.0).epsilon(1e-9));

  // affine rescaling of a feature leaves corr_s unchanged (a > 0)
  FeatureMaps scaled = f;
  scaled.var = f.var * 3.7 + 0.2;
  auto rows3 = saliency_correlations(scaled, sal, omega);
  CHECK(rows3[3].feature == "Var");
  CHECK(rows3[3].corr_s == doctest::Approx(rows[3].corr_s).epsilon(1e-6));

  CHECK_THROWS_AS(saliency_correlations(f, sal, torch::zeros({24, 24}, torch::kBool)),
                  std::invalid_argument);
}

TEST_CASE("qc_gate: no land means nothing is gated") {
  torch::manual_seed(6);
  auto x = torch::rand({3, 32, 32});
  auto f = feature_maps(x);
  auto land = torch::zeros({32, 32});
  auto gate = qc_gate(f, land);
  CHECK(gate.sum().item<int64_t>() == 0);
}

TEST_CASE("qc_gate: dark calm water stays clear") {
  auto x = torch::full({3, 32, 32}, 0.1f);
  auto f = feature_maps(x);
  auto land = torch::zeros({32, 32});
  land.index_put_({torch::indexing::Slice(), torch::indexing::Slice(0, 4)}, 1.0f);
  auto gate = qc_gate(f, land);
  CHECK(gate.sum().item<int64_t>() == 0);
}

TEST_CASE("qc_gate flags planted nearshore speckles") {
  // dark water, land strip, bright speckles near the shoreline
  auto x = torch::full({3, 48, 48}, 0.15f);
  auto land = torch::zeros({48, 48});
  using torch::indexing::Slice;
  land.index_put_({Slice(), Slice(0, 6)}, 1.0f);

  std::vector<std::pair<int64_t, int64_t>> speckles{{5, 10}, {13, 9}, {21, 12}, {30, 8}, {40, 14}};
  for (auto [i, j] : speckles)
    for (int64_t b = 0; b < 3; ++b) x[b][i][j] = 0.9f;

  auto f = feature_maps(x);
  auto gate = qc_gate(f, land, {0.95, 0.95, 20.0});
  int64_t hit = 0;
  for (auto [i, j] : speckles) hit += gate[i][j].item<uint8_t>();
  CHECK(hit >= 4);  // >= 80% recall on the planted speckles

  // subset property: gated pixels are all above the VIS threshold
  auto water = land == 0;
  auto vis_vals = f.vis.masked_select(water);
  auto sorted = std::get<0>(vis_vals.reshape({-1}).sort());
  const double thr =
      sorted[static_cast<int64_t>(std::ceil(0.95 * vis_vals.numel())) - 1].item<double>();
  auto over = (f.vis > thr).to(torch::kUInt8);
  CHECK(((gate <= over).all().item<bool>()));
}

TEST_CASE("depth bins: counts conserve and MAE matches hand computation") {
  // six pixels across two bins
  auto truth = torch::tensor({{0.1f, 0.2f, 0.3f, 1.1f, 1.2f, 1.3f}});
  auto pred = torch::tensor({{0.2f, 0.2f, 0.5f, 1.0f, 1.5f, 1.0f}});
  auto mask = torch::ones({1, 6});
  auto report = depth_binned_eval(pred, truth, mask, 1.0, 2);
  REQUIRE(report.rows.size() == 2);
  CHECK(report.rows[0].count == 3);
  CHECK(report.rows[1].count == 3);
  CHECK(*report.rows[0].mae_m == doctest::Approx((0.1 + 0.0 + 0.2) / 3).epsilon(1e-6));
  CHECK(*report.rows[1].mae_m == doctest::Approx((0.1 + 0.3 + 0.3) / 3).epsilon(1e-6));
  CHECK(report.rows[0].rmse_m.has_value());  // count 3 >= min_count 2

  int64_t total = 0;
  for (const auto& r : report.rows) total += r.count;
  CHECK(total == 6);
}

TEST_CASE("depth bins: single-bin and perfect-prediction cases") {
  auto truth = torch::full({4, 4}, 2.3f);
  auto pred = truth.clone();
  auto mask = torch::ones({4, 4});
  auto report = depth_binned_eval(pred, truth, mask, 0.25, 50);
  int64_t populated = 0;
  for (const auto& r : report.rows)
    if (r.count > 0) {
      ++populated;
      CHECK(*r.mae_m == 0.0);
      CHECK_FALSE(r.rmse_m.has_value());  // 16 < 50
    }
  CHECK(populated == 1);
}

TEST_CASE("cross_region_eval propagates and rejects empty datasets") {
  SingleBandModel model;
  std::vector<SupervisionPair> data{synth_pair(7)};
  auto [eval_report, bins] = cross_region_eval(model, data, 5.0, 0.5, 10);
  CHECK(eval_report.n_pixels > 0);
  int64_t total = 0;
  for (const auto& r : bins.rows) total += r.count;
  CHECK(total == eval_report.n_pixels);

  CHECK_THROWS_AS(cross_region_eval(model, {}, 5.0), std::invalid_argument);
}

TEST_CASE("feature correlation table fixture keeps the schema") {
  // report-format fixture: six named features with bounded correlations
  std::vector<FeatureCorrRow> rows{{"R01", 0.8, 1.0, -0.747}, {"R12", 1.4, 2.0, -0.897},
                                   {"VIS", 0.3, 0.5, -0.148}, {"Grad", 0.1, 0.2, -0.417},
                                   {"Var", 0.01, 0.02, -0.278}, {"LapVar", 0.0, 0.0, -0.00187}};
  for (const auto& r : rows) {
    CHECK(r.corr_s >= -1.0);
    CHECK(r.corr_s <= 1.0);
  }
  const auto path =
      (std::filesystem::temp_directory_path() / "bathyscope_test" / "features.csv").string();
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  std::filesystem::remove(path);
  write_feature_corr_csv(path, "349", rows, true);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "tile,feature,mean,p90,corr_s");
  int n = 0;
  while (std::getline(in, line)) ++n;
  CHECK(n == 6);
}
