#include <doctest.h>
#include <torch/torch.h>

#include "bathyscope/loss/edt.hpp"
#include "bathyscope/loss/losses.hpp"
#include "support/oracles.hpp"

using namespace bathyscope;

namespace {

torch::Tensor t2(const std::vector<std::vector<double>>& rows) {
  const int64_t h = static_cast<int64_t>(rows.size());
  const int64_t w = static_cast<int64_t>(rows[0].size());
  auto t = torch::empty({h, w}, torch::kFloat64);
  for (int64_t i = 0; i < h; ++i)
    for (int64_t j = 0; j < w; ++j) t[i][j] = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
  return t;
}

}  // namespace

TEST_CASE("masked_rmse two-pixel hand case") {
  auto pred = torch::tensor({0.5, 0.2}, torch::kFloat64);
  auto target = torch::tensor({0.3, 0.2}, torch::kFloat64);
  auto mask = torch::tensor({1.0, 1.0}, torch::kFloat64);
  CHECK(masked_rmse(pred, target, mask).item<double>() ==
        doctest::Approx(std::sqrt(0.04 / (2 + 1e-8))).epsilon(1e-12));
  CHECK(masked_rmse(pred, target, mask).item<double>() == doctest::Approx(0.14142).epsilon(1e-4));
  CHECK(masked_mae(pred, target, mask).item<double>() == doctest::Approx(0.1).epsilon(1e-7));
}

TEST_CASE("masked losses: identity and masking contract") {
  auto pred = torch::rand({8, 8}, torch::kFloat64);
  CHECK(masked_rmse(pred, pred, torch::ones_like(pred)).item<double>() == 0.0);
  CHECK(masked_mae(pred, pred, torch::ones_like(pred)).item<double>() == 0.0);

  // mask zeroes out the only erroneous pixel
  auto target = pred.clone();
  target[3][4] += 1.0;
  auto mask = torch::ones_like(pred);
  mask[3][4] = 0.0;
  CHECK(masked_rmse(pred, target, mask).item<double>() == 0.0);

  // all-zero mask: 0 plus warning flag
  bool flag = false;
  CHECK(masked_rmse(pred, target, torch::zeros_like(pred), 1e-8, &flag).item<double>() == 0.0);
  CHECK(flag);
}

TEST_CASE("unmasked pixels cannot influence any loss") {
  torch::manual_seed(3);
  auto pred = torch::rand({12, 12}, torch::kFloat64);
  auto target = torch::rand({12, 12}, torch::kFloat64);
  auto mask = oracles::random_mask(12, 12, 99, 0.5).to(torch::kFloat64);
  auto w = boundary_weights(mask, LossSpec{}).w;

  auto pred2 = pred + (1.0 - mask) * torch::rand({12, 12}, torch::kFloat64);
  CHECK(masked_rmse(pred, target, mask).item<double>() ==
        masked_rmse(pred2, target, mask).item<double>());
  CHECK(masked_mae(pred, target, mask).item<double>() ==
        masked_mae(pred2, target, mask).item<double>());
  CHECK(bw_rmse(pred, target, mask, w).item<double>() ==
        bw_rmse(pred2, target, mask, w).item<double>());
}

TEST_CASE("rmse dominates mae on random instances") {
  for (uint64_t s = 0; s < 40; ++s) {
    torch::manual_seed(s);
    auto pred = torch::rand({16, 16}, torch::kFloat64);
    auto target = torch::rand({16, 16}, torch::kFloat64);
    auto mask = oracles::random_mask(16, 16, s, 0.6).to(torch::kFloat64);
    const double rmse = masked_rmse(pred, target, mask).item<double>();
    const double mae = masked_mae(pred, target, mask).item<double>();
    CHECK(rmse >= mae);
    CHECK(rmse == doctest::Approx(oracles::brute_masked_rmse(pred, target, mask)).epsilon(1e-12));
    CHECK(mae == doctest::Approx(oracles::brute_masked_mae(pred, target, mask)).epsilon(1e-12));
  }
}

TEST_CASE("edt matches analytic 1x5 strip") {
  auto mask = torch::tensor({{0.0, 1.0, 1.0, 1.0, 0.0}}, torch::kFloat64);
  auto d = edt(mask);
  CHECK(d[0][0].item<double>() == 0.0);
  CHECK(d[0][1].item<double>() == 1.0);
  CHECK(d[0][2].item<double>() == 2.0);
  CHECK(d[0][3].item<double>() == 1.0);
  CHECK(d[0][4].item<double>() == 0.0);
}

TEST_CASE("edt: all-zero mask is identically zero") {
  auto d = edt(torch::zeros({6, 7}, torch::kFloat32));
  CHECK(d.abs().max().item<double>() == 0.0);
}

TEST_CASE("edt: all-ones mask has no finite distances") {
  auto d = edt(torch::ones({5, 5}, torch::kFloat32));
  CHECK(std::isinf(d.min().item<double>()));
}

TEST_CASE("edt equals brute force on random masks") {
  for (uint64_t s = 0; s < 30; ++s) {
    const int64_t h = 5 + static_cast<int64_t>(s % 28);
    const int64_t w = 5 + static_cast<int64_t>((3 * s) % 28);
    auto mask = oracles::random_mask(h, w, 1000 + s, s % 3 == 0 ? 0.95 : 0.7);
    auto got = edt_squared(mask);
    auto want = oracles::brute_force_edt_squared(mask);
    CHECK(torch::equal(got, want));
  }
}

TEST_CASE("boundary weights: linear hand case {0,1,2}") {
  // one row, distances after clipping are {0,1,2} with d_min=0, d_max_dist=2
  auto mask = torch::tensor({{0.0, 1.0, 1.0, 1.0, 1.0, 0.0}}, torch::kFloat64);
  LossSpec spec;
  spec.d_min = 0;
  spec.d_max_dist = 2;
  auto w = boundary_weights(mask, spec).w;
  // d = {0,1,2,2,1,0} -> w_tilde = {1,0.5,0,0,0.5,1} -> w = {2,1.5,1,1,1.5,2}
  CHECK(w[0][0].item<double>() == doctest::Approx(2.0));
  CHECK(w[0][1].item<double>() == doctest::Approx(1.5));
  CHECK(w[0][2].item<double>() == doctest::Approx(1.0));
  CHECK(w[0][3].item<double>() == doctest::Approx(1.0));
  CHECK(w[0][4].item<double>() == doctest::Approx(1.5));
  CHECK(w[0][5].item<double>() == doctest::Approx(2.0));
}

TEST_CASE("boundary weights: exponential decay hand case") {
  auto mask = torch::tensor({{0.0, 1.0, 1.0, 1.0, 1.0, 0.0}}, torch::kFloat64);
  LossSpec spec;
  spec.d_min = 0;
  spec.d_max_dist = 2;
  spec.decay = DecayKind::kExp;
  auto w = boundary_weights(mask, spec).w;
  // w_tilde = {1, e^-0.5, e^-1}; after min-max: w(0)=2, w(1)=1+(e^-0.5-e^-1)/(1-e^-1), w(2)=1
  const double e05 = std::exp(-0.5), e1 = std::exp(-1.0);
  const double w1 = 1.0 + (e05 - e1) / (1.0 - e1);
  CHECK(w[0][0].item<double>() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(w[0][1].item<double>() == doctest::Approx(w1).epsilon(1e-12));
  CHECK(w[0][2].item<double>() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("boundary weights: degenerate fields give w == 1") {
  LossSpec spec;
  // all-valid mask: no boundary, no upweighting
  auto w_all = boundary_weights(torch::ones({8, 8}, torch::kFloat32), spec).w;
  CHECK(w_all.min().item<double>() == 1.0);
  CHECK(w_all.max().item<double>() == 1.0);
}

TEST_CASE("boundary weights stay in [1,2] and decrease with distance") {
  for (uint64_t s = 0; s < 10; ++s) {
    auto mask = oracles::random_mask(24, 24, 555 + s, 0.8);
    LossSpec spec;
    auto w = boundary_weights(mask, spec).w;
    auto d = edt(mask);
    CHECK(w.min().item<double>() >= 1.0);
    CHECK(w.max().item<double>() <= 2.0);
    // monotone nonincreasing in clipped distance
    auto dflat = d.reshape({-1});
    auto wflat = w.reshape({-1});
    for (int64_t i = 0; i < dflat.numel(); ++i)
      for (int64_t j = 0; j < dflat.numel(); j += 37) {
        if (dflat[i].item<double>() <= dflat[j].item<double>())
          CHECK(wflat[i].item<double>() >= wflat[j].item<double>() - 1e-12);
      }
  }
}

TEST_CASE("bw_rmse with uniform weights is exactly masked_rmse") {
  for (uint64_t s = 0; s < 20; ++s) {
    torch::manual_seed(s);
    auto pred = torch::rand({16, 16}, torch::kFloat64);
    auto target = torch::rand({16, 16}, torch::kFloat64);
    auto mask = oracles::random_mask(16, 16, s, 0.6).to(torch::kFloat64);
    auto ones = torch::ones_like(pred);
    CHECK(bw_rmse(pred, target, mask, ones).item<double>() ==
          masked_rmse(pred, target, mask).item<double>());
  }
}

TEST_CASE("bw_rmse punishes boundary errors harder") {
  // equal-magnitude errors on equally many pixels; one configuration puts
  // them on weight-2 pixels, the other on weight-1 pixels
  auto mask = torch::ones({1, 8}, torch::kFloat64);
  auto w = t2({{2, 2, 2, 2, 1, 1, 1, 1}});
  auto target = torch::zeros({1, 8}, torch::kFloat64);
  auto pred_hi = t2({{0.5, 0.5, 0, 0, 0, 0, 0, 0}});
  auto pred_lo = t2({{0, 0, 0, 0, 0.5, 0.5, 0, 0}});
  CHECK(bw_rmse(pred_hi, target, mask, w).item<double>() >
        bw_rmse(pred_lo, target, mask, w).item<double>());
  CHECK(bw_rmse(target, target, mask, w).item<double>() == 0.0);
}

TEST_CASE("analytic gradients match central differences") {
  for (uint64_t s = 0; s < 12; ++s) {
    torch::manual_seed(100 + s);
    auto pred0 = torch::rand({8, 8}, torch::kFloat64);
    auto target = torch::rand({8, 8}, torch::kFloat64);
    auto mask = oracles::random_mask(8, 8, 7 + s, 0.7).to(torch::kFloat64);
    auto w = boundary_weights(mask, LossSpec{}).w;

    struct Case {
      const char* name;
      std::function<torch::Tensor(const torch::Tensor&)> f;
    };
    const std::vector<Case> cases{
        {"rmse", [&](const torch::Tensor& p) { return masked_rmse(p, target, mask); }},
        {"mae", [&](const torch::Tensor& p) { return masked_mae(p, target, mask); }},
        {"bw", [&](const torch::Tensor& p) { return bw_rmse(p, target, mask, w); }}};

    for (const auto& c : cases) {
      auto p = pred0.clone().requires_grad_(true);
      auto loss = c.f(p);
      loss.backward();
      auto analytic = p.grad().clone();
      auto fd = oracles::finite_difference_grad(
          [&](const torch::Tensor& q) { return c.f(q).item<double>(); }, pred0.clone(), 1e-6);
      const double denom = std::max(analytic.abs().max().item<double>(), 1e-12);
      const double rel = (analytic - fd).abs().max().item<double>() / denom;
      INFO(c.name);
      CHECK(rel < 1e-4);
    }
  }
}

TEST_CASE("to_meters scales by the depth cap") {
  CHECK(to_meters(0.1, 14.556) == doctest::Approx(1.4556).epsilon(1e-12));
  CHECK(to_meters(0.0, 14.556) == 0.0);
  CHECK(to_meters(1.0, 15.0) == 15.0);
}

TEST_CASE("loss spec validation") {
  LossSpec bad;
  bad.d_min = 5;
  bad.d_max_dist = 5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(loss_kind_from_string("huber"), std::invalid_argument);
  CHECK(loss_kind_from_string("bw_rmse") == LossKind::kBwRmse);
}
