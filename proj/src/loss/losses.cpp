#include "bathyscope/loss/losses.hpp"

#include <stdexcept>

#include "bathyscope/loss/edt.hpp"

namespace bathyscope {

namespace {

void check_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  if (a.sizes() != b.sizes()) throw std::invalid_argument(std::string(what) + ": shapes differ");
}

}  // namespace

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "rmse") return LossKind::kMaskedRmse;
  if (s == "mae") return LossKind::kMaskedMae;
  if (s == "bw_rmse") return LossKind::kBwRmse;
  throw std::invalid_argument("unknown loss.kind '" + s + "' (expected rmse|mae|bw_rmse)");
}

std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::kMaskedRmse: return "rmse";
    case LossKind::kMaskedMae: return "mae";
    case LossKind::kBwRmse: return "bw_rmse";
  }
  return "?";
}

DecayKind decay_kind_from_string(const std::string& s) {
  if (s == "linear") return DecayKind::kLinear;
  if (s == "exp") return DecayKind::kExp;
  throw std::invalid_argument("unknown loss.decay '" + s + "' (expected linear|exp)");
}

std::string to_string(DecayKind k) {
  return k == DecayKind::kLinear ? "linear" : "exp";
}

void LossSpec::validate() const {
  if (!(d_min < d_max_dist))
    throw std::invalid_argument("LossSpec: d_min must be < d_max_dist");
  if (!(eps > 0)) throw std::invalid_argument("LossSpec: eps must be > 0");
}

WeightField boundary_weights(const torch::Tensor& mask, const LossSpec& spec) {
  spec.validate();
  auto d = edt(mask);
  auto dp = torch::clamp(d, spec.d_min, spec.d_max_dist);
  auto u = (dp - spec.d_min) / (spec.d_max_dist - spec.d_min);
  torch::Tensor wt = spec.decay == DecayKind::kLinear ? 1.0 - u : torch::exp(-u);
  const double lo = wt.min().item<double>();
  const double hi = wt.max().item<double>();
  torch::Tensor w;
  if (hi - lo <= 0.0) {
    w = torch::ones_like(wt);
  } else {
    w = 1.0 + (wt - lo) / (hi - lo);
  }
  return {w};
}

torch::Tensor masked_rmse(const torch::Tensor& pred, const torch::Tensor& target,
                          const torch::Tensor& mask, double eps, bool* no_supervision) {
  check_same_shape(pred, target, "masked_rmse");
  check_same_shape(pred, mask, "masked_rmse");
  auto m = mask.to(pred.dtype());
  auto diff = pred - target;
  auto num = (m * diff * diff).sum();
  auto den = m.sum() + eps;
  if (no_supervision) *no_supervision = mask.sum().item<double>() == 0.0;
  return (num / den).sqrt();
}

torch::Tensor masked_mae(const torch::Tensor& pred, const torch::Tensor& target,
                         const torch::Tensor& mask, double eps, bool* no_supervision) {
  check_same_shape(pred, target, "masked_mae");
  check_same_shape(pred, mask, "masked_mae");
  auto m = mask.to(pred.dtype());
  auto num = (m * (pred - target).abs()).sum();
  auto den = m.sum() + eps;
  if (no_supervision) *no_supervision = mask.sum().item<double>() == 0.0;
  return num / den;
}

torch::Tensor bw_rmse(const torch::Tensor& pred, const torch::Tensor& target,
                      const torch::Tensor& mask, const torch::Tensor& weights, double eps,
                      bool* no_supervision) {
  check_same_shape(pred, target, "bw_rmse");
  check_same_shape(pred, mask, "bw_rmse");
  check_same_shape(pred, weights, "bw_rmse");
  auto m = mask.to(pred.dtype());
  auto w = weights.to(pred.dtype());
  auto diff = pred - target;
  auto num = (w * m * diff * diff).sum();
  auto den = (w * m).sum() + eps;
  if (no_supervision) *no_supervision = mask.sum().item<double>() == 0.0;
  return (num / den).sqrt();
}

torch::Tensor compute_loss(const LossSpec& spec, const torch::Tensor& pred,
                           const torch::Tensor& target, const torch::Tensor& mask) {
  switch (spec.kind) {
    case LossKind::kMaskedRmse: return masked_rmse(pred, target, mask, spec.eps);
    case LossKind::kMaskedMae: return masked_mae(pred, target, mask, spec.eps);
    case LossKind::kBwRmse: {
      auto wf = boundary_weights(mask, spec);
      return bw_rmse(pred, target, mask, wf.w.to(pred.dtype()), spec.eps);
    }
  }
  throw std::logic_error("compute_loss: unreachable");
}

}  // namespace bathyscope
