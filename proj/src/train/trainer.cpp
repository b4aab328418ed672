#include "bathyscope/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "bathyscope/util/csv.hpp"
#include "bathyscope/util/rng.hpp"

namespace bathyscope {

void TrainSpec::validate() const {
  if (epochs < 1) throw std::invalid_argument("TrainSpec: epochs must be >= 1");
  if (lr0 < 0) throw std::invalid_argument("TrainSpec: lr0 must be >= 0");
  if (batch < 1) throw std::invalid_argument("TrainSpec: batch must be >= 1");
  if (crop < 8) throw std::invalid_argument("TrainSpec: crop must be >= 8");
  loss.validate();
}

std::tuple<torch::Tensor, torch::Tensor, torch::Tensor> augment(const torch::Tensor& x,
                                                                const torch::Tensor& y,
                                                                const torch::Tensor& mask,
                                                                uint64_t seed) {
  if (x.dim() != 3 || y.dim() != 2 || mask.dim() != 2)
    throw std::invalid_argument("augment: expected x [C,H,W], y [H,W], mask [H,W]");
  if (x.size(1) != y.size(0) || x.size(2) != y.size(1) || y.sizes() != mask.sizes())
    throw std::invalid_argument("augment: shapes disagree");

  Rng rng(seed);
  const int64_t k = rng.uniform_int(4);
  const bool hflip = rng.uniform() < 0.5;
  const bool vflip = rng.uniform() < 0.5;

  auto tx = x, ty = y, tm = mask;
  if (k) {
    tx = torch::rot90(tx, k, {1, 2});
    ty = torch::rot90(ty, k, {0, 1});
    tm = torch::rot90(tm, k, {0, 1});
  }
  if (hflip) {
    tx = torch::flip(tx, {2});
    ty = torch::flip(ty, {1});
    tm = torch::flip(tm, {1});
  }
  if (vflip) {
    tx = torch::flip(tx, {1});
    ty = torch::flip(ty, {0});
    tm = torch::flip(tm, {0});
  }
  return {tx.contiguous(), ty.contiguous(), tm.contiguous()};
}

namespace {

struct Sample {
  torch::Tensor x, y, m;
};

Sample prepare_sample(const SupervisionPair& p, const TrainSpec& spec, uint64_t seed) {
  auto x = p.x_norm;
  auto y = p.y;
  auto m = p.mask;
  Rng rng(Rng::derive(seed, 17));
  const int64_t h = x.size(1), w = x.size(2);
  if (spec.crop < h || spec.crop < w) {
    const int64_t ch = std::min(spec.crop, h), cw = std::min(spec.crop, w);
    const int64_t i0 = h > ch ? rng.uniform_int(h - ch + 1) : 0;
    const int64_t j0 = w > cw ? rng.uniform_int(w - cw + 1) : 0;
    using torch::indexing::Slice;
    x = x.index({Slice(), Slice(i0, i0 + ch), Slice(j0, j0 + cw)});
    y = y.index({Slice(i0, i0 + ch), Slice(j0, j0 + cw)});
    m = m.index({Slice(i0, i0 + ch), Slice(j0, j0 + cw)});
  }
  if (spec.augment) {
    auto [ax, ay, am] = augment(x, y, m, Rng::derive(seed, 23));
    return {ax, ay, am};
  }
  return {x.contiguous(), y.contiguous(), m.contiguous()};
}

}  // namespace

TrainResult train(const std::vector<SupervisionPair>& data, const NetConfig& net_config,
                  const TrainSpec& spec, const std::vector<SupervisionPair>* val,
                  const std::string& checkpoint_dir) {
  spec.validate();
  if (data.empty()) throw std::invalid_argument("train: dataset is empty");

  auto model = ModelHandle::build(net_config);
  torch::manual_seed(static_cast<uint64_t>(spec.seed));

  auto opts = torch::optim::AdamOptions(spec.lr0).betas({0.9, 0.999}).weight_decay(0.0);
  torch::optim::Adam optim(model.net()->parameters(), opts);

  const int64_t n = static_cast<int64_t>(data.size());
  const int64_t steps_per_epoch = (n + spec.batch - 1) / spec.batch;
  const int64_t total_steps = spec.epochs * steps_per_epoch;

  std::vector<EpochStat> history;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<torch::Tensor> best_params;
  int64_t step = 0;

  if (!checkpoint_dir.empty()) std::filesystem::create_directories(checkpoint_dir);

  for (int64_t epoch = 0; epoch < spec.epochs; ++epoch) {
    model.net()->train();
    std::vector<int64_t> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(Rng::derive(static_cast<uint64_t>(spec.seed), 1000 + static_cast<uint64_t>(epoch)));
    for (int64_t i = n - 1; i > 0; --i)
      std::swap(order[static_cast<size_t>(i)],
                order[static_cast<size_t>(shuffle_rng.uniform_int(i + 1))]);

    double epoch_loss = 0.0;
    double last_lr = spec.lr0;
    int64_t batches = 0;

    for (int64_t at = 0; at < n; at += spec.batch, ++step) {
      const double lr =
          0.5 * spec.lr0 * (1.0 + std::cos(M_PI * static_cast<double>(step) / total_steps));
      for (auto& group : optim.param_groups())
        static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
      last_lr = lr;

      std::vector<torch::Tensor> xs, ys, ms;
      for (int64_t b = 0; b < spec.batch && at + b < n; ++b) {
        const auto& pair = data[static_cast<size_t>(order[static_cast<size_t>(at + b)])];
        auto s = prepare_sample(
            pair, spec,
            Rng::derive(static_cast<uint64_t>(spec.seed),
                        2000 + static_cast<uint64_t>(epoch) * 65536 + static_cast<uint64_t>(at + b)));
        xs.push_back(s.x);
        ys.push_back(s.y);
        ms.push_back(s.m);
      }
      auto xb = torch::stack(xs);
      auto yb = torch::stack(ys);
      auto mb = torch::stack(ms);

      optim.zero_grad();
      auto pred = model.net()->forward(xb).squeeze(1);
      torch::Tensor loss;
      if (spec.loss.kind == LossKind::kBwRmse) {
        std::vector<torch::Tensor> ws;
        for (const auto& m : ms)
          ws.push_back(boundary_weights(m, spec.loss).w.to(torch::kFloat32));
        loss = bw_rmse(pred, yb, mb, torch::stack(ws), spec.loss.eps);
      } else if (spec.loss.kind == LossKind::kMaskedMae) {
        loss = masked_mae(pred, yb, mb, spec.loss.eps);
      } else {
        loss = masked_rmse(pred, yb, mb, spec.loss.eps);
      }

      const double lval = loss.item<double>();
      if (!std::isfinite(lval)) {
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                 ", step " + std::to_string(step) + " (lr=" + std::to_string(lr) +
                                 ")");
      }
      loss.backward();
      optim.step();
      epoch_loss += lval;
      ++batches;
    }

    history.push_back({epoch, epoch_loss / std::max<int64_t>(1, batches), last_lr});

    if (!checkpoint_dir.empty()) {
      save_checkpoint(model, checkpoint_dir + "/epoch_" + std::to_string(epoch) + ".pt");
    }
    if (val && !val->empty()) {
      auto report = evaluate(model, *val, (*val)[0].d_max);
      if (report.rmse_m < best_val) {
        best_val = report.rmse_m;
        best_params.clear();
        for (const auto& p : model.net()->parameters())
          best_params.push_back(p.detach().clone());
        if (!checkpoint_dir.empty()) save_checkpoint(model, checkpoint_dir + "/best.pt");
      }
    }
  }

  if (!best_params.empty()) {
    torch::NoGradGuard guard;
    auto params = model.net()->parameters();
    for (size_t i = 0; i < params.size(); ++i) params[i].copy_(best_params[i]);
  }
  model.net()->eval();

  TrainResult result{std::move(model), std::move(history)};
  result.best_val_rmse_m = std::isfinite(best_val) ? best_val : 0.0;
  return result;
}

torch::Tensor infer_padded(const ModelHandle& model, const torch::Tensor& x_chw, int64_t pad) {
  return model.infer_padded(x_chw, pad);
}

EvalReport evaluate(const DepthPredictor& model, const std::vector<SupervisionPair>& data,
                    double d_max) {
  if (data.empty()) throw std::invalid_argument("evaluate: dataset is empty");

  double se = 0.0, ae = 0.0, ysum = 0.0;
  int64_t npix = 0;
  std::vector<std::pair<torch::Tensor, torch::Tensor>> cached;  // (pred, tile) errors
  for (const auto& tile : data) {
    auto pred = model.predict(tile.x_norm).to(torch::kFloat64);
    auto y = tile.y.to(torch::kFloat64);
    auto m = tile.mask.to(torch::kFloat64);
    se += ((pred - y).pow(2) * m).sum().item<double>();
    ae += ((pred - y).abs() * m).sum().item<double>();
    ysum += (y * m).sum().item<double>();
    npix += static_cast<int64_t>(m.sum().item<double>());
    cached.emplace_back(pred, y);
  }
  if (npix == 0) throw std::runtime_error("evaluate: zero valid pixels");

  const double ymean = ysum / static_cast<double>(npix);
  double ss_tot = 0.0;
  for (size_t i = 0; i < data.size(); ++i) {
    auto m = data[i].mask.to(torch::kFloat64);
    ss_tot += ((cached[i].second - ymean).pow(2) * m).sum().item<double>();
  }

  EvalReport r;
  r.n_pixels = npix;
  r.rmse_m = to_meters(std::sqrt(se / static_cast<double>(npix)), d_max);
  r.mae_m = to_meters(ae / static_cast<double>(npix), d_max);
  r.r2 = ss_tot > 0 ? 1.0 - se / ss_tot : (se == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity());
  return r;
}

void write_history_csv(const std::string& path, const std::vector<EpochStat>& history) {
  CsvWriter csv(path);
  csv.header({"epoch", "loss", "lr"});
  for (const auto& h : history) {
    csv.cell(h.epoch);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9f", h.loss);
    csv.cell(std::string(buf));
    std::snprintf(buf, sizeof(buf), "%.9g", h.lr);
    csv.cell(std::string(buf));
    csv.end_row();
  }
}

}  // namespace bathyscope
