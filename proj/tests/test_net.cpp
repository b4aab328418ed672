#include <doctest.h>
#include <torch/torch.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "bathyscope/loss/losses.hpp"
#include "bathyscope/net/model.hpp"
#include "support/oracles.hpp"

using namespace bathyscope;

namespace {

NetConfig probe_config(AttentionVariant v, int64_t patch = 1, int64_t window = 8) {
  auto cfg = NetConfig::desk();
  cfg.variant = v;
  cfg.patch = patch;
  cfg.window = window;
  cfg.dropout = 0.0;
  cfg.seed = 42;
  return cfg;
}

}  // namespace

TEST_CASE("build determinism: same config and seed, same checksum") {
  auto cfg = NetConfig::desk();
  cfg.seed = 9;
  auto a = ModelHandle::build(cfg);
  auto b = ModelHandle::build(cfg);
  CHECK(a.parameter_checksum() == b.parameter_checksum());
  CHECK(a.parameter_count() == b.parameter_count());

  cfg.seed = 10;
  auto c = ModelHandle::build(cfg);
  CHECK(a.parameter_checksum() != c.parameter_checksum());
}

TEST_CASE("variant parameter ordering: self_cross > self_only and > cross_only") {
  auto self_only = ModelHandle::build(probe_config(AttentionVariant::kSelfOnly));
  auto cross_only = ModelHandle::build(probe_config(AttentionVariant::kCrossOnly));
  auto self_cross = ModelHandle::build(probe_config(AttentionVariant::kSelfCross));
  CHECK(self_cross.parameter_count() > self_only.parameter_count());
  CHECK(self_cross.parameter_count() > cross_only.parameter_count());
}

TEST_CASE("forward maps 3x64x64 to 64x64 inside [0,1] for every variant") {
  for (auto v : {AttentionVariant::kCrossOnly, AttentionVariant::kSelfOnly,
                 AttentionVariant::kSelfCross}) {
    auto model = ModelHandle::build(probe_config(v, 4));
    torch::manual_seed(1);
    auto x = torch::rand({3, 64, 64});
    auto y = model.forward(x);
    CHECK(y.sizes() == torch::IntArrayRef({64, 64}));
    CHECK(y.min().item<float>() >= 0.0f);
    CHECK(y.max().item<float>() <= 1.0f);
    // inference determinism
    CHECK(torch::equal(y, model.forward(x)));
  }
}

TEST_CASE("forward pads odd sizes internally and rejects bad channel counts") {
  auto model = ModelHandle::build(probe_config(AttentionVariant::kCrossOnly, 1));
  auto y = model.forward(torch::rand({3, 50, 70}));
  CHECK(y.sizes() == torch::IntArrayRef({50, 70}));
  CHECK_THROWS_AS(model.forward(torch::rand({4, 64, 64})), std::invalid_argument);
}

TEST_CASE("attend_skip: cross variants demand context") {
  auto model = ModelHandle::build(probe_config(AttentionVariant::kCrossOnly, 1));
  auto skip = torch::rand({1, 32, 16, 16});
  CHECK_THROWS_AS(model.attend_skip(0, skip, std::nullopt), std::invalid_argument);
}

TEST_CASE("attend_skip: zero context reduces cross_only to the residual path") {
  auto model = ModelHandle::build(probe_config(AttentionVariant::kCrossOnly, 1));
  torch::manual_seed(3);
  auto skip = torch::rand({1, 32, 16, 16});
  auto ctx = torch::zeros({1, 32, 16, 16});
  auto out = model.attend_skip(0, skip, ctx);
  CHECK(torch::equal(out, skip));
}

TEST_CASE("attend_skip: self_only ignores context entirely") {
  auto model = ModelHandle::build(probe_config(AttentionVariant::kSelfOnly, 1));
  torch::manual_seed(4);
  auto skip = torch::rand({1, 32, 16, 16});
  auto a = model.attend_skip(0, skip, torch::zeros({1, 32, 16, 16}));
  auto b = model.attend_skip(0, skip, torch::rand({1, 32, 16, 16}) * 100);
  auto c = model.attend_skip(0, skip, std::nullopt);
  CHECK(torch::equal(a, b));
  CHECK(torch::equal(a, c));
}

TEST_CASE("attend_skip: constant input stays constant under self attention") {
  auto model = ModelHandle::build(probe_config(AttentionVariant::kSelfOnly, 1));
  auto skip = torch::full({1, 32, 16, 16}, 0.37f);
  auto out = model.attend_skip(0, skip, std::nullopt);
  CHECK(out.sizes() == skip.sizes());
  const auto spread = (out.amax({2, 3}) - out.amin({2, 3})).abs().max().item<float>();
  CHECK(spread < 1e-5f);
}

TEST_CASE("attend_skip: windows do not mix in a single self-attention layer") {
  // window 8 on a 16x16 skip -> 4 windows; perturbing one window leaves the
  // others bit-identical
  auto model = ModelHandle::build(probe_config(AttentionVariant::kSelfOnly, 1, 8));
  torch::manual_seed(5);
  auto skip = torch::rand({1, 32, 16, 16});
  auto base = model.attend_skip(0, skip, std::nullopt);

  auto bumped = skip.clone();
  bumped.index_put_({0, torch::indexing::Slice(), torch::indexing::Slice(0, 8),
                     torch::indexing::Slice(0, 8)},
                    skip.index({0, torch::indexing::Slice(), torch::indexing::Slice(0, 8),
                                torch::indexing::Slice(0, 8)}) +
                        1.0);
  auto moved = model.attend_skip(0, skip + 0.0, std::nullopt);
  auto out = model.attend_skip(0, bumped, std::nullopt);

  using torch::indexing::Slice;
  // untouched windows identical
  CHECK(torch::equal(out.index({0, Slice(), Slice(8, 16), Slice(8, 16)}),
                     base.index({0, Slice(), Slice(8, 16), Slice(8, 16)})));
  CHECK(torch::equal(out.index({0, Slice(), Slice(0, 8), Slice(8, 16)}),
                     base.index({0, Slice(), Slice(0, 8), Slice(8, 16)})));
  // perturbed window changed
  CHECK_FALSE(torch::equal(out.index({0, Slice(), Slice(0, 8), Slice(0, 8)}),
                           base.index({0, Slice(), Slice(0, 8), Slice(0, 8)})));
  CHECK(torch::equal(moved, base));
}

TEST_CASE("activations: channel counts and purity") {
  auto model = ModelHandle::build(probe_config(AttentionVariant::kCrossOnly, 4));
  torch::manual_seed(6);
  auto x = torch::rand({3, 64, 64});

  auto acts = model.activations(x, "last_decoder_block");
  CHECK(acts.size(0) == model.config().unet_filters[0]);
  CHECK(acts.size(1) == 64);
  CHECK(model.channel_count("last_decoder_block") == model.config().unet_filters[0]);
  CHECK(model.channel_count("bottleneck") == model.config().unet_filters.back());
  CHECK(torch::equal(acts, model.activations(x, "last_decoder_block")));
  CHECK_THROWS_AS(model.activations(x, "not_a_layer"), std::invalid_argument);

  auto names = model.named_layers();
  CHECK(std::find(names.begin(), names.end(), "last_decoder_block") != names.end());
  CHECK(std::find(names.begin(), names.end(), "bottleneck") != names.end());
}

TEST_CASE("zero input gives spatially constant encoder activations") {
  auto model = ModelHandle::build(probe_config(AttentionVariant::kCrossOnly, 4));
  auto x = torch::zeros({3, 64, 64});
  for (const auto& name : {"enc0", "enc1", "enc2", "bottleneck"}) {
    auto acts = model.activations(x, name);
    const auto spread = (acts.amax({1, 2}) - acts.amin({1, 2})).abs().max().item<float>();
    INFO(name);
    CHECK(spread < 1e-6f);
  }
}

TEST_CASE("channel ablation changes only what depends on the channel") {
  auto model = ModelHandle::build(probe_config(AttentionVariant::kCrossOnly, 4));
  torch::manual_seed(7);
  auto x = torch::rand({3, 64, 64});
  auto base = model.forward(x);

  // ablating a channel of a trained-from-init model usually changes the head
  bool any_changed = false;
  const int64_t k = model.channel_count("last_decoder_block");
  for (int64_t c = 0; c < k; ++c) {
    auto ablated = model.forward_with_channel_ablated(x, "last_decoder_block", c);
    CHECK(ablated.sizes() == base.sizes());
    if (!torch::equal(ablated, base)) any_changed = true;
  }
  CHECK(any_changed);
  CHECK_THROWS_AS(model.forward_with_channel_ablated(x, "last_decoder_block", k),
                  std::out_of_range);

  // ablating an all-zero channel is a no-op: zero input has constant
  // encoder maps; pick a channel whose activation is exactly zero if any
  auto acts = model.activations(torch::zeros({3, 64, 64}), "enc0");
  for (int64_t c = 0; c < acts.size(0); ++c) {
    if (acts[c].abs().max().item<float>() == 0.0f) {
      auto a = model.forward_with_channel_ablated(torch::zeros({3, 64, 64}), "enc0", c);
      auto b = model.forward(torch::zeros({3, 64, 64}));
      CHECK(torch::equal(a, b));
      break;
    }
  }
}

TEST_CASE("gradient of the masked loss matches finite differences") {
  auto cfg = probe_config(AttentionVariant::kSelfCross, 4);
  cfg.unet_filters = {4, 8, 12, 16};
  cfg.vit_dims = {16, 8, 4};
  cfg.heads = 2;
  auto model = ModelHandle::build(cfg);
  model.to_double();
  model.net()->eval();  // dropout off; autograd still live

  torch::manual_seed(8);
  auto x = torch::rand({1, 3, 16, 16}, torch::kFloat64);
  auto target = torch::rand({1, 16, 16}, torch::kFloat64);
  auto mask = oracles::random_mask(16, 16, 12, 0.7).to(torch::kFloat64).unsqueeze(0);

  auto params = model.net()->parameters();
  // sample a few parameters spread over the network
  for (size_t pi : {size_t{0}, params.size() / 2, params.size() - 1}) {
    auto loss_fn = [&]() {
      auto pred = model.net()->forward(x).squeeze(1);
      return masked_rmse(pred, target, mask);
    };
    model.net()->zero_grad();
    auto loss = loss_fn();
    loss.backward();
    auto grad = params[pi].grad().reshape({-1});

    auto flat = params[pi].reshape({-1});
    const int64_t idx = flat.numel() / 2;
    const double orig = flat[idx].item<double>();
    const double h = 1e-5 * (1.0 + std::fabs(orig));
    {
      torch::NoGradGuard g;
      flat[idx] = orig + h;
    }
    const double fp = loss_fn().item<double>();
    {
      torch::NoGradGuard g;
      flat[idx] = orig - h;
    }
    const double fm = loss_fn().item<double>();
    {
      torch::NoGradGuard g;
      flat[idx] = orig;
    }
    const double fd = (fp - fm) / (2 * h);
    const double analytic = grad[idx].item<double>();
    const double rel = std::fabs(analytic - fd) / std::max({std::fabs(analytic), std::fabs(fd), 1e-8});
    CHECK(rel < 1e-3);
  }
}

TEST_CASE("checkpoints round-trip parameters and config") {
  auto cfg = probe_config(AttentionVariant::kSelfCross, 4);
  cfg.seed = 77;
  auto model = ModelHandle::build(cfg);
  const auto path =
      (std::filesystem::temp_directory_path() / "bathyscope_test" / "ckpt.pt").string();
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  save_checkpoint(model, path);
  auto loaded = load_checkpoint(path);
  CHECK(loaded.parameter_checksum() == model.parameter_checksum());
  CHECK(loaded.config().seed == 77);
  CHECK(to_string(loaded.config().variant) == "self_cross");

  torch::manual_seed(1);
  auto x = torch::rand({3, 64, 64});
  CHECK(torch::equal(loaded.forward(x), model.forward(x)));

  CHECK_THROWS_AS(load_checkpoint("/nonexistent/elsewhere.pt"), std::runtime_error);
}

TEST_CASE("paper-scale configuration still validates and builds layers") {
  NetConfig cfg;  // paper defaults: {64,128,256,512}, dims {512,256,128}
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.unet_filters.size() == 4);
  CHECK(cfg.vit_dims.size() == 3);
  // a too-short vit_dims list is rejected
  cfg.vit_dims = {512, 256};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
