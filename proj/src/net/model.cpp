#include "bathyscope/net/model.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "bathyscope/util/hash.hpp"

namespace bathyscope {
namespace detail {

namespace F = torch::nn::functional;

namespace {

int64_t norm_groups(int64_t c) {
  for (int64_t g : {8, 4, 2})
    if (c % g == 0) return g;
  return 1;
}

struct Windowed {
  torch::Tensor tokens;     // [B*nh*nw, wh*ww, D]
  torch::Tensor key_valid;  // [B*nh*nw, wh*ww] bool, undefined if all valid
  int64_t nh, nw, wh, ww, ht, wt, batch;
};

Windowed window_partition(const torch::Tensor& map, int64_t window) {
  const int64_t b = map.size(0), d = map.size(1), ht = map.size(2), wt = map.size(3);
  const int64_t wh = std::min(window, ht), ww = std::min(window, wt);
  const int64_t hp = (ht + wh - 1) / wh * wh, wp = (wt + ww - 1) / ww * ww;
  auto t = map;
  torch::Tensor key_valid;
  if (hp != ht || wp != wt) {
    t = F::pad(t, F::PadFuncOptions({0, wp - wt, 0, hp - ht}));
    auto valid = torch::zeros({1, 1, hp, wp}, torch::kBool);
    valid.index_put_({torch::indexing::Slice(), torch::indexing::Slice(),
                      torch::indexing::Slice(0, ht), torch::indexing::Slice(0, wt)},
                     true);
    key_valid = valid.view({1, 1, hp / wh, wh, wp / ww, ww})
                    .permute({0, 2, 4, 3, 5, 1})
                    .reshape({hp / wh * (wp / ww), wh * ww})
                    .repeat({b, 1});
  }
  const int64_t nh = hp / wh, nw = wp / ww;
  auto tokens = t.view({b, d, nh, wh, nw, ww})
                    .permute({0, 2, 4, 3, 5, 1})
                    .reshape({b * nh * nw, wh * ww, d});
  return {tokens, key_valid, nh, nw, wh, ww, ht, wt, b};
}

torch::Tensor window_unpartition(const torch::Tensor& tokens, const Windowed& geom, int64_t dim) {
  auto t = tokens.view({geom.batch, geom.nh, geom.nw, geom.wh, geom.ww, dim})
               .permute({0, 5, 1, 3, 2, 4})
               .reshape({geom.batch, dim, geom.nh * geom.wh, geom.nw * geom.ww});
  using torch::indexing::Slice;
  return t.index({Slice(), Slice(), Slice(0, geom.ht), Slice(0, geom.wt)});
}

// Relative position index for a wh x ww window into a (2*window-1)^2 table.
torch::Tensor relative_index(int64_t wh, int64_t ww, int64_t window) {
  const int64_t t = wh * ww;
  auto idx = torch::empty({t, t}, torch::kLong);
  auto acc = idx.accessor<int64_t, 2>();
  for (int64_t a = 0; a < t; ++a) {
    const int64_t ay = a / ww, ax = a % ww;
    for (int64_t b2 = 0; b2 < t; ++b2) {
      const int64_t by = b2 / ww, bx = b2 % ww;
      const int64_t dy = ay - by + window - 1;
      const int64_t dx = ax - bx + window - 1;
      acc[a][b2] = dy * (2 * window - 1) + dx;
    }
  }
  return idx;
}

torch::Tensor split_heads(const torch::Tensor& t, int64_t heads) {
  const int64_t n = t.size(0), tk = t.size(1), d = t.size(2);
  return t.view({n, tk, heads, d / heads}).permute({0, 2, 1, 3});
}

torch::Tensor merge_heads(const torch::Tensor& t) {
  const int64_t n = t.size(0), h = t.size(1), tk = t.size(2), dh = t.size(3);
  return t.permute({0, 2, 1, 3}).reshape({n, tk, h * dh});
}

torch::Tensor masked_scores(torch::Tensor scores, const torch::Tensor& key_valid) {
  if (!key_valid.defined()) return scores;
  // scores: [N, heads, T, T]; mask invalid keys everywhere
  auto mask = key_valid.unsqueeze(1).unsqueeze(2);  // [N,1,1,T]
  return scores.masked_fill(~mask, -1e9);
}

}  // namespace

// ---------------------------------------------------------------------------
// DoubleConv
// ---------------------------------------------------------------------------

DoubleConvImpl::DoubleConvImpl(int64_t in_ch, int64_t out_ch, double dropout) {
  conv1_ = register_module(
      "conv1", torch::nn::Conv2d(torch::nn::Conv2dOptions(in_ch, out_ch, 3).padding(1)));
  norm1_ = register_module("norm1", torch::nn::GroupNorm(norm_groups(out_ch), out_ch));
  conv2_ = register_module(
      "conv2", torch::nn::Conv2d(torch::nn::Conv2dOptions(out_ch, out_ch, 3).padding(1)));
  norm2_ = register_module("norm2", torch::nn::GroupNorm(norm_groups(out_ch), out_ch));
  drop_ = register_module("drop", torch::nn::Dropout2d(dropout));
}

torch::Tensor DoubleConvImpl::forward(const torch::Tensor& x) {
  auto h = torch::relu(norm1_(conv1_(x)));
  h = drop_(h);
  return torch::relu(norm2_(conv2_(h)));
}

// ---------------------------------------------------------------------------
// WindowSelfAttention
// ---------------------------------------------------------------------------

WindowSelfAttentionImpl::WindowSelfAttentionImpl(int64_t dim, int64_t heads, int64_t window,
                                                 double dropout)
    : dim_(dim), heads_(heads), window_(window) {
  qkv_ = register_module("qkv", torch::nn::Linear(dim, 3 * dim));
  proj_ = register_module("proj", torch::nn::Linear(dim, dim));
  attn_drop_ = register_module("attn_drop", torch::nn::Dropout(dropout));
  proj_drop_ = register_module("proj_drop", torch::nn::Dropout(dropout));
  const int64_t span = 2 * window - 1;
  rel_bias_table = register_parameter("rel_bias_table", torch::zeros({span * span, heads}));
  torch::nn::init::normal_(rel_bias_table, 0.0, 0.02);
}

torch::Tensor WindowSelfAttentionImpl::forward(const torch::Tensor& tokens,
                                               const torch::Tensor& rel_index,
                                               const torch::Tensor& key_valid) {
  const int64_t t = tokens.size(1);
  auto qkv = qkv_(tokens).chunk(3, -1);
  auto q = split_heads(qkv[0], heads_);
  auto k = split_heads(qkv[1], heads_);
  auto v = split_heads(qkv[2], heads_);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim_ / heads_));
  auto scores = torch::matmul(q, k.transpose(-2, -1)) * scale;  // [N,h,T,T]

  auto bias = rel_bias_table.index_select(0, rel_index.reshape(-1))
                  .view({t, t, heads_})
                  .permute({2, 0, 1})
                  .unsqueeze(0);
  scores = masked_scores(scores + bias, key_valid);
  auto attn = attn_drop_(torch::softmax(scores, -1));
  auto out = merge_heads(torch::matmul(attn, v));
  return proj_drop_(proj_(out));
}

// ---------------------------------------------------------------------------
// CrossWindowAttention
// ---------------------------------------------------------------------------

CrossWindowAttentionImpl::CrossWindowAttentionImpl(int64_t dim, int64_t heads, double dropout)
    : dim_(dim), heads_(heads) {
  kv_norm_ = register_module("kv_norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  q_proj_ = register_module("q_proj",
                            torch::nn::Linear(torch::nn::LinearOptions(dim, dim).bias(false)));
  k_proj_ = register_module("k_proj", torch::nn::Linear(dim, dim));
  v_proj_ = register_module("v_proj", torch::nn::Linear(dim, dim));
  gate_proj_ = register_module("gate_proj",
                               torch::nn::Linear(torch::nn::LinearOptions(dim, dim).bias(false)));
  out_proj_ = register_module("out_proj",
                              torch::nn::Linear(torch::nn::LinearOptions(dim, dim).bias(false)));
  attn_drop_ = register_module("attn_drop", torch::nn::Dropout(dropout));
}

torch::Tensor CrossWindowAttentionImpl::forward(const torch::Tensor& skip_tokens,
                                                const torch::Tensor& ctx_tokens,
                                                const torch::Tensor& key_valid) {
  auto kv = kv_norm_(skip_tokens);
  auto q = split_heads(q_proj_(ctx_tokens), heads_);
  auto k = split_heads(k_proj_(kv), heads_);
  auto v = split_heads(v_proj_(kv), heads_);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim_ / heads_));
  auto scores = masked_scores(torch::matmul(q, k.transpose(-2, -1)) * scale, key_valid);
  auto attn = attn_drop_(torch::softmax(scores, -1));
  auto out = merge_heads(torch::matmul(attn, v));
  auto gate = torch::tanh(gate_proj_(ctx_tokens));
  return out_proj_(gate * out);
}

// ---------------------------------------------------------------------------
// TokenMlp
// ---------------------------------------------------------------------------

TokenMlpImpl::TokenMlpImpl(int64_t dim, double ratio, double dropout) {
  const auto hidden = std::max<int64_t>(1, static_cast<int64_t>(std::llround(dim * ratio)));
  fc1_ = register_module("fc1", torch::nn::Linear(dim, hidden));
  fc2_ = register_module("fc2", torch::nn::Linear(hidden, dim));
  drop_ = register_module("drop", torch::nn::Dropout(dropout));
}

torch::Tensor TokenMlpImpl::forward(const torch::Tensor& t) {
  return drop_(fc2_(drop_(torch::gelu(fc1_(t)))));
}

// ---------------------------------------------------------------------------
// SkipAttention
// ---------------------------------------------------------------------------

SkipAttentionImpl::SkipAttentionImpl(int64_t skip_ch, int64_t ctx_ch, int64_t dim,
                                     const NetConfig& cfg)
    : skip_ch_(skip_ch),
      dim_(dim),
      heads_(cfg.heads),
      window_(cfg.window),
      patch_(cfg.patch),
      depth_(cfg.vit_depth),
      variant_(cfg.variant) {
  embed_ = register_module(
      "embed", torch::nn::Conv2d(torch::nn::Conv2dOptions(skip_ch, dim, patch_).stride(patch_)));
  if (variant_ != AttentionVariant::kSelfOnly) {
    embed_ctx_ = register_module(
        "embed_ctx", torch::nn::Conv2d(
                         torch::nn::Conv2dOptions(ctx_ch, dim, patch_).stride(patch_).bias(false)));
  }
  for (int64_t d = 0; d < depth_; ++d) {
    const auto tag = std::to_string(d);
    if (variant_ != AttentionVariant::kCrossOnly) {
      ln1_.push_back(register_module(
          "ln1_" + tag, torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim}))));
      self_attn_.push_back(register_module(
          "self_attn_" + tag, WindowSelfAttention(dim, heads_, window_, cfg.dropout)));
      ln2_.push_back(register_module(
          "ln2_" + tag, torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim}))));
      mlp_.push_back(register_module("mlp_" + tag, TokenMlp(dim, cfg.mlp_ratio, cfg.dropout)));
    }
    if (variant_ != AttentionVariant::kSelfOnly) {
      cross_attn_.push_back(
          register_module("cross_attn_" + tag, CrossWindowAttention(dim, heads_, cfg.dropout)));
    }
  }
  unembed_ = register_module(
      "unembed", torch::nn::ConvTranspose2d(
                     torch::nn::ConvTranspose2dOptions(dim, skip_ch, patch_)
                         .stride(patch_)
                         .bias(false)));
}

torch::Tensor SkipAttentionImpl::forward(const torch::Tensor& skip,
                                         const std::optional<torch::Tensor>& ctx) {
  const bool use_cross = variant_ != AttentionVariant::kSelfOnly;
  if (use_cross && !ctx)
    throw std::invalid_argument("attend_skip: variant '" + to_string(variant_) +
                                "' requires decoder context");
  const int64_t h = skip.size(2), w = skip.size(3);
  if (use_cross && (ctx->size(2) != h || ctx->size(3) != w))
    throw std::invalid_argument("attend_skip: context spatial size must match the skip");

  // Zero-pad to a patch multiple before tokenization.
  auto pad_to_patch = [this](const torch::Tensor& m) {
    const int64_t ph = (patch_ - m.size(2) % patch_) % patch_;
    const int64_t pw = (patch_ - m.size(3) % patch_) % patch_;
    return (ph || pw) ? F::pad(m, F::PadFuncOptions({0, pw, 0, ph})) : m;
  };

  auto geom = window_partition(embed_(pad_to_patch(skip)), window_);
  auto t0 = geom.tokens;
  auto t = t0;
  torch::Tensor tc;
  if (use_cross) tc = window_partition(embed_ctx_(pad_to_patch(*ctx)), window_).tokens;

  torch::Tensor rel_idx;
  if (!self_attn_.empty()) rel_idx = relative_index(geom.wh, geom.ww, window_);

  for (int64_t d = 0; d < depth_; ++d) {
    if (variant_ != AttentionVariant::kCrossOnly) {
      t = t + self_attn_[static_cast<size_t>(d)](ln1_[static_cast<size_t>(d)](t), rel_idx,
                                                 geom.key_valid);
      t = t + mlp_[static_cast<size_t>(d)](ln2_[static_cast<size_t>(d)](t));
    }
    if (use_cross) {
      t = t + cross_attn_[static_cast<size_t>(d)](t, tc, geom.key_valid);
    }
  }

  auto delta = window_unpartition(t - t0, geom, dim_);
  auto fused = unembed_(delta);
  using torch::indexing::Slice;
  return skip + fused.index({Slice(), Slice(), Slice(0, h), Slice(0, w)});
}

// ---------------------------------------------------------------------------
// SwinBathyUNet
// ---------------------------------------------------------------------------

SwinBathyUNetImpl::SwinBathyUNetImpl(const NetConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  stages_ = static_cast<int64_t>(cfg_.unet_filters.size());
  pool_ = register_module("pool", torch::nn::MaxPool2d(torch::nn::MaxPool2dOptions(2)));

  int64_t in_ch = cfg_.in_channels;
  for (int64_t i = 0; i < stages_; ++i) {
    enc_.push_back(register_module("enc" + std::to_string(i),
                                   DoubleConv(in_ch, cfg_.unet_filters[static_cast<size_t>(i)],
                                              cfg_.dropout)));
    in_ch = cfg_.unet_filters[static_cast<size_t>(i)];
  }

  // Decoder, deepest level first. Skip level l (0-based from the surface)
  // pairs with vit_dims[stages_-2-l].
  for (int64_t l = stages_ - 2; l >= 0; --l) {
    const int64_t f_lo = cfg_.unet_filters[static_cast<size_t>(l)];
    const int64_t f_hi = cfg_.unet_filters[static_cast<size_t>(l + 1)];
    const int64_t dim = cfg_.vit_dims[static_cast<size_t>(stages_ - 2 - l)];
    const auto tag = std::to_string(l);
    up_.push_back(register_module(
        "up" + tag, torch::nn::ConvTranspose2d(
                        torch::nn::ConvTranspose2dOptions(f_hi, f_lo, 2).stride(2))));
    att_.push_back(register_module("att" + tag, SkipAttention(f_lo, f_lo, dim, cfg_)));
    dec_.push_back(register_module("dec" + tag, DoubleConv(2 * f_lo, f_lo, cfg_.dropout)));
  }
  head_ = register_module(
      "head", torch::nn::Conv2d(torch::nn::Conv2dOptions(cfg_.unet_filters[0], 1, 1)));

  for (int64_t i = 0; i < stages_ - 1; ++i) {
    layer_names_.push_back("enc" + std::to_string(i));
    layer_ch_[layer_names_.back()] = cfg_.unet_filters[static_cast<size_t>(i)];
  }
  layer_names_.push_back("bottleneck");
  layer_ch_["bottleneck"] = cfg_.unet_filters.back();
  for (int64_t l = stages_ - 2; l >= 1; --l) {
    layer_names_.push_back("dec" + std::to_string(l));
    layer_ch_[layer_names_.back()] = cfg_.unet_filters[static_cast<size_t>(l)];
  }
  layer_names_.push_back("last_decoder_block");
  layer_ch_["last_decoder_block"] = cfg_.unet_filters[0];
}

int64_t SwinBathyUNetImpl::layer_channels(const std::string& name) const {
  auto it = layer_ch_.find(name);
  if (it == layer_ch_.end()) throw std::invalid_argument("unknown layer name '" + name + "'");
  return it->second;
}

torch::Tensor SwinBathyUNetImpl::site(const std::string& name, torch::Tensor t,
                                      const AblationSpec* ablate, TraceMap* trace) const {
  if (ablate && ablate->layer == name) {
    if (ablate->channel < 0 || ablate->channel >= t.size(1))
      throw std::out_of_range("channel ablation index out of range for layer '" + name + "'");
    auto keep = torch::ones({1, t.size(1), 1, 1}, t.options());
    keep.index_put_({0, ablate->channel, 0, 0}, 0.0);
    t = t * keep;
  }
  if (trace) (*trace)[name] = t.detach();
  return t;
}

torch::Tensor SwinBathyUNetImpl::forward(const torch::Tensor& x, const AblationSpec* ablate,
                                         TraceMap* trace) {
  if (x.dim() != 4) throw std::invalid_argument("forward: expected [B,C,H,W]");
  if (x.size(1) != cfg_.in_channels)
    throw std::invalid_argument("forward: input has " + std::to_string(x.size(1)) +
                                " channels, config expects " + std::to_string(cfg_.in_channels));
  const int64_t h = x.size(2), w = x.size(3);
  const int64_t m = int64_t{1} << (stages_ - 1);
  if (h < m || w < m)
    throw std::invalid_argument("forward: input smaller than the pooling pyramid");

  auto xi = x;
  const int64_t ph = (m - h % m) % m, pw = (m - w % m) % m;
  if (ph || pw) xi = F::pad(xi, F::PadFuncOptions({0, pw, 0, ph}).mode(torch::kReflect));

  std::vector<torch::Tensor> skips;
  auto t = xi;
  for (int64_t i = 0; i < stages_; ++i) {
    if (i > 0) t = pool_(t);
    t = enc_[static_cast<size_t>(i)](t);
    const auto name = i == stages_ - 1 ? std::string("bottleneck") : "enc" + std::to_string(i);
    t = site(name, t, ablate, trace);
    if (i < stages_ - 1) skips.push_back(t);
  }

  for (int64_t l = stages_ - 2; l >= 0; --l) {
    const auto idx = static_cast<size_t>(stages_ - 2 - l);
    auto up = up_[idx](t);
    auto refined = att_[idx](skips[static_cast<size_t>(l)], up);
    t = dec_[idx](torch::cat({up, refined}, 1));
    const auto name = l == 0 ? std::string("last_decoder_block") : "dec" + std::to_string(l);
    t = site(name, t, ablate, trace);
  }

  auto out = torch::sigmoid(head_(t));
  using torch::indexing::Slice;
  if (ph || pw) out = out.index({Slice(), Slice(), Slice(0, h), Slice(0, w)});
  return out;
}

torch::Tensor SwinBathyUNetImpl::attend_skip(int64_t level, const torch::Tensor& skip,
                                             const std::optional<torch::Tensor>& ctx) {
  if (level < 0 || level >= static_cast<int64_t>(att_.size()))
    throw std::out_of_range("attend_skip: level out of range");
  return att_[static_cast<size_t>(level)](skip, ctx);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// ModelHandle
// ---------------------------------------------------------------------------

ModelHandle ModelHandle::build(const NetConfig& cfg) {
  cfg.validate();
  torch::manual_seed(static_cast<uint64_t>(cfg.seed));
  ModelHandle m;
  m.cfg_ = cfg;
  m.net_ = detail::SwinBathyUNet(cfg);
  return m;
}

torch::Tensor ModelHandle::run(const torch::Tensor& x_chw, const detail::AblationSpec* ablate,
                               detail::TraceMap* trace) const {
  if (x_chw.dim() != 3) throw std::invalid_argument("forward: expected [C,H,W]");
  counter_->fetch_add(1);
  torch::NoGradGuard guard;
  const bool was_training = net_->is_training();
  net_->eval();
  auto out = net_->forward(x_chw.unsqueeze(0), ablate, trace).squeeze(0).squeeze(0);
  if (was_training) net_->train();
  return out;
}

torch::Tensor ModelHandle::forward(const torch::Tensor& x_chw) const {
  return run(x_chw, nullptr, nullptr);
}

torch::Tensor ModelHandle::infer_padded(const torch::Tensor& x_chw, int64_t pad) const {
  if (pad < 0) throw std::invalid_argument("infer_padded: pad must be >= 0");
  if (pad == 0) return forward(x_chw);
  const int64_t h = x_chw.size(1), w = x_chw.size(2);
  if (pad >= std::min(h, w))
    throw std::invalid_argument("infer_padded: pad must be smaller than the tile");
  namespace F = torch::nn::functional;
  auto padded = F::pad(x_chw.unsqueeze(0), F::PadFuncOptions({pad, pad, pad, pad})
                                               .mode(torch::kReflect))
                    .squeeze(0);
  auto out = forward(padded);
  using torch::indexing::Slice;
  return out.index({Slice(pad, h + pad), Slice(pad, w + pad)});
}

torch::Tensor ModelHandle::predict(const torch::Tensor& x_chw) const {
  return infer_padded(x_chw, infer_pad);
}

torch::Tensor ModelHandle::forward_plain(const torch::Tensor& x_chw) const {
  return forward(x_chw);
}

torch::Tensor ModelHandle::activations(const torch::Tensor& x_chw,
                                       const std::string& layer) const {
  return forward_with_layer(x_chw, layer).second;
}

std::pair<torch::Tensor, torch::Tensor> ModelHandle::forward_with_layer(
    const torch::Tensor& x_chw, const std::string& layer) const {
  net_->layer_channels(layer);  // validates the name
  detail::TraceMap trace;
  auto pred = run(x_chw, nullptr, &trace);
  return {pred, trace.at(layer).squeeze(0)};
}

torch::Tensor ModelHandle::forward_with_channel_ablated(const torch::Tensor& x_chw,
                                                        const std::string& layer,
                                                        int64_t channel) const {
  net_->layer_channels(layer);
  detail::AblationSpec spec{layer, channel};
  return run(x_chw, &spec, nullptr);
}

int64_t ModelHandle::channel_count(const std::string& layer) const {
  return net_->layer_channels(layer);
}

torch::Tensor ModelHandle::attend_skip(int64_t level, const torch::Tensor& skip,
                                       const std::optional<torch::Tensor>& ctx) const {
  torch::NoGradGuard guard;
  const bool was_training = net_->is_training();
  net_->eval();
  auto out = net_->attend_skip(level, skip, ctx);
  if (was_training) net_->train();
  return out;
}

int64_t ModelHandle::parameter_count() const {
  int64_t n = 0;
  for (const auto& p : net_->parameters()) n += p.numel();
  return n;
}

uint64_t ModelHandle::parameter_checksum() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& kv : net_->named_parameters()) {
    h = fnv1a(kv.key().data(), kv.key().size(), h);
    auto t = kv.value().detach().to(torch::kFloat32).contiguous();
    h = fnv1a(t.data_ptr(), static_cast<size_t>(t.numel()) * sizeof(float), h);
  }
  return h;
}

void ModelHandle::to_double() { net_->to(torch::kFloat64); }

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

void save_checkpoint(const ModelHandle& model, const std::string& path) {
  torch::serialize::OutputArchive ar;
  ar.write("format_version", c10::IValue(kCheckpointFormatVersion));
  ar.write("config_json", c10::IValue(model.config().to_json().dump()));
  for (const auto& kv : model.net()->named_parameters()) {
    ar.write("param/" + kv.key(), kv.value());
  }
  ar.save_to(path);
}

ModelHandle load_checkpoint(const std::string& path) {
  torch::serialize::InputArchive ar;
  try {
    ar.load_from(path);
  } catch (const std::exception& e) {
    throw std::runtime_error("cannot load checkpoint '" + path + "': " + e.what());
  }
  c10::IValue version, config_json;
  if (!ar.try_read("format_version", version) || version.toInt() != kCheckpointFormatVersion)
    throw std::runtime_error("checkpoint '" + path + "' has an unsupported format version");
  ar.read("config_json", config_json);
  auto cfg = NetConfig::from_json(nlohmann::json::parse(config_json.toStringRef()));
  auto model = ModelHandle::build(cfg);
  torch::NoGradGuard guard;
  for (auto& kv : model.net()->named_parameters()) {
    torch::Tensor t;
    ar.read("param/" + kv.key(), t);
    kv.value().copy_(t);
  }
  return model;
}

}  // namespace bathyscope
