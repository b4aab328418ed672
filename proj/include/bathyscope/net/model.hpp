#pragma once

#include <torch/torch.h>

#include <atomic>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bathyscope/net/config.hpp"

namespace bathyscope {

// Inference surface shared by the trained network and planted test models.
struct DepthPredictor {
  // Evaluation-protocol inference: [C,H,W] in [0,1] -> [H,W] in [0,1].
  virtual torch::Tensor predict(const torch::Tensor& x_chw) const = 0;
  virtual ~DepthPredictor() = default;
};

// Saliency construction additionally needs activation access and per-channel
// ablation of a named layer.
struct AblatableModel : DepthPredictor {
  virtual torch::Tensor forward_plain(const torch::Tensor& x_chw) const = 0;
  // Single pass returning (prediction, [K,h,w] activations of `layer`).
  virtual std::pair<torch::Tensor, torch::Tensor> forward_with_layer(
      const torch::Tensor& x_chw, const std::string& layer) const = 0;
  virtual torch::Tensor forward_with_channel_ablated(const torch::Tensor& x_chw,
                                                     const std::string& layer,
                                                     int64_t channel) const = 0;
  virtual int64_t channel_count(const std::string& layer) const = 0;
};

namespace detail {

struct AblationSpec {
  std::string layer;
  int64_t channel = -1;
};
using TraceMap = std::map<std::string, torch::Tensor>;

class DoubleConvImpl : public torch::nn::Module {
 public:
  DoubleConvImpl(int64_t in_ch, int64_t out_ch, double dropout);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr};
  torch::nn::GroupNorm norm1_{nullptr}, norm2_{nullptr};
  torch::nn::Dropout2d drop_{nullptr};
};
TORCH_MODULE(DoubleConv);

class WindowSelfAttentionImpl : public torch::nn::Module {
 public:
  WindowSelfAttentionImpl(int64_t dim, int64_t heads, int64_t window, double dropout);
  // tokens: [N, T, dim]; rel_index: [T, T] long; key_valid: [N, T] bool (may
  // be undefined when every token is valid).
  torch::Tensor forward(const torch::Tensor& tokens, const torch::Tensor& rel_index,
                        const torch::Tensor& key_valid);

  torch::Tensor rel_bias_table;  // [(2w-1)^2, heads]

 private:
  int64_t dim_, heads_, window_;
  torch::nn::Linear qkv_{nullptr}, proj_{nullptr};
  torch::nn::Dropout attn_drop_{nullptr}, proj_drop_{nullptr};
};
TORCH_MODULE(WindowSelfAttention);

// Decoder-conditioned cross attention: queries and a multiplicative tanh
// gate come from context tokens, keys/values from the skip tokens. All
// context-side projections are bias-free, so zero context contributes
// exactly nothing.
class CrossWindowAttentionImpl : public torch::nn::Module {
 public:
  CrossWindowAttentionImpl(int64_t dim, int64_t heads, double dropout);
  torch::Tensor forward(const torch::Tensor& skip_tokens, const torch::Tensor& ctx_tokens,
                        const torch::Tensor& key_valid);

 private:
  int64_t dim_, heads_;
  torch::nn::LayerNorm kv_norm_{nullptr};
  torch::nn::Linear q_proj_{nullptr}, k_proj_{nullptr}, v_proj_{nullptr}, gate_proj_{nullptr},
      out_proj_{nullptr};
  torch::nn::Dropout attn_drop_{nullptr};
};
TORCH_MODULE(CrossWindowAttention);

class TokenMlpImpl : public torch::nn::Module {
 public:
  TokenMlpImpl(int64_t dim, double ratio, double dropout);
  torch::Tensor forward(const torch::Tensor& t);

 private:
  torch::nn::Linear fc1_{nullptr}, fc2_{nullptr};
  torch::nn::Dropout drop_{nullptr};
};
TORCH_MODULE(TokenMlp);

// Windowed attention refinement of one skip connection. The refined skip is
// the input plus a bias-free unembedding of the token-space delta, so a
// variant whose branches all gate to zero returns the skip unchanged.
class SkipAttentionImpl : public torch::nn::Module {
 public:
  SkipAttentionImpl(int64_t skip_ch, int64_t ctx_ch, int64_t dim, const NetConfig& cfg);
  torch::Tensor forward(const torch::Tensor& skip, const std::optional<torch::Tensor>& ctx);

 private:
  int64_t skip_ch_, dim_, heads_, window_, patch_, depth_;
  AttentionVariant variant_;
  torch::nn::Conv2d embed_{nullptr}, embed_ctx_{nullptr};
  std::vector<torch::nn::LayerNorm> ln1_, ln2_;
  std::vector<WindowSelfAttention> self_attn_;
  std::vector<TokenMlp> mlp_;
  std::vector<CrossWindowAttention> cross_attn_;
  torch::nn::ConvTranspose2d unembed_{nullptr};
};
TORCH_MODULE(SkipAttention);

class SwinBathyUNetImpl : public torch::nn::Module {
 public:
  explicit SwinBathyUNetImpl(const NetConfig& cfg);

  // x: [B,C,H,W] -> [B,1,H,W]; optionally ablates one channel of a named
  // activation site and/or records all sites.
  torch::Tensor forward(const torch::Tensor& x, const AblationSpec* ablate = nullptr,
                        TraceMap* trace = nullptr);

  torch::Tensor attend_skip(int64_t level, const torch::Tensor& skip,
                            const std::optional<torch::Tensor>& ctx);

  const std::vector<std::string>& layer_names() const { return layer_names_; }
  int64_t layer_channels(const std::string& name) const;

 private:
  torch::Tensor site(const std::string& name, torch::Tensor t, const AblationSpec* ablate,
                     TraceMap* trace) const;

  NetConfig cfg_;
  int64_t stages_;
  torch::nn::MaxPool2d pool_{nullptr};
  std::vector<DoubleConv> enc_;
  std::vector<torch::nn::ConvTranspose2d> up_;   // index 0 = deepest
  std::vector<SkipAttention> att_;               // index 0 = deepest skip
  std::vector<DoubleConv> dec_;                  // index 0 = deepest
  torch::nn::Conv2d head_{nullptr};
  std::vector<std::string> layer_names_;
  std::map<std::string, int64_t> layer_ch_;
};
TORCH_MODULE(SwinBathyUNet);

}  // namespace detail

// A built network plus its configuration; exposes activation access, channel
// overrides and the padded inference protocol.
class ModelHandle : public AblatableModel {
 public:
  static ModelHandle build(const NetConfig& cfg);

  const NetConfig& config() const { return cfg_; }
  detail::SwinBathyUNet& net() { return net_; }
  const detail::SwinBathyUNet& net() const { return net_; }

  // [C,H,W] -> [H,W], eval mode, no autograd.
  torch::Tensor forward(const torch::Tensor& x_chw) const;

  // Reflect-pad by `pad`, forward, crop back to H x W.
  torch::Tensor infer_padded(const torch::Tensor& x_chw, int64_t pad) const;

  torch::Tensor activations(const torch::Tensor& x_chw, const std::string& layer) const;

  std::vector<std::string> named_layers() const { return net_->layer_names(); }

  int64_t parameter_count() const;
  uint64_t parameter_checksum() const;
  int64_t forward_calls() const { return counter_->load(); }

  // Exposed for unit probes; level 0 is the deepest skip (vit_dims[0]).
  torch::Tensor attend_skip(int64_t level, const torch::Tensor& skip,
                            const std::optional<torch::Tensor>& ctx) const;

  // Default pad used by predict(); mirrors the test-time protocol.
  int64_t infer_pad = 16;

  // AblatableModel surface
  torch::Tensor predict(const torch::Tensor& x_chw) const override;
  torch::Tensor forward_plain(const torch::Tensor& x_chw) const override;
  std::pair<torch::Tensor, torch::Tensor> forward_with_layer(
      const torch::Tensor& x_chw, const std::string& layer) const override;
  torch::Tensor forward_with_channel_ablated(const torch::Tensor& x_chw, const std::string& layer,
                                             int64_t channel) const override;
  int64_t channel_count(const std::string& layer) const override;

  void to_double();  // for finite-difference checks

 private:
  torch::Tensor run(const torch::Tensor& x_chw, const detail::AblationSpec* ablate,
                    detail::TraceMap* trace) const;

  NetConfig cfg_;
  mutable detail::SwinBathyUNet net_{nullptr};
  std::shared_ptr<std::atomic<int64_t>> counter_ = std::make_shared<std::atomic<int64_t>>(0);
};

constexpr int64_t kCheckpointFormatVersion = 1;

void save_checkpoint(const ModelHandle& model, const std::string& path);
ModelHandle load_checkpoint(const std::string& path);

}  // namespace bathyscope
