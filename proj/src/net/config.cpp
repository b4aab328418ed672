#include "bathyscope/net/config.hpp"

#include <stdexcept>

#include <nlohmann/json.hpp>

namespace bathyscope {

AttentionVariant variant_from_string(const std::string& s) {
  if (s == "cross_only") return AttentionVariant::kCrossOnly;
  if (s == "self_only") return AttentionVariant::kSelfOnly;
  if (s == "self_cross") return AttentionVariant::kSelfCross;
  throw std::invalid_argument("unknown attention variant '" + s +
                              "' (expected cross_only|self_only|self_cross)");
}

std::string to_string(AttentionVariant v) {
  switch (v) {
    case AttentionVariant::kCrossOnly: return "cross_only";
    case AttentionVariant::kSelfOnly: return "self_only";
    case AttentionVariant::kSelfCross: return "self_cross";
  }
  return "?";
}

void NetConfig::validate() const {
  if (unet_filters.size() < 2) throw std::invalid_argument("NetConfig: need >= 2 encoder stages");
  if (vit_dims.size() != unet_filters.size() - 1)
    throw std::invalid_argument("NetConfig: vit_dims must have one entry per skip connection");
  for (auto f : unet_filters)
    if (f < 1) throw std::invalid_argument("NetConfig: filter counts must be >= 1");
  for (auto d : vit_dims) {
    if (d < 1) throw std::invalid_argument("NetConfig: vit_dims must be >= 1");
    if (d % heads != 0)
      throw std::invalid_argument("NetConfig: every vit dim must be divisible by heads");
  }
  if (vit_depth < 1) throw std::invalid_argument("NetConfig: vit_depth must be >= 1");
  if (heads < 1) throw std::invalid_argument("NetConfig: heads must be >= 1");
  if (window < 1) throw std::invalid_argument("NetConfig: window must be >= 1");
  if (patch < 1) throw std::invalid_argument("NetConfig: patch must be >= 1");
  if (mlp_ratio <= 0) throw std::invalid_argument("NetConfig: mlp_ratio must be > 0");
  if (dropout < 0 || dropout >= 1) throw std::invalid_argument("NetConfig: dropout out of range");
  if (in_channels < 1) throw std::invalid_argument("NetConfig: in_channels must be >= 1");
}

NetConfig NetConfig::desk() {
  NetConfig c;
  c.unet_filters = {8, 16, 32, 64};
  c.vit_dims = {64, 32, 16};
  c.vit_depth = 1;
  c.heads = 4;
  c.window = 8;
  c.mlp_ratio = 4.0;
  c.patch = 4;
  c.dropout = 0.1;
  c.in_channels = 3;
  c.variant = AttentionVariant::kCrossOnly;
  return c;
}

nlohmann::json NetConfig::to_json() const {
  return nlohmann::json{{"unet_filters", unet_filters},
                        {"vit_dims", vit_dims},
                        {"vit_depth", vit_depth},
                        {"heads", heads},
                        {"window", window},
                        {"mlp_ratio", mlp_ratio},
                        {"patch", patch},
                        {"dropout", dropout},
                        {"in_channels", in_channels},
                        {"variant", to_string(variant)},
                        {"seed", seed}};
}

NetConfig NetConfig::from_json(const nlohmann::json& j) {
  NetConfig c;
  c.unet_filters = j.value("unet_filters", c.unet_filters);
  c.vit_dims = j.value("vit_dims", c.vit_dims);
  c.vit_depth = j.value("vit_depth", c.vit_depth);
  c.heads = j.value("heads", c.heads);
  c.window = j.value("window", c.window);
  c.mlp_ratio = j.value("mlp_ratio", c.mlp_ratio);
  c.patch = j.value("patch", c.patch);
  c.dropout = j.value("dropout", c.dropout);
  c.in_channels = j.value("in_channels", c.in_channels);
  if (j.contains("variant")) c.variant = variant_from_string(j.at("variant").get<std::string>());
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

}  // namespace bathyscope
