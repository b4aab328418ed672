#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace bathyscope {

enum class AttentionVariant { kCrossOnly, kSelfOnly, kSelfCross };

AttentionVariant variant_from_string(const std::string& s);
std::string to_string(AttentionVariant v);

struct NetConfig {
  std::vector<int64_t> unet_filters{64, 128, 256, 512};
  std::vector<int64_t> vit_dims{512, 256, 128};  // deepest skip first
  int64_t vit_depth = 1;
  int64_t heads = 8;
  int64_t window = 64;
  double mlp_ratio = 4.0;
  int64_t patch = 32;
  double dropout = 0.1;
  int64_t in_channels = 3;
  AttentionVariant variant = AttentionVariant::kCrossOnly;
  int64_t seed = 0;

  void validate() const;

  // CPU-trainable configuration for 64x64 tiles.
  static NetConfig desk();

  nlohmann::json to_json() const;
  static NetConfig from_json(const nlohmann::json& j);
};

}  // namespace bathyscope
