#pragma once

#include <torch/torch.h>

#include <string>

namespace bathyscope {

enum class LossKind { kMaskedRmse, kMaskedMae, kBwRmse };
enum class DecayKind { kLinear, kExp };

LossKind loss_kind_from_string(const std::string& s);
std::string to_string(LossKind k);
DecayKind decay_kind_from_string(const std::string& s);
std::string to_string(DecayKind k);

struct LossSpec {
  LossKind kind = LossKind::kMaskedRmse;
  DecayKind decay = DecayKind::kLinear;
  double d_min = 0.0;        // EDT clip bounds, pixels
  double d_max_dist = 20.0;
  double eps = 1e-8;

  void validate() const;
};

// Boundary weights in [1,2], decaying with clipped EDT distance from the
// supervision boundary. A degenerate (constant) distance field gives w == 1.
struct WeightField {
  torch::Tensor w;  // [H,W], same dtype as requested
};

WeightField boundary_weights(const torch::Tensor& mask, const LossSpec& spec);

// sqrt( sum(mask*(pred-target)^2) / (sum(mask)+eps) ). An all-zero mask
// returns 0 and sets *no_supervision when provided.
torch::Tensor masked_rmse(const torch::Tensor& pred, const torch::Tensor& target,
                          const torch::Tensor& mask, double eps = 1e-8,
                          bool* no_supervision = nullptr);

torch::Tensor masked_mae(const torch::Tensor& pred, const torch::Tensor& target,
                         const torch::Tensor& mask, double eps = 1e-8,
                         bool* no_supervision = nullptr);

torch::Tensor bw_rmse(const torch::Tensor& pred, const torch::Tensor& target,
                      const torch::Tensor& mask, const torch::Tensor& weights, double eps = 1e-8,
                      bool* no_supervision = nullptr);

// Dispatch on a LossSpec; computes boundary weights internally for the
// boundary-weighted kind.
torch::Tensor compute_loss(const LossSpec& spec, const torch::Tensor& pred,
                           const torch::Tensor& target, const torch::Tensor& mask);

inline double to_meters(double value_normalized, double d_max) { return value_normalized * d_max; }

}  // namespace bathyscope
