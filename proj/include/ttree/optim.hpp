#pragma once

#include <vector>

#include "ttree/contract.hpp"
#include "ttree/dataset.hpp"
#include "ttree/tensor.hpp"
#include "ttree/tree.hpp"

namespace ttree {

struct AdamWConfig {
  double eta = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// AdamW moments of one target tensor.
struct OptState {
  Tensor first_moment;
  Tensor second_moment;
  int step_count = 0;
  AdamWConfig config;

  OptState() = default;
  OptState(const std::vector<int>& shape, AdamWConfig cfg)
      : first_moment(shape), second_moment(shape), config(cfg) {}
};

struct NllResult {
  double value = 0.0;
  /// Samples with W = 0; value is +infinity when this is nonempty.
  std::vector<int> zero_weight_samples;
};

/// Weighted negative log-likelihood of the whole dataset.
NllResult nll(const TensorTree& tree, const Dataset& batch);

/// Exact gradient of the NLL with respect to a tensor or fused bond.
Tensor nll_gradient(const TensorTree& tree, Target target, const Dataset& batch);

/// g = grad where value > grad, value elsewhere.
Tensor projected_gradient(const Tensor& value, const Tensor& raw_grad);

/// Rescales to unit Frobenius norm when the norm exceeds 1.
Tensor clip_unit_norm(const Tensor& grad);

/// Clip, AdamW step, then max(0, .).
void step_nonneg(Tensor& value, OptState& state, const Tensor& g_p);

/// Clip and AdamW step.
void step_unconstrained(Tensor& value, OptState& state, const Tensor& grad);

}  // namespace ttree
