#include "ttree/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ttree/error.hpp"
#include "ttree/messages.hpp"

namespace ttree {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ConfigError("shape mismatch: " + a.shape_string() + " vs " + b.shape_string());
  }
}

void adamw(Tensor& value, OptState& state, const Tensor& grad) {
  require_same_shape(value, grad);
  if (!state.first_moment.same_shape(value)) state = OptState(value.shape(), state.config);
  const Tensor g = clip_unit_norm(grad);
  const auto& c = state.config;
  ++state.step_count;
  const double bc1 = 1.0 - std::pow(c.beta1, state.step_count);
  const double bc2 = 1.0 - std::pow(c.beta2, state.step_count);
  const double decay = 1.0 - c.eta * c.weight_decay;
  for (std::size_t i = 0; i < value.size(); ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = c.beta1 * m + (1.0 - c.beta1) * g[i];
    v = c.beta2 * v + (1.0 - c.beta2) * g[i] * g[i];
    value[i] = value[i] * decay - c.eta * (m / bc1) / (std::sqrt(v / bc2) + c.eps);
  }
}

}  // namespace

NllResult nll(const TensorTree& tree, const Dataset& batch) {
  if (batch.size() == 0) throw ConfigError("empty batch");
  const auto idx = all_indices(batch.size());
  BatchMessages msgs(tree, batch, idx);
  const int root = tree.root();
  const auto legs = msgs.tensor_legs(root);
  const LocalEval ev = local_nll(tree.tensor(root), legs, msgs.weights(), tree.mode(), false);
  NllResult out;
  out.value = ev.nll;
  const LegBatch& top = msgs.up(NodeRef::tensor(root));
  for (int s = 0; s < top.num_samples(); ++s)
    if (top.values(s, 0) == 0.0 && batch.samples[s].weight > 0.0) out.zero_weight_samples.push_back(s);
  if (!out.zero_weight_samples.empty()) out.value = std::numeric_limits<double>::infinity();
  return out;
}

Tensor nll_gradient(const TensorTree& tree, Target target, const Dataset& batch) {
  if (batch.size() == 0) throw ConfigError("empty batch");
  if (target.tensor < 0 || target.tensor >= tree.num_tensors()) {
    throw ConfigError("target tensor " + std::to_string(target.tensor) + " not found");
  }
  const auto idx = all_indices(batch.size());
  BatchMessages msgs(tree, batch, idx);
  if (target.fused) {
    const auto legs = msgs.fused_legs(target.tensor);
    return local_nll(fused_tensor(tree, target.tensor), legs, msgs.weights(), tree.mode(), true).grad;
  }
  const auto legs = msgs.tensor_legs(target.tensor);
  return local_nll(tree.tensor(target.tensor), legs, msgs.weights(), tree.mode(), true).grad;
}

Tensor projected_gradient(const Tensor& value, const Tensor& raw_grad) {
  require_same_shape(value, raw_grad);
  Tensor g(value.shape());
  for (std::size_t i = 0; i < value.size(); ++i) g[i] = value[i] > raw_grad[i] ? raw_grad[i] : value[i];
  return g;
}

Tensor clip_unit_norm(const Tensor& grad) {
  const double n = grad.frobenius_norm();
  if (n > 1.0) return grad * (1.0 / n);
  return grad;
}

void step_nonneg(Tensor& value, OptState& state, const Tensor& g_p) {
  adamw(value, state, g_p);
  for (double& x : value.values()) x = std::max(0.0, x);
}

void step_unconstrained(Tensor& value, OptState& state, const Tensor& grad) {
  adamw(value, state, grad);
}

}  // namespace ttree
