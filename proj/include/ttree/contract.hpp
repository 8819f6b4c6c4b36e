#pragma once

#include <vector>

#include "ttree/dataset.hpp"
#include "ttree/tensor.hpp"
#include "ttree/tree.hpp"

namespace ttree {

/// ln W(x). Born trees return ln |psi(x)|^2. -infinity when the weight is 0.
double log_weight(const TensorTree& tree, const Sample& sample);

/// ln Z with all-ones vectors at every input.
double log_partition(const TensorTree& tree);

/// ln W with the vectors of sites where keep[site] is false replaced by ones.
double marginal_log_weight(const TensorTree& tree, const Sample& sample,
                           const std::vector<bool>& keep);

/// A tensor of the tree, or the fused bond between a tensor and its parent.
struct Target {
  int tensor = 0;
  bool fused = false;
};

/// Contraction of tensors `child` and its parent: F[c1, c2, s, u] with
/// (c1, c2) the child's lower legs, s the parent's other lower leg and u the
/// parent's up leg.
Tensor fused_tensor(const TensorTree& tree, int child);

/// dW/dT of the target, equal to values * exp(log_scale).
struct Environment {
  Tensor values;
  double log_scale = 0.0;
};

/// Derivative of W(x) (or of Z when `sample` is null) with respect to the
/// target. Born trees return the derivative of |psi|^2.
Environment environment(const TensorTree& tree, Target target, const Sample* sample);

}  // namespace ttree
