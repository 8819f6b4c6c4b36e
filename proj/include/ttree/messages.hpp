#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ttree/dataset.hpp"
#include "ttree/tensor.hpp"
#include "ttree/tree.hpp"

namespace ttree {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Messages arriving on one tensor leg for every sample of a batch, plus the
/// sample-independent message of the same subnetwork with all of its inputs
/// summed out.
///
/// Every stored quantity is rescaled to unit max-norm; the removed factor is
/// kept as a log. For BornMachine trees `values` are amplitudes (their log
/// scale multiplies the amplitude) and `gram` is the doubled-layer message
/// (its log scale multiplies the squared quantity).
struct LegBatch {
  RowMatrix values;
  std::vector<double> log_scale;
  Eigen::VectorXd marginal;
  Eigen::MatrixXd gram;
  double marginal_log_scale = 0.0;

  int dim() const { return static_cast<int>(values.cols()); }
  int num_samples() const { return static_cast<int>(values.rows()); }
};

/// Input vectors of one site for the samples in `batch`.
LegBatch site_leg(const Dataset& data, std::span<const int> batch, int site, Mode mode);

/// The scalar 1 fed into the top leg.
LegBatch top_leg(int num_samples, Mode mode);

/// Contracts `t` with the messages on every leg except `open_axis`, giving the
/// message that leaves through `open_axis`. `legs[open_axis]` is ignored.
LegBatch propagate(const Tensor& t, int open_axis, std::span<const LegBatch* const> legs,
                   Mode mode);

/// Upward and downward messages of a whole tree for one batch.
class BatchMessages {
 public:
  BatchMessages(const TensorTree& tree, const Dataset& data, std::span<const int> batch);

  const LegBatch& up(NodeRef ref) const {
    return ref.is_site() ? sites_[ref.index] : up_[ref.index];
  }
  /// Message entering a tensor's up leg from the rest of the network.
  const LegBatch& down(int tensor) const { return down_[tensor]; }

  const std::vector<double>& weights() const { return weights_; }
  int num_samples() const { return static_cast<int>(weights_.size()); }

  /// Legs of a tensor in axis order (left, right, up).
  std::array<const LegBatch*, 3> tensor_legs(int id) const;
  /// Legs of the fused tensor formed by `child` and its parent, in the order
  /// (child.left, child.right, sibling, parent.up).
  std::array<const LegBatch*, 4> fused_legs(int child) const;

 private:
  const TensorTree* tree_;
  std::vector<LegBatch> sites_;
  std::vector<LegBatch> up_;
  std::vector<LegBatch> down_;
  std::vector<double> weights_;
};

/// Result of evaluating the negative log-likelihood of a batch as a function
/// of one tensor whose every leg sees fixed messages.
struct LocalEval {
  double nll = 0.0;
  double log_z = 0.0;
  Tensor grad;
  int zero_weight_samples = 0;
};

/// Smallest weight admitted inside the log; smaller weights are clamped and
/// counted.
inline constexpr double kMinWeight = 1e-300;

LocalEval local_nll(const Tensor& t, std::span<const LegBatch* const> legs,
                    std::span<const double> weights, Mode mode, bool want_grad);

/// Dataset-estimated entropies of the bipartition across one bond, where
/// `below` carries the messages of side A and `above` those of side B.
struct BondInformation {
  double h_ab = 0.0;
  double h_a = 0.0;
  double h_b = 0.0;
  int zero_weight_samples = 0;
  double mi() const { return h_a + h_b - h_ab; }
};

BondInformation bond_information(const LegBatch& below, const LegBatch& above,
                                 std::span<const double> weights, Mode mode);

/// Schmidt entropy across a bond of a Born machine from the Gram matrices of
/// the two half-networks.
double entanglement_entropy(const Eigen::MatrixXd& gram_below, const Eigen::MatrixXd& gram_above);

std::vector<int> all_indices(std::size_t n);

}  // namespace ttree
