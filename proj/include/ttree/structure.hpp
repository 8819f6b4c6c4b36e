#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ttree/dataset.hpp"
#include "ttree/factor.hpp"
#include "ttree/messages.hpp"
#include "ttree/optim.hpp"
#include "ttree/rng.hpp"
#include "ttree/tree.hpp"

namespace ttree {

struct StructureConfig {
  int chi_max = 2;
  bool structure_opt = true;
  int fused_steps = 10;
  /// Alternating rounds over the split pair; each round steps both tensors.
  int pair_rounds = 10;
  AdamWConfig adam;
  NMFConfig nmf;
  /// Candidates within this many nats of the minimum lose to the incumbent.
  double tie_tol = 1e-6;
};

/// Fused bond with the subtree hanging off each of its legs (c1, c2, s, u);
/// u is the parent's up leg, given as the parent id.
struct FusedBond {
  Tensor tensor;
  int child = -1;
  int parent = -1;
  std::array<NodeRef, 3> lower;
};

FusedBond fuse_bond(const TensorTree& tree, int bond);

/// Gradient steps on a fused tensor whose four legs see `legs`. Returns the
/// batch NLL before each step.
std::vector<double> optimize_fused(Tensor& fused, std::span<const LegBatch* const> legs,
                                   std::span<const double> weights, Mode mode, OptState& state,
                                   int n_steps);

/// One gradient step on `t`: projected in Nonnegative mode.
LocalEval gradient_step(Tensor& t, std::span<const LegBatch* const> legs,
                        std::span<const double> weights, Mode mode, OptState& state);

BondInformation empirical_entropies(const TensorTree& tree, int bond, const Dataset& data);
double bond_mi(const TensorTree& tree, int bond, const Dataset& data);

/// Schmidt entropy of the matricized fused tensor.
double bond_ee(const Tensor& fused, Pairing pairing);
/// Same with each leg weighted by the square root of its environment Gram.
double bond_ee(const Tensor& fused, Pairing pairing, const std::array<Eigen::MatrixXd, 4>& grams);

struct GeometryCandidate {
  Pairing pairing = Pairing::IJ_KL;
  FactorPair pair;
  double bond_mi = 0.0;
  std::optional<double> bond_ee;
  double nll = 0.0;
  bool ok = false;
};

struct BondReport {
  int bond = -1;
  /// Clamped at -0.05.
  double mi = 0.0;
  double mi_raw = 0.0;
  std::optional<double> ee;
  int chi = 0;
};

struct BondVisit {
  int sweep = 0;
  BondReport report;
  std::array<std::optional<double>, 3> candidate_mi;
  Pairing chosen = Pairing::IJ_KL;
  double nll_after = 0.0;
  double seconds = 0.0;
  int zero_weight_samples = 0;
};

BondVisit propose_and_select(TensorTree& tree, int bond, const Dataset& data,
                             std::span<const int> batch, const StructureConfig& config);

/// Contiguous chunks of a shuffled order, reshuffled every epoch.
class BatchSampler {
 public:
  BatchSampler(std::size_t num_samples, int batch_size, Rng rng);
  std::vector<int> next();

 private:
  std::vector<int> order_;
  std::size_t pos_ = 0;
  int batch_size_;
  Rng rng_;
};

/// Visit order of one sweep: depth-first from the root. Bonds are named by
/// their child tensor.
using VisitFn = std::function<void(const BondVisit&)>;

/// Visits every internal bond once, or stops after `max_visits` visits when
/// that is nonnegative. Returns the reports in visit order.
std::vector<BondReport> sweep(TensorTree& tree, const Dataset& data, const StructureConfig& config,
                              BatchSampler& sampler, int sweep_index = 0,
                              const VisitFn& on_visit = {}, int max_visits = -1);

}  // namespace ttree
