#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ttree/factor.hpp"
#include "ttree/tree.hpp"

namespace ttree {

/// Column-stochastic matrix on one edge: entries(child state, parent state).
/// Emission edges have a site as child.
struct TransitionMatrix {
  Eigen::MatrixXd entries;
  int parent = -1;     // tensor id
  NodeRef child;       // tensor or site
  bool emission() const { return child.is_site(); }
};

struct HmmExtraction {
  std::vector<TransitionMatrix> edges;
  Eigen::VectorXd root_distribution;
  std::vector<CPDecomposition> decompositions;  // per tensor id
  /// Tensors whose CP reconstruction KL, relative to the tensor mass,
  /// exceeds the flag threshold.
  std::vector<int> inexact;
};

/// Hidden Markov model of a nonnegative tree: each tensor's CP decomposition
/// supplies a hidden node; edge matrices are P(child state | parent state)
/// with each child's CP scale and subtree mass folded in.
HmmExtraction extract_hmm(const TensorTree& model, int rank, const NMFConfig& config,
                          double flag_threshold = 1e-3, std::uint64_t seed = 0);

/// Smallest eigenvalue modulus of a square matrix.
double permutation_closeness(const Eigen::MatrixXd& m);

}  // namespace ttree
