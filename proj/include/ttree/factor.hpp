#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ttree/tensor.hpp"

namespace ttree {

struct NMFConfig {
  int max_iters = 500;
  /// Stop when the relative KL decrease of one iteration falls below this.
  double rel_tol = 1e-6;
  /// Guards the ratio V / (WH) against division by zero; the recorded KL
  /// uses the same floor on WH.
  double floor = 1e-300;
};

/// Generalized KL divergence sum(WH - V + V log(V / WH)), 0 log 0 = 0.
double kl_divergence(const Eigen::MatrixXd& v, const Eigen::MatrixXd& wh);
double kl_divergence(const Eigen::MatrixXd& v, const Eigen::MatrixXd& w, const Eigen::MatrixXd& h);

struct ThinSvd {
  Eigen::MatrixXd u;
  Eigen::VectorXd s;
  Eigen::MatrixXd v;
};
/// Divide-and-conquer SVD, falling back to Jacobi when the former returns
/// non-finite values (it can on entries near the underflow limit). Throws
/// NumericalError when both fail.
ThinSvd thin_svd(const Eigen::MatrixXd& m, bool vectors = true);

/// Nonnegative double SVD initialization. Zero entries are filled with
/// 1e-12 * mean(V).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> nndsvd_init(const Eigen::MatrixXd& v, int rank);

struct NMFResult {
  Eigen::MatrixXd w;
  Eigen::MatrixXd h;
  /// KL after initialization, then after every iteration.
  std::vector<double> kl_history;
  int iterations = 0;

  double kl() const { return kl_history.empty() ? 0.0 : kl_history.back(); }
};

/// KL multiplicative updates started from nndsvd_init.
NMFResult nmf_mu_kl(const Eigen::MatrixXd& v, int rank, const NMFConfig& config);

/// Ways to pair the legs (c1, c2, s, u) of a fused tensor. The first pair
/// becomes the new child tensor's lower legs; the parent keeps u.
enum class Pairing { IJ_KL, IK_JL, IL_JK };

inline constexpr Pairing kPairings[3] = {Pairing::IJ_KL, Pairing::IK_JL, Pairing::IL_JK};

const char* to_string(Pairing p);
/// Fused axes of the new child's (left, right) legs and the parent's other leg.
std::array<int, 3> pairing_axes(Pairing p);

struct FactorPair {
  Tensor left;   // (p1, p2, m)
  Tensor right;  // (m, other, u)
  int bond_dim = 0;
  /// KL of the NMF (nonnegative split) or Frobenius error (SVD split).
  double error = 0.0;
};

/// min(chi_i chi_j, chi_k chi_l, chi_max) for a pairing of `fused`.
int split_bond_dim(const Tensor& fused, Pairing pairing, int chi_max);

/// Matricizes along the pairing (rows = child pair).
Eigen::MatrixXd pairing_matrix(const Tensor& fused, Pairing pairing);

FactorPair split_nonneg(const Tensor& fused, Pairing pairing, int chi_max, const NMFConfig& config);
FactorPair split_svd(const Tensor& fused, Pairing pairing, int chi_max);

/// Contracts a FactorPair back into fused leg order (c1, c2, s, u).
Tensor recombine(const FactorPair& pair, Pairing pairing);

struct CPDecomposition {
  int rank = 0;
  std::array<Eigen::MatrixXd, 3> factors;  // dim_n x rank, unit column sums
  Eigen::VectorXd scale;
  double kl = 0.0;
  std::vector<double> kl_history;

  Tensor reconstruct() const;
};

/// Nonnegative CP decomposition of a rank-3 tensor by KL multiplicative
/// updates; keeps the best of `restarts` starts.
CPDecomposition nncpd(const Tensor& t, int rank, const NMFConfig& config, int restarts = 4,
                      std::uint64_t seed = 0);

/// KL between a nonnegative tensor and a reconstruction of the same shape.
double kl_divergence(const Tensor& v, const Tensor& approx);

}  // namespace ttree
