#include "ttree/hmm.hpp"

#include <algorithm>
#include <cmath>

#include "ttree/error.hpp"

namespace ttree {

namespace {

void normalize_columns(Eigen::MatrixXd& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const double s = m.col(c).sum();
    if (s > 0.0) {
      m.col(c) /= s;
    } else {
      m.col(c).setConstant(1.0 / static_cast<double>(m.rows()));
    }
  }
}

}  // namespace

HmmExtraction extract_hmm(const TensorTree& model, int rank, const NMFConfig& config,
                          double flag_threshold, std::uint64_t seed) {
  if (model.mode() != Mode::Nonnegative) {
    throw ConfigError("HMM extraction needs a nonnegative model; train with natt or hybrid");
  }
  if (rank < 1) throw ConfigError("rank must be positive");
  HmmExtraction out;
  const int n = model.num_tensors();
  out.decompositions.resize(n);
  for (int id = 0; id < n; ++id) {
    const Tensor& t = model.tensor(id);
    out.decompositions[id] = nncpd(t, rank, config, 4, seed + static_cast<std::uint64_t>(id));
    const double mass = std::max(t.sum(), 1e-300);
    if (out.decompositions[id].kl / mass > flag_threshold) out.inexact.push_back(id);
  }

  // Subtree mass per hidden state, and marginal message on each up leg.
  std::vector<Eigen::VectorXd> state_mass(n), up_marginal(n);
  auto leg_marginal = [&](NodeRef r) -> Eigen::VectorXd {
    return r.is_site() ? Eigen::VectorXd::Ones(model.site_dim(r.index)) : up_marginal[r.index];
  };
  for (int id : model.postorder()) {
    const auto& cp = out.decompositions[id];
    const Eigen::VectorXd ml = leg_marginal(model.node(id).left);
    const Eigen::VectorXd mr = leg_marginal(model.node(id).right);
    Eigen::VectorXd mass(rank);
    for (int h = 0; h < rank; ++h) mass[h] = cp.scale[h] * cp.factors[0].col(h).dot(ml) * cp.factors[1].col(h).dot(mr);
    state_mass[id] = mass;
    up_marginal[id] = cp.factors[2] * mass;
    const double top = up_marginal[id].maxCoeff();
    if (top > 0.0) {
      up_marginal[id] /= top;
      state_mass[id] /= top;
    }
  }

  for (int id : model.preorder()) {
    const auto& cp = out.decompositions[id];
    const NodeRef kids[2] = {model.node(id).left, model.node(id).right};
    for (int side = 0; side < 2; ++side) {
      const Eigen::MatrixXd& facing = cp.factors[side];
      TransitionMatrix tm;
      tm.parent = id;
      tm.child = kids[side];
      if (kids[side].is_site()) {
        tm.entries = facing;
      } else {
        const int c = kids[side].index;
        const auto& ccp = out.decompositions[c];
        tm.entries = state_mass[c].asDiagonal() * (ccp.factors[2].transpose() * facing);
      }
      normalize_columns(tm.entries);
      out.edges.push_back(std::move(tm));
    }
  }
  const int root = model.root();
  out.root_distribution = state_mass[root].cwiseProduct(out.decompositions[root].factors[2].row(0).transpose());
  const double z = out.root_distribution.sum();
  if (z > 0.0) out.root_distribution /= z;
  return out;
}

double permutation_closeness(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw ConfigError("permutation closeness needs a square matrix");
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  return es.eigenvalues().cwiseAbs().minCoeff();
}

}  // namespace ttree
