#include "ttree/structure.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "ttree/contract.hpp"
#include "ttree/error.hpp"

namespace ttree {

FusedBond fuse_bond(const TensorTree& tree, int bond) {
  if (bond < 0 || bond >= tree.num_tensors()) {
    throw ConfigError("bond " + std::to_string(bond) + " not found");
  }
  const int parent = tree.node(bond).parent;
  if (parent < 0) throw ConfigError("bond " + std::to_string(bond) + " is the top leg, not an internal bond");
  const auto& pn = tree.node(parent);
  FusedBond f;
  f.child = bond;
  f.parent = parent;
  f.lower = {tree.node(bond).left, tree.node(bond).right,
             pn.left == NodeRef::tensor(bond) ? pn.right : pn.left};
  f.tensor = fused_tensor(tree, bond);
  return f;
}

LocalEval gradient_step(Tensor& t, std::span<const LegBatch* const> legs,
                        std::span<const double> weights, Mode mode, OptState& state) {
  LocalEval ev = local_nll(t, legs, weights, mode, true);
  if (mode == Mode::Nonnegative) {
    step_nonneg(t, state, projected_gradient(t, ev.grad));
  } else {
    step_unconstrained(t, state, ev.grad);
  }
  return ev;
}

std::vector<double> optimize_fused(Tensor& fused, std::span<const LegBatch* const> legs,
                                   std::span<const double> weights, Mode mode, OptState& state,
                                   int n_steps) {
  std::vector<double> trace;
  for (int i = 0; i < n_steps; ++i) trace.push_back(gradient_step(fused, legs, weights, mode, state).nll);
  return trace;
}

BondInformation empirical_entropies(const TensorTree& tree, int bond, const Dataset& data) {
  if (bond < 0 || bond >= tree.num_tensors() || tree.node(bond).parent < 0) {
    throw ConfigError("bond " + std::to_string(bond) + " is not an internal bond");
  }
  const auto idx = all_indices(data.size());
  BatchMessages msgs(tree, data, idx);
  BondInformation info =
      bond_information(msgs.up(NodeRef::tensor(bond)), msgs.down(bond), msgs.weights(), tree.mode());
  // Clamping keeps selection usable; the reported joint entropy is exact.
  if (info.zero_weight_samples > 0 && std::isinf(nll(tree, data).value)) {
    info.h_ab = std::numeric_limits<double>::infinity();
  }
  return info;
}

double bond_mi(const TensorTree& tree, int bond, const Dataset& data) {
  return empirical_entropies(tree, bond, data).mi();
}

namespace {

double schmidt_entropy(const Eigen::MatrixXd& m) {
  const Eigen::VectorXd p = thin_svd(m, false).s.array().square();
  const double total = p.sum();
  if (!(total > 0.0)) throw NumericalError("entanglement entropy of an all-zero tensor");
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double q = p[i] / total;
    if (q > 0.0) h -= q * std::log(q);
  }
  return h;
}

Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (g + g.transpose()));
  const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double bond_ee(const Tensor& fused, Pairing pairing) {
  return schmidt_entropy(pairing_matrix(fused, pairing));
}

double bond_ee(const Tensor& fused, Pairing pairing, const std::array<Eigen::MatrixXd, 4>& grams) {
  Tensor t = fused;
  for (int a = 0; a < 4; ++a) {
    const Eigen::MatrixXd r = sqrt_psd(grams[a]);
    Tensor next(t.shape());
    int pre = 1, post = 1;
    for (int b = 0; b < a; ++b) pre *= t.dim(b);
    for (int b = a + 1; b < 4; ++b) post *= t.dim(b);
    const int d = t.dim(a);
    for (int p = 0; p < pre; ++p)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          const double rij = r(i, j);
          if (rij == 0.0) continue;
          for (int q = 0; q < post; ++q)
            next[(static_cast<std::size_t>(p) * d + i) * post + q] +=
                rij * t[(static_cast<std::size_t>(p) * d + j) * post + q];
        }
    t = std::move(next);
  }
  return bond_ee(t, pairing);
}

namespace {

struct CandidateRun {
  GeometryCandidate cand;
  LegBatch up_a;
  LegBatch down_b;
  int zero_weight = 0;
};

// Gauge change on the new bond that equalizes the two sides of every bond
// index, then unit max-norm on each tensor. Leaves the model unchanged.
void balance(FactorPair& pair) {
  Tensor& a = pair.left;
  Tensor& b = pair.right;
  const int k = pair.bond_dim;
  const int na = a.dim(0) * a.dim(1), nb = b.dim(1) * b.dim(2);
  for (int m = 0; m < k; ++m) {
    double ra = 0.0, rb = 0.0;
    for (int i = 0; i < na; ++i) ra = std::max(ra, std::abs(a[static_cast<std::size_t>(i) * k + m]));
    for (int j = 0; j < nb; ++j) rb = std::max(rb, std::abs(b[static_cast<std::size_t>(m) * nb + j]));
    if (!(ra > 0.0) || !(rb > 0.0)) continue;
    const double c = std::sqrt(rb / ra);
    for (int i = 0; i < na; ++i) a[static_cast<std::size_t>(i) * k + m] *= c;
    for (int j = 0; j < nb; ++j) b[static_cast<std::size_t>(m) * nb + j] /= c;
  }
  if (const double ma = a.max_abs(); ma > 0.0) a *= 1.0 / ma;
  if (const double mb = b.max_abs(); mb > 0.0) b *= 1.0 / mb;
}

CandidateRun run_candidate(const Tensor& fused, Pairing pairing,
                           const std::array<const LegBatch*, 4>& legs,
                           std::span<const double> weights, Mode mode,
                           const StructureConfig& config) {
  CandidateRun run;
  run.cand.pairing = pairing;
  FactorPair pair = mode == Mode::Nonnegative ? split_nonneg(fused, pairing, config.chi_max, config.nmf)
                                              : split_svd(fused, pairing, config.chi_max);
  balance(pair);
  const auto ax = pairing_axes(pairing);
  const LegBatch* p1 = legs[ax[0]];
  const LegBatch* p2 = legs[ax[1]];
  const LegBatch* other = legs[ax[2]];
  const LegBatch* top = legs[3];

  Tensor& a = pair.left;
  Tensor& b = pair.right;
  OptState sa(a.shape(), config.adam), sb(b.shape(), config.adam);
  for (int round = 0; round < config.pair_rounds; ++round) {
    {
      const LegBatch* in[3] = {nullptr, other, top};
      const LegBatch down = propagate(b, 0, in, mode);
      const LegBatch* la[3] = {p1, p2, &down};
      gradient_step(a, la, weights, mode, sa);
    }
    {
      const LegBatch* in[3] = {p1, p2, nullptr};
      const LegBatch up = propagate(a, 2, in, mode);
      const LegBatch* lb[3] = {&up, other, top};
      gradient_step(b, lb, weights, mode, sb);
    }
  }
  {
    const LegBatch* in[3] = {p1, p2, nullptr};
    run.up_a = propagate(a, 2, in, mode);
  }
  {
    const LegBatch* in[3] = {nullptr, other, top};
    run.down_b = propagate(b, 0, in, mode);
  }
  const LegBatch* lb[3] = {&run.up_a, other, top};
  const LocalEval ev = local_nll(b, lb, weights, mode, false);
  run.cand.nll = ev.nll;
  const BondInformation info = bond_information(run.up_a, run.down_b, weights, mode);
  run.zero_weight = ev.zero_weight_samples + info.zero_weight_samples;
  run.cand.bond_mi = info.mi();
  if (mode == Mode::BornMachine) run.cand.bond_ee = entanglement_entropy(run.up_a.gram, run.down_b.gram);
  run.cand.pair = std::move(pair);
  run.cand.ok = a.all_finite() && b.all_finite() && std::isfinite(run.cand.bond_mi);
  return run;
}

}  // namespace

BondVisit propose_and_select(TensorTree& tree, int bond, const Dataset& data,
                             std::span<const int> batch, const StructureConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const Mode mode = tree.mode();
  FusedBond fb = fuse_bond(tree, bond);
  BatchMessages msgs(tree, data, batch);
  const auto legs = msgs.fused_legs(bond);
  const auto& weights = msgs.weights();

  // The model does not depend on this scale; fixing it keeps step sizes
  // comparable across visits.
  if (const double m = fb.tensor.max_abs(); m > 0.0) fb.tensor *= 1.0 / m;
  OptState state(fb.tensor.shape(), config.adam);
  optimize_fused(fb.tensor, legs, weights, mode, state, config.fused_steps);
  if (!fb.tensor.all_finite()) throw NumericalError("fused tensor became non-finite");

  BondVisit visit;
  std::vector<CandidateRun> runs;
  const int n_candidates = config.structure_opt ? 3 : 1;
  for (int c = 0; c < n_candidates; ++c) {
    try {
      CandidateRun r = run_candidate(fb.tensor, kPairings[c], legs, weights, mode, config);
      visit.zero_weight_samples += r.zero_weight;
      if (r.cand.ok) {
        visit.candidate_mi[c] = r.cand.bond_mi;
        runs.push_back(std::move(r));
      }
    } catch (const NumericalError&) {
      // candidate skipped
    }
  }

  visit.report.bond = bond;
  if (runs.empty()) {
    // Keep the original tensors.
    const BondInformation info = bond_information(msgs.up(NodeRef::tensor(bond)), msgs.down(bond),
                                                  weights, mode);
    visit.report.mi_raw = info.mi();
    visit.report.mi = std::max(info.mi(), -0.05);
    visit.report.chi = tree.tensor(bond).dim(2);
    if (mode == Mode::BornMachine) {
      visit.report.ee = entanglement_entropy(msgs.up(NodeRef::tensor(bond)).gram, msgs.down(bond).gram);
    }
    const auto tl = msgs.tensor_legs(bond);
    visit.nll_after = local_nll(tree.tensor(bond), tl, weights, mode, false).nll;
  } else {
    std::size_t best = 0;
    for (std::size_t i = 1; i < runs.size(); ++i)
      if (std::max(runs[i].cand.bond_mi, 0.0) < std::max(runs[best].cand.bond_mi, 0.0)) best = i;
    if (runs[0].cand.pairing == Pairing::IJ_KL &&
        std::max(runs[0].cand.bond_mi, 0.0) <= std::max(runs[best].cand.bond_mi, 0.0) + config.tie_tol) {
      best = 0;
    }
    GeometryCandidate& chosen = runs[best].cand;
    const auto ax = pairing_axes(chosen.pairing);
    const std::array<NodeRef, 3>& low = fb.lower;
    tree.rewire(bond, low[ax[0]], low[ax[1]], std::move(chosen.pair.left));
    tree.rewire(fb.parent, NodeRef::tensor(bond), low[ax[2]], std::move(chosen.pair.right));
    visit.chosen = chosen.pairing;
    visit.nll_after = chosen.nll;
    visit.report.mi_raw = chosen.bond_mi;
    visit.report.mi = std::max(chosen.bond_mi, -0.05);
    visit.report.ee = chosen.bond_ee;
    visit.report.chi = chosen.pair.bond_dim;
  }
  visit.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return visit;
}

BatchSampler::BatchSampler(std::size_t num_samples, int batch_size, Rng rng)
    : order_(all_indices(num_samples)), batch_size_(batch_size), rng_(std::move(rng)) {
  if (num_samples == 0) throw ConfigError("cannot sample batches from an empty dataset");
  if (batch_size < 1) throw ConfigError("batch size must be positive");
  batch_size_ = std::min<int>(batch_size, static_cast<int>(num_samples));
  std::shuffle(order_.begin(), order_.end(), rng_);
}

std::vector<int> BatchSampler::next() {
  if (pos_ >= order_.size()) {
    std::shuffle(order_.begin(), order_.end(), rng_);
    pos_ = 0;
  }
  const std::size_t end = std::min(order_.size(), pos_ + static_cast<std::size_t>(batch_size_));
  std::vector<int> batch(order_.begin() + static_cast<std::ptrdiff_t>(pos_),
                         order_.begin() + static_cast<std::ptrdiff_t>(end));
  pos_ = end;
  std::sort(batch.begin(), batch.end());
  return batch;
}

std::vector<BondReport> sweep(TensorTree& tree, const Dataset& data, const StructureConfig& config,
                              BatchSampler& sampler, int sweep_index, const VisitFn& on_visit,
                              int max_visits) {
  std::vector<BondReport> reports;
  std::vector<bool> visited(tree.num_tensors(), false);
  std::vector<int> stack;
  auto push_children = [&](int id) {
    const auto& n = tree.node(id);
    for (NodeRef c : {n.right, n.left})
      if (c.is_tensor() && !visited[c.index]) stack.push_back(c.index);
  };
  auto visit = [&](int bond) {
    visited[bond] = true;
    const std::vector<int> batch = sampler.next();
    BondVisit v = propose_and_select(tree, bond, data, batch, config);
    v.sweep = sweep_index;
    reports.push_back(v.report);
    if (on_visit) on_visit(v);
    const int parent = tree.node(bond).parent;
    push_children(parent);
    push_children(bond);
  };
  auto budget_left = [&] { return max_visits < 0 || static_cast<int>(reports.size()) < max_visits; };

  push_children(tree.root());
  while (!stack.empty() && budget_left()) {
    const int id = stack.back();
    stack.pop_back();
    if (visited[id] || tree.node(id).parent < 0) continue;
    visit(id);
  }
  for (int id = 0; id < tree.num_tensors() && budget_left(); ++id)
    if (!visited[id] && tree.node(id).parent >= 0) visit(id);
  return reports;
}

}  // namespace ttree
