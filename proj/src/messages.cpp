#include "ttree/messages.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "ttree/error.hpp"

namespace ttree {

namespace {

struct Step {
  int axis;
  int pre;
  int d;
  int post;
};

// Contract axes from last to first, skipping `open` (-1 contracts all).
std::vector<Step> plan(const std::vector<int>& shape, int open) {
  std::vector<Step> steps;
  const int r = static_cast<int>(shape.size());
  for (int a = r - 1; a >= 0; --a) {
    if (a == open) continue;
    int pre = 1;
    for (int b = 0; b < a; ++b) pre *= shape[b];
    const int post = (open > a) ? shape[open] : 1;
    steps.push_back({a, pre, shape[a], post});
  }
  return steps;
}

void contract_step(const double* in, const Step& s, const double* v, double* out) {
  std::fill(out, out + static_cast<std::size_t>(s.pre) * s.post, 0.0);
  for (int p = 0; p < s.pre; ++p) {
    double* o = out + static_cast<std::size_t>(p) * s.post;
    for (int k = 0; k < s.d; ++k) {
      const double vk = v[k];
      if (vk == 0.0) continue;
      const double* row = in + (static_cast<std::size_t>(p) * s.d + k) * s.post;
      for (int q = 0; q < s.post; ++q) o[q] += vk * row[q];
    }
  }
}

// out[p, a, q] = sum_b m(a, b) in[p, b, q]
void mode_product(const double* in, int pre, int d, int post, const Eigen::MatrixXd& m, double* out) {
  for (int p = 0; p < pre; ++p) {
    for (int a = 0; a < d; ++a) {
      double* o = out + (static_cast<std::size_t>(p) * d + a) * post;
      std::fill(o, o + post, 0.0);
      for (int b = 0; b < d; ++b) {
        const double mab = m(a, b);
        if (mab == 0.0) continue;
        const double* row = in + (static_cast<std::size_t>(p) * d + b) * post;
        for (int q = 0; q < post; ++q) o[q] += mab * row[q];
      }
    }
  }
}

// Applies the Gram matrix of every leg except `open` along its axis.
std::vector<double> apply_grams(const Tensor& t, int open, std::span<const LegBatch* const> legs,
                                double& log_scale) {
  const int r = t.rank();
  std::vector<double> cur(t.values().begin(), t.values().end());
  std::vector<double> next(cur.size());
  log_scale = 0.0;
  for (int a = 0; a < r; ++a) {
    if (a == open) continue;
    int pre = 1, post = 1;
    for (int b = 0; b < a; ++b) pre *= t.dim(b);
    for (int b = a + 1; b < r; ++b) post *= t.dim(b);
    mode_product(cur.data(), pre, t.dim(a), post, legs[a]->gram, next.data());
    cur.swap(next);
    log_scale += legs[a]->marginal_log_scale;
  }
  return cur;
}

double normalize(double* v, int n) {
  double m = 0.0;
  for (int i = 0; i < n; ++i) m = std::max(m, std::abs(v[i]));
  if (m == 0.0 || !std::isfinite(m)) return 0.0;
  for (int i = 0; i < n; ++i) v[i] /= m;
  return std::log(m);
}

}  // namespace

std::vector<int> all_indices(std::size_t n) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

LegBatch site_leg(const Dataset& data, std::span<const int> batch, int site, Mode mode) {
  const int d = data.site_dims[site];
  LegBatch leg;
  leg.values.resize(static_cast<Eigen::Index>(batch.size()), d);
  leg.log_scale.assign(batch.size(), 0.0);
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const auto& v = data.samples[batch[r]].site_vectors[site];
    for (int k = 0; k < d; ++k) leg.values(static_cast<Eigen::Index>(r), k) = v[k];
    leg.log_scale[r] = normalize(leg.values.row(static_cast<Eigen::Index>(r)).data(), d);
  }
  if (mode == Mode::Nonnegative) {
    leg.marginal = Eigen::VectorXd::Ones(d);
  } else {
    leg.gram = Eigen::MatrixXd::Identity(d, d);
  }
  return leg;
}

LegBatch top_leg(int num_samples, Mode mode) {
  LegBatch leg;
  leg.values = RowMatrix::Ones(num_samples, 1);
  leg.log_scale.assign(num_samples, 0.0);
  if (mode == Mode::Nonnegative) {
    leg.marginal = Eigen::VectorXd::Ones(1);
  } else {
    leg.gram = Eigen::MatrixXd::Ones(1, 1);
  }
  return leg;
}

LegBatch propagate(const Tensor& t, int open_axis, std::span<const LegBatch* const> legs,
                   Mode mode) {
  const int r = t.rank();
  const int d_out = t.dim(open_axis);
  int n = -1;
  for (int a = 0; a < r; ++a)
    if (a != open_axis) n = legs[a]->num_samples();

  const auto steps = plan(t.shape(), open_axis);
  LegBatch out;
  out.values.resize(n, d_out);
  out.log_scale.assign(n, 0.0);
  std::vector<double> buf_a(t.size()), buf_b(t.size());

  auto run = [&](auto&& vec_for_axis, double* result) {
    const double* in = t.data();
    double* dst = buf_a.data();
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const bool last = i + 1 == steps.size();
      double* target = last ? result : dst;
      contract_step(in, steps[i], vec_for_axis(steps[i].axis), target);
      in = target;
      dst = (dst == buf_a.data()) ? buf_b.data() : buf_a.data();
    }
  };

  for (int s = 0; s < n; ++s) {
    double* row = out.values.row(s).data();
    run([&](int a) { return legs[a]->values.row(s).data(); }, row);
    double ls = 0.0;
    for (int a = 0; a < r; ++a)
      if (a != open_axis) ls += legs[a]->log_scale[s];
    out.log_scale[s] = ls + normalize(row, d_out);
  }

  if (mode == Mode::Nonnegative) {
    out.marginal.resize(d_out);
    run([&](int a) { return legs[a]->marginal.data(); }, out.marginal.data());
    double ls = 0.0;
    for (int a = 0; a < r; ++a)
      if (a != open_axis) ls += legs[a]->marginal_log_scale;
    out.marginal_log_scale = ls + normalize(out.marginal.data(), d_out);
  } else {
    double ls = 0.0;
    std::vector<double> y = apply_grams(t, open_axis, legs, ls);
    int pre = 1, post = 1;
    for (int b = 0; b < open_axis; ++b) pre *= t.dim(b);
    for (int b = open_axis + 1; b < r; ++b) post *= t.dim(b);
    out.gram = Eigen::MatrixXd::Zero(d_out, d_out);
    for (int p = 0; p < pre; ++p) {
      for (int k = 0; k < d_out; ++k) {
        const double* tk = t.data() + (static_cast<std::size_t>(p) * d_out + k) * post;
        for (int k2 = 0; k2 < d_out; ++k2) {
          const double* yk = y.data() + (static_cast<std::size_t>(p) * d_out + k2) * post;
          double acc = 0.0;
          for (int q = 0; q < post; ++q) acc += tk[q] * yk[q];
          out.gram(k, k2) += acc;
        }
      }
    }
    out.gram = 0.5 * (out.gram + out.gram.transpose());
    out.marginal_log_scale = ls + normalize(out.gram.data(), static_cast<int>(out.gram.size()));
  }
  return out;
}

BatchMessages::BatchMessages(const TensorTree& tree, const Dataset& data, std::span<const int> batch)
    : tree_(&tree) {
  const Mode mode = tree.mode();
  const int n = static_cast<int>(batch.size());
  weights_.resize(n);
  for (int i = 0; i < n; ++i) weights_[i] = data.samples[batch[i]].weight;

  sites_.reserve(tree.num_inputs());
  for (int s = 0; s < tree.num_inputs(); ++s) sites_.push_back(site_leg(data, batch, s, mode));

  up_.resize(tree.num_tensors());
  for (int id : tree.postorder()) {
    const auto& node = tree.node(id);
    const LegBatch* legs[3] = {&up(node.left), &up(node.right), nullptr};
    up_[id] = propagate(tree.tensor(id), 2, legs, mode);
  }

  down_.resize(tree.num_tensors());
  down_[tree.root()] = top_leg(n, mode);
  for (int id : tree.preorder()) {
    const auto& node = tree.node(id);
    if (node.left.is_tensor()) {
      const LegBatch* legs[3] = {nullptr, &up(node.right), &down_[id]};
      down_[node.left.index] = propagate(tree.tensor(id), 0, legs, mode);
    }
    if (node.right.is_tensor()) {
      const LegBatch* legs[3] = {&up(node.left), nullptr, &down_[id]};
      down_[node.right.index] = propagate(tree.tensor(id), 1, legs, mode);
    }
  }
}

std::array<const LegBatch*, 3> BatchMessages::tensor_legs(int id) const {
  const auto& node = tree_->node(id);
  return {&up(node.left), &up(node.right), &down_[id]};
}

std::array<const LegBatch*, 4> BatchMessages::fused_legs(int child) const {
  const auto& node = tree_->node(child);
  const int parent = node.parent;
  if (parent < 0) throw ConfigError("fused bond requires a non-root tensor");
  const auto& pnode = tree_->node(parent);
  const NodeRef sibling = pnode.left == NodeRef::tensor(child) ? pnode.right : pnode.left;
  return {&up(node.left), &up(node.right), &up(sibling), &down_[parent]};
}

LocalEval local_nll(const Tensor& t, std::span<const LegBatch* const> legs,
                    std::span<const double> weights, Mode mode, bool want_grad) {
  const int r = t.rank();
  const int n = static_cast<int>(weights.size());
  const double total_w = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total_w > 0.0)) throw ConfigError("batch has zero total weight");

  LocalEval ev;
  if (want_grad) ev.grad = Tensor(t.shape());
  const auto steps = plan(t.shape(), -1);
  std::vector<double> buf_a(t.size()), buf_b(t.size());
  auto contract_all = [&](auto&& vec_for_axis) {
    const double* in = t.data();
    double* dst = buf_a.data();
    for (const auto& st : steps) {
      contract_step(in, st, vec_for_axis(st.axis), dst);
      in = dst;
      dst = (dst == buf_a.data()) ? buf_b.data() : buf_a.data();
    }
    return in[0];
  };
  std::vector<double> outer(t.size()), outer_tmp(t.size());
  auto build_outer = [&](auto&& vec_for_axis) {
    int len = t.dim(0);
    const double* v0 = vec_for_axis(0);
    std::copy(v0, v0 + len, outer.begin());
    for (int a = 1; a < r; ++a) {
      const double* va = vec_for_axis(a);
      const int d = t.dim(a);
      for (int i = 0; i < len; ++i)
        for (int j = 0; j < d; ++j) outer_tmp[static_cast<std::size_t>(i) * d + j] = outer[i] * va[j];
      len *= d;
      std::swap(outer, outer_tmp);
    }
  };

  // Partition function part.
  double z_hat = 0.0;
  double z_log = 0.0;
  for (int a = 0; a < r; ++a) z_log += legs[a]->marginal_log_scale;
  if (mode == Mode::Nonnegative) {
    z_hat = contract_all([&](int a) { return legs[a]->marginal.data(); });
    if (want_grad && z_hat > 0.0) {
      build_outer([&](int a) { return legs[a]->marginal.data(); });
      for (std::size_t i = 0; i < t.size(); ++i) ev.grad[i] = outer[i] / z_hat;
    }
  } else {
    double ls = 0.0;
    std::vector<double> y = apply_grams(t, -1, legs, ls);
    z_hat = std::inner_product(y.begin(), y.end(), t.values().begin(), 0.0);
    if (want_grad && z_hat > 0.0) {
      for (std::size_t i = 0; i < t.size(); ++i) ev.grad[i] = 2.0 * y[i] / z_hat;
    }
  }
  if (!(z_hat > 0.0) || !std::isfinite(z_hat)) {
    throw NumericalError("partition function is not positive; tensors are corrupt");
  }
  ev.log_z = std::log(z_hat) + z_log;

  double sum_log_w = 0.0;
  for (int s = 0; s < n; ++s) {
    auto vec = [&](int a) { return legs[a]->values.row(s).data(); };
    const double amp = contract_all(vec);
    double scale = 0.0;
    for (int a = 0; a < r; ++a) scale += legs[a]->log_scale[s];
    double coef = 0.0;
    if (mode == Mode::Nonnegative) {
      double w = amp;
      if (!(w > kMinWeight)) {
        ++ev.zero_weight_samples;
        w = kMinWeight;
      }
      sum_log_w += weights[s] * (std::log(w) + scale);
      coef = 1.0 / w;
    } else {
      double a = std::abs(amp);
      const double floor = std::sqrt(kMinWeight);
      if (!(a > floor)) {
        ++ev.zero_weight_samples;
        a = floor;
      }
      sum_log_w += weights[s] * 2.0 * (std::log(a) + scale);
      coef = 2.0 / (amp < 0.0 ? -a : a);
    }
    if (want_grad) {
      build_outer(vec);
      const double c = weights[s] * coef / total_w;
      for (std::size_t i = 0; i < t.size(); ++i) ev.grad[i] -= c * outer[i];
    }
  }
  ev.nll = ev.log_z - sum_log_w / total_w;
  return ev;
}

BondInformation bond_information(const LegBatch& below, const LegBatch& above,
                                 std::span<const double> weights, Mode mode) {
  const int n = static_cast<int>(weights.size());
  const double total_w = std::accumulate(weights.begin(), weights.end(), 0.0);
  BondInformation info;
  auto clamp_log = [&](double x) {
    if (!(x > kMinWeight)) {
      ++info.zero_weight_samples;
      return std::log(kMinWeight);
    }
    return std::log(x);
  };

  double log_z = 0.0;
  if (mode == Mode::Nonnegative) {
    log_z = std::log(below.marginal.dot(above.marginal)) + below.marginal_log_scale +
            above.marginal_log_scale;
  } else {
    log_z = std::log(below.gram.cwiseProduct(above.gram).sum()) + below.marginal_log_scale +
            above.marginal_log_scale;
  }
  if (!std::isfinite(log_z)) throw NumericalError("bond partition function is not positive");

  double s_ab = 0.0, s_a = 0.0, s_b = 0.0;
  Eigen::VectorXd u, d;
  for (int s = 0; s < n; ++s) {
    u = below.values.row(s).transpose();
    d = above.values.row(s).transpose();
    const double su = below.log_scale[s];
    const double sd = above.log_scale[s];
    double l_ab, l_a, l_b;
    if (mode == Mode::Nonnegative) {
      l_ab = clamp_log(u.dot(d)) + su + sd;
      l_a = clamp_log(u.dot(above.marginal)) + su + above.marginal_log_scale;
      l_b = clamp_log(below.marginal.dot(d)) + below.marginal_log_scale + sd;
    } else {
      const double amp = u.dot(d);
      l_ab = clamp_log(amp * amp) + 2.0 * (su + sd);
      l_a = clamp_log(u.dot(above.gram * u)) + 2.0 * su + above.marginal_log_scale;
      l_b = clamp_log(d.dot(below.gram * d)) + below.marginal_log_scale + 2.0 * sd;
    }
    s_ab += weights[s] * (l_ab - log_z);
    s_a += weights[s] * (l_a - log_z);
    s_b += weights[s] * (l_b - log_z);
  }
  info.h_ab = -s_ab / total_w;
  info.h_a = -s_a / total_w;
  info.h_b = -s_b / total_w;
  return info;
}

double entanglement_entropy(const Eigen::MatrixXd& gram_below, const Eigen::MatrixXd& gram_above) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eb(gram_below);
  Eigen::VectorXd lam = eb.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd root = eb.eigenvectors() * lam.asDiagonal() * eb.eigenvectors().transpose();
  Eigen::MatrixXd s = root * gram_above * root;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (s + s.transpose()), Eigen::EigenvaluesOnly);
  Eigen::VectorXd p = es.eigenvalues().cwiseMax(0.0);
  const double total = p.sum();
  if (!(total > 0.0)) throw NumericalError("entanglement entropy of a zero state");
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double q = p[i] / total;
    if (q > 0.0) h -= q * std::log(q);
  }
  return h;
}

}  // namespace ttree
