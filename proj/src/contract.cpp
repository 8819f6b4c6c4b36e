#include "ttree/contract.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "ttree/error.hpp"
#include "ttree/messages.hpp"

namespace ttree {

namespace {

struct Message {
  Eigen::VectorXd vec;  // single layer
  Eigen::MatrixXd mat;  // doubled layer
  double log_scale = 0.0;
};

double rescale(double* v, Eigen::Index n) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) m = std::max(m, std::abs(v[i]));
  if (m == 0.0) return 0.0;
  for (Eigen::Index i = 0; i < n; ++i) v[i] /= m;
  return std::log(m);
}

void check_sample(const TensorTree& tree, const Sample& sample) {
  if (sample.num_sites() != tree.num_inputs()) {
    throw ConfigError("sample has " + std::to_string(sample.num_sites()) + " sites, tree has " +
                      std::to_string(tree.num_inputs()));
  }
  for (int s = 0; s < tree.num_inputs(); ++s) {
    if (static_cast<int>(sample.site_vectors[s].size()) != tree.site_dim(s)) {
      throw ConfigError("site " + std::to_string(s) + " vector has the wrong dimension");
    }
  }
}

Message site_message(const TensorTree& tree, const Sample* sample, const std::vector<bool>* keep,
                     int site) {
  const int d = tree.site_dim(site);
  const bool ones = sample == nullptr || (keep && !(*keep)[site]);
  Message m;
  if (tree.mode() == Mode::Nonnegative) {
    m.vec = ones ? Eigen::VectorXd::Ones(d)
                 : Eigen::Map<const Eigen::VectorXd>(sample->site_vectors[site].data(), d).eval();
    m.log_scale = rescale(m.vec.data(), d);
  } else if (ones) {
    m.mat = Eigen::MatrixXd::Identity(d, d);
  } else {
    Eigen::Map<const Eigen::VectorXd> v(sample->site_vectors[site].data(), d);
    m.mat = v * v.transpose();
    m.log_scale = rescale(m.mat.data(), m.mat.size());
  }
  return m;
}

// Leaf-to-root pass returning the top scalar's log.
double contract_up(const TensorTree& tree, const Sample* sample, const std::vector<bool>* keep) {
  std::vector<Message> up(tree.num_tensors());
  auto child = [&](NodeRef r) { return r.is_site() ? site_message(tree, sample, keep, r.index) : up[r.index]; };
  for (int id : tree.postorder()) {
    const Tensor& t = tree.tensor(id);
    const Message l = child(tree.node(id).left);
    const Message r = child(tree.node(id).right);
    const int dl = t.dim(0), dr = t.dim(1), du = t.dim(2);
    Message out;
    if (tree.mode() == Mode::Nonnegative) {
      out.vec = Eigen::VectorXd::Zero(du);
      for (int a = 0; a < dl; ++a)
        for (int b = 0; b < dr; ++b)
          for (int u = 0; u < du; ++u) out.vec[u] += t(a, b, u) * l.vec[a] * r.vec[b];
      out.log_scale = l.log_scale + r.log_scale + rescale(out.vec.data(), du);
    } else {
      // M[u, u'] = sum T[a,b,u] T[a',b',u'] L[a,a'] R[b,b']
      Eigen::MatrixXd tm(dl * dr, du);
      for (int a = 0; a < dl; ++a)
        for (int b = 0; b < dr; ++b)
          for (int u = 0; u < du; ++u) tm(a * dr + b, u) = t(a, b, u);
      Eigen::MatrixXd lr(dl * dr, dl * dr);
      for (int a = 0; a < dl; ++a)
        for (int b = 0; b < dr; ++b)
          for (int a2 = 0; a2 < dl; ++a2)
            for (int b2 = 0; b2 < dr; ++b2) lr(a * dr + b, a2 * dr + b2) = l.mat(a, a2) * r.mat(b, b2);
      out.mat = tm.transpose() * lr * tm;
      out.log_scale = l.log_scale + r.log_scale + rescale(out.mat.data(), out.mat.size());
    }
    up[id] = std::move(out);
  }
  const Message& top = up[tree.root()];
  const double v = tree.mode() == Mode::Nonnegative ? top.vec[0] : top.mat(0, 0);
  if (v <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(v) + top.log_scale;
}

}  // namespace

double log_weight(const TensorTree& tree, const Sample& sample) {
  check_sample(tree, sample);
  return contract_up(tree, &sample, nullptr);
}

double log_partition(const TensorTree& tree) {
  const double z = contract_up(tree, nullptr, nullptr);
  if (!std::isfinite(z)) throw NumericalError("partition function is not positive");
  return z;
}

double marginal_log_weight(const TensorTree& tree, const Sample& sample,
                           const std::vector<bool>& keep) {
  check_sample(tree, sample);
  if (static_cast<int>(keep.size()) != tree.num_inputs()) {
    throw ConfigError("keep mask length does not match the number of sites");
  }
  return contract_up(tree, &sample, &keep);
}

Tensor fused_tensor(const TensorTree& tree, int child) {
  const int parent = tree.node(child).parent;
  if (parent < 0) throw ConfigError("tensor " + std::to_string(child) + " has no parent tensor");
  const Tensor& a = tree.tensor(child);
  const Tensor& p = tree.tensor(parent);
  const bool left = tree.node(parent).left == NodeRef::tensor(child);
  const int d1 = a.dim(0), d2 = a.dim(1), dm = a.dim(2);
  const int ds = left ? p.dim(1) : p.dim(0), du = p.dim(2);
  Tensor f({d1, d2, ds, du});
  for (int i = 0; i < d1; ++i)
    for (int j = 0; j < d2; ++j)
      for (int m = 0; m < dm; ++m) {
        const double am = a(i, j, m);
        if (am == 0.0) continue;
        for (int s = 0; s < ds; ++s)
          for (int u = 0; u < du; ++u) f(i, j, s, u) += am * (left ? p(m, s, u) : p(s, m, u));
      }
  return f;
}

Environment environment(const TensorTree& tree, Target target, const Sample* sample) {
  if (target.tensor < 0 || target.tensor >= tree.num_tensors()) {
    throw ConfigError("target tensor " + std::to_string(target.tensor) + " not found");
  }
  Dataset one;
  one.site_dims = tree.site_dims();
  if (sample) {
    check_sample(tree, *sample);
    one.samples.push_back(*sample);
  } else {
    Sample ones;
    for (int d : tree.site_dims()) ones.site_vectors.emplace_back(d, 1.0);
    one.samples.push_back(std::move(ones));
  }
  const std::vector<int> batch{0};
  BatchMessages msgs(tree, one, batch);

  std::vector<const LegBatch*> legs;
  Tensor t;
  if (target.fused) {
    auto f = msgs.fused_legs(target.tensor);
    legs.assign(f.begin(), f.end());
    t = fused_tensor(tree, target.tensor);
  } else {
    auto f = msgs.tensor_legs(target.tensor);
    legs.assign(f.begin(), f.end());
    t = tree.tensor(target.tensor);
  }
  const int r = static_cast<int>(legs.size());
  const Mode mode = tree.mode();

  Environment env;
  env.values = Tensor(t.shape());
  if (sample || mode == Mode::Nonnegative) {
    std::vector<const double*> vecs(r);
    for (int a = 0; a < r; ++a) {
      vecs[a] = sample ? legs[a]->values.row(0).data() : legs[a]->marginal.data();
      env.log_scale += sample ? legs[a]->log_scale[0] : legs[a]->marginal_log_scale;
    }
    std::vector<int> idx(r, 0);
    for (std::size_t i = 0; i < t.size(); ++i) {
      double v = 1.0;
      for (int a = 0; a < r; ++a) v *= vecs[a][idx[a]];
      env.values[i] = v;
      for (int a = r - 1; a >= 0; --a) {
        if (++idx[a] < t.dim(a)) break;
        idx[a] = 0;
      }
    }
    if (mode == Mode::BornMachine) {
      // d|psi|^2/dT = 2 psi dpsi/dT
      const double amp = inner(env.values, t);
      env.values *= 2.0 * amp;
      env.log_scale *= 2.0;
    }
  } else {
    // dZ/dT = 2 (T contracted with the Gram matrices of every leg)
    std::vector<double> cur(t.values().begin(), t.values().end()), next(cur.size());
    for (int a = 0; a < r; ++a) {
      int pre = 1, post = 1;
      for (int b = 0; b < a; ++b) pre *= t.dim(b);
      for (int b = a + 1; b < r; ++b) post *= t.dim(b);
      const int d = t.dim(a);
      const auto& g = legs[a]->gram;
      for (int p = 0; p < pre; ++p)
        for (int i = 0; i < d; ++i)
          for (int q = 0; q < post; ++q) {
            double acc = 0.0;
            for (int j = 0; j < d; ++j)
              acc += g(i, j) * cur[(static_cast<std::size_t>(p) * d + j) * post + q];
            next[(static_cast<std::size_t>(p) * d + i) * post + q] = acc;
          }
      cur.swap(next);
      env.log_scale += legs[a]->marginal_log_scale;
    }
    for (std::size_t i = 0; i < t.size(); ++i) env.values[i] = 2.0 * cur[i];
  }
  return env;
}

}  // namespace ttree
