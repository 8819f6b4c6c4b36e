#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <functional>
#include <vector>

#include "ttree/dataset.hpp"
#include "ttree/tree.hpp"

namespace oracle {

using namespace ttree;

// Sum over every leg index of the product of all tensors and input vectors.
// Born trees return the squared amplitude.
inline double weight(const TensorTree& tree, const Sample& x) {
  // legs: one per site, one per tensor up leg
  const int ns = tree.num_inputs(), nt = tree.num_tensors();
  std::vector<int> dims;
  for (int s = 0; s < ns; ++s) dims.push_back(tree.site_dim(s));
  for (int t = 0; t < nt; ++t) dims.push_back(tree.tensor(t).dim(2));
  std::vector<int> idx(dims.size(), 0);
  auto leg = [&](NodeRef r) { return r.is_site() ? idx[r.index] : idx[ns + r.index]; };
  double amp = 0.0;
  while (true) {
    double term = 1.0;
    for (int s = 0; s < ns && term != 0.0; ++s) term *= x.site_vectors[s][idx[s]];
    for (int t = 0; t < nt && term != 0.0; ++t) {
      const auto& n = tree.node(t);
      term *= tree.tensor(t)(leg(n.left), leg(n.right), idx[ns + t]);
    }
    amp += term;
    std::size_t k = 0;
    while (k < idx.size() && ++idx[k] == dims[k]) idx[k++] = 0;
    if (k == idx.size()) break;
  }
  return tree.mode() == Mode::BornMachine ? amp * amp : amp;
}

inline void for_each_input(const std::vector<int>& dims, const std::function<void(const std::vector<int>&)>& f) {
  std::vector<int> x(dims.size(), 0);
  while (true) {
    f(x);
    std::size_t k = 0;
    while (k < x.size() && ++x[k] == dims[k]) x[k++] = 0;
    if (k == x.size()) break;
  }
}

inline double partition(const TensorTree& tree) {
  double z = 0.0;
  for_each_input(tree.site_dims(), [&](const std::vector<int>& x) { z += weight(tree, one_hot_sample(x, tree.site_dims())); });
  return z;
}

inline Topology chain_topology(int n) {
  Topology t;
  t.num_sites = n;
  t.children.push_back({NodeRef::site(0), NodeRef::site(1)});
  for (int k = 1; k < n - 1; ++k) t.children.push_back({NodeRef::tensor(k - 1), NodeRef::site(k + 1)});
  t.root = n - 2;
  return t;
}

// Tree with every element of every tensor set to `value`.
inline TensorTree constant_tree(const Topology& topo, int chi_in, int chi_max, double value) {
  Rng rng(1);
  TensorTree t = make_tree(topo, chi_in, chi_max, Mode::Nonnegative, rng);
  for (int id = 0; id < t.num_tensors(); ++id)
    for (double& v : t.tensor(id).values()) v = value;
  return t;
}

inline Sample random_vector_sample(const std::vector<int>& dims, Rng& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Sample s;
  for (int d : dims) {
    std::vector<double> v(d);
    for (double& x : v) x = u(rng);
    s.site_vectors.push_back(v);
  }
  return s;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

inline bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace oracle
