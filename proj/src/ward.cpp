#include "ttree/ward.hpp"

#include <cmath>
#include <limits>

#include "ttree/error.hpp"

namespace ttree {

Eigen::MatrixXd hamming_distances(const Dataset& data) {
  const int n = data.num_sites();
  std::vector<std::vector<int>> sym;
  sym.reserve(data.size());
  for (const auto& s : data.samples) sym.push_back(s.symbols());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  const double total = data.total_weight();
  if (sym.empty() || !(total > 0.0)) return d;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double diff = 0.0;
      for (std::size_t k = 0; k < sym.size(); ++k)
        if (sym[k][i] != sym[k][j]) diff += data.samples[k].weight;
      d(i, j) = d(j, i) = diff / total;
    }
  return d;
}

Dendrogram ward_cluster(const Eigen::MatrixXd& distances, const std::vector<std::string>& labels) {
  const int n = static_cast<int>(distances.rows());
  if (n < 2) throw ConfigError("clustering needs at least 2 sites");
  if (static_cast<int>(labels.size()) != n) throw ConfigError("one label per site required");
  Eigen::MatrixXd d = distances;
  std::vector<int> id(n), size(n, 1);
  std::vector<bool> active(n, true);
  for (int i = 0; i < n; ++i) id[i] = i;

  Dendrogram out;
  std::vector<int> node_of(2 * n - 1, -1);
  std::vector<double> height_of(2 * n - 1, 0.0);
  for (int i = 0; i < n; ++i) node_of[i] = out.tree.add_node(-1, labels[i]);

  for (int step = 0; step < n - 1; ++step) {
    int bi = -1, bj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (int j = i + 1; j < n; ++j)
        if (active[j] && d(i, j) < best) {
          best = d(i, j);
          bi = i;
          bj = j;
        }
    }
    const int new_id = n + step;
    out.merges.push_back({id[bi], id[bj], best, size[bi] + size[bj]});

    const int node = out.tree.add_node(-1);
    for (int c : {id[bi], id[bj]}) {
      out.tree.nodes[node_of[c]].parent = node;
      out.tree.nodes[node_of[c]].length = best - height_of[c];
      out.tree.nodes[node].children.push_back(node_of[c]);
    }
    node_of[new_id] = node;
    height_of[new_id] = best;

    for (int k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      const double ni = size[bi], nj = size[bj], nk = size[k];
      const double v = ((ni + nk) * d(bi, k) * d(bi, k) + (nj + nk) * d(bj, k) * d(bj, k) - nk * best * best) /
                       (ni + nj + nk);
      d(bi, k) = d(k, bi) = std::sqrt(std::max(v, 0.0));
    }
    size[bi] += size[bj];
    id[bi] = new_id;
    active[bj] = false;
  }
  out.tree.root = node_of[2 * n - 2];
  return out;
}

Dendrogram ward_cluster(const Dataset& data) {
  std::vector<std::string> labels;
  for (int i = 0; i < data.num_sites(); ++i) labels.push_back(data.site_label(i));
  return ward_cluster(hamming_distances(data), labels);
}

}  // namespace ttree
