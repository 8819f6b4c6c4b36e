#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ttree/dataset.hpp"
#include "ttree/leaf_tree.hpp"

namespace ttree {

struct Merge {
  int a = 0;  // cluster ids: sites are 0..n-1, merge k creates n+k
  int b = 0;
  double height = 0.0;
  int size = 0;
};

struct Dendrogram {
  std::vector<Merge> merges;
  /// Branch lengths are height differences.
  LeafTree tree;
};

/// Weighted fraction of samples in which two sites carry different symbols.
/// Non-one-hot vectors count as one extra symbol.
Eigen::MatrixXd hamming_distances(const Dataset& data);

/// Agglomerative Ward clustering of sites (Lance-Williams update).
Dendrogram ward_cluster(const Eigen::MatrixXd& distances, const std::vector<std::string>& labels);
Dendrogram ward_cluster(const Dataset& data);

}  // namespace ttree
