#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ttree/dataset.hpp"
#include "ttree/tree.hpp"

namespace ttree {

/// Leaf-labeled rooted tree with unlabeled internal nodes (any arity).
struct LeafTree {
  struct Node {
    std::string label;  // leaves only
    std::vector<int> children;
    int parent = -1;
    std::optional<double> length;  // branch length to the parent
  };
  std::vector<Node> nodes;
  int root = -1;

  bool is_leaf(int n) const { return nodes[n].children.empty(); }
  /// Leaf labels, sorted.
  std::vector<std::string> leaves() const;
  int add_node(int parent, std::string label = {});
};

/// Newick parser: nested parentheses, bare or single-quoted labels, optional
/// branch lengths and internal labels (ignored).
LeafTree parse_newick(const std::string& text);
std::string to_newick(const LeafTree& tree);

LeafTree leaf_tree_of(const Topology& topo, const Dataset* names = nullptr);
/// Strips the tensors of a model.
LeafTree tree_of(const TensorTree& model, const Dataset* names = nullptr);

/// Nontrivial leaf bipartitions. Each split is a membership vector over
/// `leaves` for the side holding the smallest leaf label.
struct SplitSet {
  std::vector<std::string> leaves;
  std::vector<std::vector<bool>> splits;
};

SplitSet splits(const LeafTree& tree);

double split_entropy(int side_size, int leaf_count);
double split_entropy(const std::vector<bool>& split);
double mutual_clustering_information(const std::vector<bool>& s1, const std::vector<bool>& s2);

/// Maximum-weight perfect matching on a square matrix; returns the column
/// assigned to each row.
std::vector<int> max_weight_assignment(const Eigen::MatrixXd& score);

/// Cluster information distance in [0, 1]. Throws ConfigError naming the
/// leaves missing from either tree.
double cid(const LeafTree& t1, const LeafTree& t2);

}  // namespace ttree
