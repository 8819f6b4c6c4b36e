#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ttree/rng.hpp"
#include "ttree/tensor.hpp"

namespace ttree {

enum class Mode { Nonnegative, BornMachine };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& name);

/// What hangs off a tensor's lower leg: an input site or another tensor.
struct NodeRef {
  enum class Kind : std::uint8_t { Site, Tensor };
  Kind kind = Kind::Site;
  int index = 0;

  static NodeRef site(int i) { return {Kind::Site, i}; }
  static NodeRef tensor(int i) { return {Kind::Tensor, i}; }
  bool is_site() const { return kind == Kind::Site; }
  bool is_tensor() const { return kind == Kind::Tensor; }
  friend bool operator==(const NodeRef&, const NodeRef&) = default;
};

/// Leg wiring of one rank-3 tensor. parent == -1 marks the top tensor, whose
/// up leg (dimension 1) is contracted with the scalar 1.
struct TensorNode {
  NodeRef left;
  NodeRef right;
  int parent = -1;
};

/// Rooted binary topology over input sites. children[n] lists the two lower
/// legs of internal node n; internal node ids are tensor ids.
struct Topology {
  int num_sites = 0;
  std::vector<std::array<NodeRef, 2>> children;
  int root = -1;
};

/// Binary tensor tree: num_inputs - 1 rank-3 tensors indexed (left, right, up).
class TensorTree {
 public:
  TensorTree() = default;
  TensorTree(Mode mode, std::vector<int> site_dims, std::vector<TensorNode> nodes,
             std::vector<Tensor> tensors, int root);

  Mode mode() const { return mode_; }
  void set_mode(Mode mode) { mode_ = mode; }
  int num_inputs() const { return static_cast<int>(site_dims_.size()); }
  int num_tensors() const { return static_cast<int>(tensors_.size()); }
  int root() const { return root_; }
  const std::vector<int>& site_dims() const { return site_dims_; }
  int site_dim(int site) const { return site_dims_[site]; }

  const Tensor& tensor(int id) const { return tensors_[id]; }
  Tensor& tensor(int id) { return tensors_[id]; }
  const TensorNode& node(int id) const { return nodes_[id]; }
  const std::vector<TensorNode>& nodes() const { return nodes_; }

  /// Tensor id owning the site's leg, and whether it is that tensor's left leg.
  std::pair<int, bool> site_owner(int site) const;

  /// Dimension of the leg that `ref` exposes upward.
  int up_dim(NodeRef ref) const;

  /// Children before parents; the root is last.
  std::vector<int> postorder() const;
  /// Parents before children (root first, depth-first, left before right).
  std::vector<int> preorder() const;

  /// Input sites under a node, ascending.
  std::vector<int> sites_under(NodeRef ref) const;

  /// Rewires a tensor's lower legs and installs its values. Parent links of
  /// the new children are updated; the caller keeps the tree consistent.
  void rewire(int id, NodeRef left, NodeRef right, Tensor values);

  /// Internal bonds in the tensor network: every non-root tensor, identified
  /// by its id, names the bond to its parent tensor.
  std::vector<int> internal_bonds() const;

  /// Leaf-labeled topology with the tensors stripped.
  Topology topology() const;

  /// Canonical rooted Newick of the topology with children sorted, so
  /// mirror-image trees compare equal.
  std::string canonical_newick() const;
  std::uint64_t fingerprint() const;

 private:
  Mode mode_ = Mode::Nonnegative;
  std::vector<int> site_dims_;
  std::vector<TensorNode> nodes_;
  std::vector<Tensor> tensors_;
  int root_ = -1;
};

/// Draws elements per mode: uniform(0.1, 1) for Nonnegative, normal(0, 1/sqrt(chi))
/// for BornMachine, where chi is the tensor's largest leg dimension.
void randomize_elements(Tensor& t, Mode mode, Rng& rng);

/// Bond dimension assigned to the up leg of a subtree with `subtree_sites`
/// of the `total_sites` inputs: min(chi_max, chi_in^s, chi_in^(N-s)).
int forced_bond_dim(int subtree_sites, int total_sites, int chi_input, int chi_max);

/// Instantiates tensors on a topology. Bond dimensions follow
/// forced_bond_dim; elements are drawn with randomize_elements.
TensorTree make_tree(const Topology& topology, int chi_input, int chi_max, Mode mode, Rng& rng);

/// Uniformly random rooted binary topology with labeled leaves (Remy's
/// insertion algorithm).
Topology random_topology(int num_sites, Rng& rng);

TensorTree build_random_tree(int num_inputs, int chi_input, int chi_max, Mode mode,
                             std::uint64_t seed);

/// Lists violated invariants; an empty result means the tree is valid.
std::vector<std::string> validate(const TensorTree& tree);

}  // namespace ttree
