#include "ttree/tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "ttree/error.hpp"

namespace ttree {

std::string to_string(Mode mode) {
  return mode == Mode::Nonnegative ? "nonnegative" : "born";
}

Mode mode_from_string(const std::string& name) {
  if (name == "nonnegative" || name == "nn") return Mode::Nonnegative;
  if (name == "born" || name == "born_machine") return Mode::BornMachine;
  throw ConfigError("unknown tree mode: " + name);
}

TensorTree::TensorTree(Mode mode, std::vector<int> site_dims, std::vector<TensorNode> nodes,
                       std::vector<Tensor> tensors, int root)
    : mode_(mode),
      site_dims_(std::move(site_dims)),
      nodes_(std::move(nodes)),
      tensors_(std::move(tensors)),
      root_(root) {
  if (nodes_.size() != tensors_.size()) {
    throw ConfigError("tensor tree needs one node record per tensor");
  }
  for (auto& n : nodes_) n.parent = -1;
  for (int id = 0; id < num_tensors(); ++id) {
    for (NodeRef c : {nodes_[id].left, nodes_[id].right}) {
      if (c.is_tensor() && c.index >= 0 && c.index < num_tensors()) nodes_[c.index].parent = id;
    }
  }
}

std::pair<int, bool> TensorTree::site_owner(int site) const {
  for (int id = 0; id < num_tensors(); ++id) {
    if (nodes_[id].left == NodeRef::site(site)) return {id, true};
    if (nodes_[id].right == NodeRef::site(site)) return {id, false};
  }
  throw ConfigError("site " + std::to_string(site) + " is not attached to the tree");
}

int TensorTree::up_dim(NodeRef ref) const {
  return ref.is_site() ? site_dims_[ref.index] : tensors_[ref.index].dim(2);
}

std::vector<int> TensorTree::postorder() const {
  std::vector<int> order;
  order.reserve(tensors_.size());
  std::vector<std::pair<int, bool>> stack{{root_, false}};
  while (!stack.empty()) {
    auto [id, expanded] = stack.back();
    stack.pop_back();
    if (expanded) {
      order.push_back(id);
      continue;
    }
    stack.push_back({id, true});
    const auto& n = nodes_[id];
    if (n.right.is_tensor()) stack.push_back({n.right.index, false});
    if (n.left.is_tensor()) stack.push_back({n.left.index, false});
  }
  return order;
}

std::vector<int> TensorTree::preorder() const {
  std::vector<int> order;
  order.reserve(tensors_.size());
  std::vector<int> stack{root_};
  while (!stack.empty()) {
    int id = stack.back();
    stack.pop_back();
    order.push_back(id);
    const auto& n = nodes_[id];
    if (n.right.is_tensor()) stack.push_back(n.right.index);
    if (n.left.is_tensor()) stack.push_back(n.left.index);
  }
  return order;
}

std::vector<int> TensorTree::sites_under(NodeRef ref) const {
  std::vector<int> out;
  std::vector<NodeRef> stack{ref};
  while (!stack.empty()) {
    NodeRef r = stack.back();
    stack.pop_back();
    if (r.is_site()) {
      out.push_back(r.index);
    } else {
      stack.push_back(nodes_[r.index].left);
      stack.push_back(nodes_[r.index].right);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void TensorTree::rewire(int id, NodeRef left, NodeRef right, Tensor values) {
  nodes_[id].left = left;
  nodes_[id].right = right;
  if (left.is_tensor()) nodes_[left.index].parent = id;
  if (right.is_tensor()) nodes_[right.index].parent = id;
  tensors_[id] = std::move(values);
}

std::vector<int> TensorTree::internal_bonds() const {
  std::vector<int> out;
  for (int id : preorder())
    if (id != root_) out.push_back(id);
  return out;
}

Topology TensorTree::topology() const {
  Topology topo;
  topo.num_sites = num_inputs();
  topo.root = root_;
  topo.children.resize(tensors_.size());
  for (int id = 0; id < num_tensors(); ++id) topo.children[id] = {nodes_[id].left, nodes_[id].right};
  return topo;
}

std::string TensorTree::canonical_newick() const {
  std::function<std::string(NodeRef)> rec = [&](NodeRef r) -> std::string {
    if (r.is_site()) return std::to_string(r.index);
    std::string a = rec(nodes_[r.index].left);
    std::string b = rec(nodes_[r.index].right);
    if (b < a) std::swap(a, b);
    return "(" + a + "," + b + ")";
  };
  return rec(NodeRef::tensor(root_)) + ";";
}

std::uint64_t TensorTree::fingerprint() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : canonical_newick()) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

void randomize_elements(Tensor& t, Mode mode, Rng& rng) {
  if (mode == Mode::Nonnegative) {
    std::uniform_real_distribution<double> dist(0.1, 1.0);
    for (double& v : t.values()) v = dist(rng);
  } else {
    int chi = *std::max_element(t.shape().begin(), t.shape().end());
    std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(chi)));
    for (double& v : t.values()) v = dist(rng);
  }
}

int forced_bond_dim(int subtree_sites, int total_sites, int chi_input, int chi_max) {
  const int exponent = std::min(subtree_sites, total_sites - subtree_sites);
  long long dim = 1;
  for (int i = 0; i < exponent && dim < chi_max; ++i) dim *= chi_input;
  return static_cast<int>(std::min<long long>(dim, chi_max));
}

TensorTree make_tree(const Topology& topology, int chi_input, int chi_max, Mode mode, Rng& rng) {
  const int n = topology.num_sites;
  if (static_cast<int>(topology.children.size()) != n - 1) {
    throw ConfigError("topology must have num_sites - 1 internal nodes");
  }
  std::vector<TensorNode> nodes(topology.children.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    nodes[i].left = topology.children[i][0];
    nodes[i].right = topology.children[i][1];
  }
  std::vector<int> site_dims(n, chi_input);
  std::vector<Tensor> tensors(nodes.size());
  TensorTree skeleton(mode, site_dims, nodes, tensors, topology.root);

  std::vector<int> up(nodes.size(), 1);
  std::vector<int> count(nodes.size(), 0);
  auto leg = [&](NodeRef r) { return r.is_site() ? chi_input : up[r.index]; };
  auto leaves = [&](NodeRef r) { return r.is_site() ? 1 : count[r.index]; };
  for (int id : skeleton.postorder()) {
    count[id] = leaves(nodes[id].left) + leaves(nodes[id].right);
    up[id] = id == topology.root ? 1 : forced_bond_dim(count[id], n, chi_input, chi_max);
  }
  for (int id : skeleton.postorder()) {
    Tensor t({leg(nodes[id].left), leg(nodes[id].right), up[id]});
    randomize_elements(t, mode, rng);
    tensors[id] = std::move(t);
  }
  return TensorTree(mode, std::move(site_dims), std::move(nodes), std::move(tensors),
                    topology.root);
}

Topology random_topology(int num_sites, Rng& rng) {
  if (num_sites < 2) throw ConfigError("a tensor tree needs at least two inputs");
  // Nodes 0..num_sites-1 are leaves; internal nodes follow. parent[-1] = none.
  const int total = 2 * num_sites - 1;
  std::vector<int> parent(total, -1);
  std::vector<std::array<int, 2>> kids(total, {-1, -1});
  int root = 0;
  int next_internal = num_sites;
  std::vector<int> present{0};
  for (int leaf = 1; leaf < num_sites; ++leaf) {
    std::uniform_int_distribution<std::size_t> pick(0, present.size() - 1);
    const int v = present[pick(rng)];
    const int u = next_internal++;
    const int p = parent[v];
    parent[u] = p;
    if (p < 0) {
      root = u;
    } else {
      auto& pk = kids[p];
      (pk[0] == v ? pk[0] : pk[1]) = u;
    }
    std::bernoulli_distribution side(0.5);
    kids[u] = side(rng) ? std::array<int, 2>{v, leaf} : std::array<int, 2>{leaf, v};
    parent[v] = u;
    parent[leaf] = u;
    present.push_back(u);
    present.push_back(leaf);
  }
  Topology topo;
  topo.num_sites = num_sites;
  topo.root = root - num_sites;
  topo.children.resize(num_sites - 1);
  auto ref = [&](int node) {
    return node < num_sites ? NodeRef::site(node) : NodeRef::tensor(node - num_sites);
  };
  for (int u = num_sites; u < total; ++u) topo.children[u - num_sites] = {ref(kids[u][0]), ref(kids[u][1])};
  return topo;
}

TensorTree build_random_tree(int num_inputs, int chi_input, int chi_max, Mode mode,
                             std::uint64_t seed) {
  if (num_inputs < 2) throw ConfigError("build_random_tree: num_inputs must be at least 2");
  if (chi_input < 1 || chi_max < 1) throw ConfigError("build_random_tree: dimensions must be >= 1");
  Rng topo_rng = make_rng(seed, "topology");
  Rng init_rng = make_rng(seed, "init");
  return make_tree(random_topology(num_inputs, topo_rng), chi_input, chi_max, mode, init_rng);
}

std::vector<std::string> validate(const TensorTree& tree) {
  std::vector<std::string> issues;
  const int n = tree.num_inputs();
  const int m = tree.num_tensors();
  if (n < 2) issues.push_back("tree has fewer than two inputs");
  if (m != n - 1) {
    issues.push_back("expected " + std::to_string(n - 1) + " tensors for " + std::to_string(n) +
                     " inputs, found " + std::to_string(m));
  }
  if (tree.root() < 0 || tree.root() >= m) {
    issues.push_back("root tensor id out of range");
    return issues;
  }

  std::vector<int> site_seen(n, 0);
  std::vector<int> tensor_seen(m, 0);
  for (int id = 0; id < m; ++id) {
    for (NodeRef c : {tree.node(id).left, tree.node(id).right}) {
      if (c.is_site()) {
        if (c.index < 0 || c.index >= n) {
          issues.push_back("tensor " + std::to_string(id) + " references unknown site " +
                           std::to_string(c.index));
        } else {
          ++site_seen[c.index];
        }
      } else if (c.index < 0 || c.index >= m) {
        issues.push_back("tensor " + std::to_string(id) + " references unknown tensor " +
                         std::to_string(c.index));
      } else {
        ++tensor_seen[c.index];
      }
    }
  }
  for (int s = 0; s < n; ++s) {
    if (site_seen[s] != 1) {
      issues.push_back("site " + std::to_string(s) + " is attached " +
                       std::to_string(site_seen[s]) + " times");
    }
  }
  for (int id = 0; id < m; ++id) {
    const int expected = id == tree.root() ? 0 : 1;
    if (tensor_seen[id] != expected) {
      issues.push_back("tensor " + std::to_string(id) + " has " + std::to_string(tensor_seen[id]) +
                       " parents");
    }
  }
  if (!issues.empty()) return issues;

  // Connectivity and acyclicity from the root.
  std::vector<int> visited(m, 0);
  std::vector<int> stack{tree.root()};
  while (!stack.empty()) {
    int id = stack.back();
    stack.pop_back();
    if (visited[id]++) {
      issues.push_back("cycle through tensor " + std::to_string(id));
      return issues;
    }
    for (NodeRef c : {tree.node(id).left, tree.node(id).right})
      if (c.is_tensor()) stack.push_back(c.index);
  }
  for (int id = 0; id < m; ++id)
    if (!visited[id]) issues.push_back("tensor " + std::to_string(id) + " is unreachable from the root");
  if (!issues.empty()) return issues;

  const char* leg_name[2] = {"left", "right"};
  for (int id = 0; id < m; ++id) {
    const Tensor& t = tree.tensor(id);
    if (t.rank() != 3) {
      issues.push_back("tensor " + std::to_string(id) + " has rank " + std::to_string(t.rank()));
      continue;
    }
    const NodeRef kids[2] = {tree.node(id).left, tree.node(id).right};
    for (int side = 0; side < 2; ++side) {
      const NodeRef c = kids[side];
      const int child_dim = c.is_site() ? tree.site_dim(c.index)
                                        : (tree.tensor(c.index).rank() == 3 ? tree.tensor(c.index).dim(2) : -1);
      if (t.dim(side) != child_dim) {
        std::ostringstream os;
        os << "bond dimension mismatch: tensor " << id << " " << leg_name[side] << " leg has dim "
           << t.dim(side) << " but " << (c.is_site() ? "site " : "tensor ") << c.index
           << (c.is_site() ? " has input dim " : " up leg has dim ") << child_dim;
        issues.push_back(os.str());
      }
    }
    if (id == tree.root() && t.dim(2) != 1) {
      issues.push_back("top leg of root tensor " + std::to_string(id) + " must have dimension 1");
    }
    if (!t.all_finite()) issues.push_back("tensor " + std::to_string(id) + " has non-finite elements");
    if (tree.mode() == Mode::Nonnegative) {
      for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] < 0.0) {
          std::ostringstream os;
          os << "nonnegativity violated: tensor " << id << " element " << k << " = " << t[k];
          issues.push_back(os.str());
          break;
        }
      }
    }
  }
  return issues;
}

}  // namespace ttree
