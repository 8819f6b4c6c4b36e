#include "ttree/leaf_tree.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "ttree/error.hpp"

namespace ttree {

std::vector<std::string> LeafTree::leaves() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].children.empty()) out.push_back(nodes[i].label);
  std::sort(out.begin(), out.end());
  return out;
}

int LeafTree::add_node(int parent, std::string label) {
  const int id = static_cast<int>(nodes.size());
  nodes.push_back({std::move(label), {}, parent, std::nullopt});
  if (parent >= 0) nodes[parent].children.push_back(id);
  return id;
}

namespace {

class NewickParser {
 public:
  explicit NewickParser(const std::string& s) : s_(s) {}

  LeafTree parse() {
    skip_ws();
    tree_.root = subtree(-1);
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == ';') ++pos_;
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters");
    return std::move(tree_);
  }

 private:
  int subtree(int parent) {
    skip_ws();
    const int id = tree_.add_node(parent);
    if (peek() == '(') {
      ++pos_;
      while (true) {
        subtree(id);
        skip_ws();
        const char c = peek();
        ++pos_;
        if (c == ',') continue;
        if (c == ')') break;
        fail("expected ',' or ')'");
      }
      label();  // internal labels are ignored
    } else {
      tree_.nodes[id].label = label();
      if (tree_.nodes[id].label.empty()) fail("leaf without a label");
    }
    skip_ws();
    if (peek() == ':') {
      ++pos_;
      skip_ws();
      const std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.' ||
                                  s_[pos_] == '-' || s_[pos_] == '+' || s_[pos_] == 'e' || s_[pos_] == 'E'))
        ++pos_;
      try {
        tree_.nodes[id].length = std::stod(s_.substr(start, pos_ - start));
      } catch (const std::exception&) {
        fail("bad branch length");
      }
    }
    return id;
  }

  std::string label() {
    skip_ws();
    std::string out;
    if (peek() == '\'') {
      ++pos_;
      while (pos_ < s_.size()) {
        if (s_[pos_] == '\'') {
          if (pos_ + 1 < s_.size() && s_[pos_ + 1] == '\'') {
            out.push_back('\'');
            pos_ += 2;
            continue;
          }
          ++pos_;
          return out;
        }
        out.push_back(s_[pos_++]);
      }
      fail("unterminated quoted label");
    }
    while (pos_ < s_.size() && std::string_view("(),:;").find(s_[pos_]) == std::string_view::npos &&
           !std::isspace(static_cast<unsigned char>(s_[pos_])))
      out.push_back(s_[pos_++]);
    return out;
  }

  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw IoError("newick: " + what + " at offset " + std::to_string(pos_));
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  LeafTree tree_;
};

std::string quote(const std::string& label) {
  if (label.find_first_of(" ()[]',:;\t") == std::string::npos && !label.empty()) return label;
  std::string out = "'";
  for (char c : label) {
    if (c == '\'') out.push_back('\'');
    out.push_back(c);
  }
  return out + "'";
}

}  // namespace

LeafTree parse_newick(const std::string& text) { return NewickParser(text).parse(); }

std::string to_newick(const LeafTree& tree) {
  if (tree.root < 0) return ";";
  std::ostringstream os;
  os.precision(17);
  std::function<void(int)> rec = [&](int n) {
    const auto& node = tree.nodes[n];
    if (node.children.empty()) {
      os << quote(node.label);
    } else {
      os << '(';
      for (std::size_t i = 0; i < node.children.size(); ++i) {
        if (i) os << ',';
        rec(node.children[i]);
      }
      os << ')';
    }
    if (node.length && n != tree.root) os << ':' << *node.length;
  };
  rec(tree.root);
  os << ';';
  return os.str();
}

LeafTree leaf_tree_of(const Topology& topo, const Dataset* names) {
  LeafTree t;
  std::function<void(NodeRef, int)> rec = [&](NodeRef r, int parent) {
    if (r.is_site()) {
      t.add_node(parent, names ? names->site_label(r.index) : std::to_string(r.index));
      return;
    }
    const int id = t.add_node(parent);
    if (parent < 0) t.root = id;
    for (NodeRef c : topo.children[r.index]) rec(c, id);
  };
  rec(NodeRef::tensor(topo.root), -1);
  return t;
}

LeafTree tree_of(const TensorTree& model, const Dataset* names) {
  return leaf_tree_of(model.topology(), names);
}

SplitSet splits(const LeafTree& tree) {
  SplitSet out;
  out.leaves = tree.leaves();
  const int n = static_cast<int>(out.leaves.size());
  for (int i = 1; i < n; ++i)
    if (out.leaves[i] == out.leaves[i - 1]) throw ConfigError("duplicate leaf label " + out.leaves[i]);
  std::map<std::string, int> index;
  for (int i = 0; i < n; ++i) index[out.leaves[i]] = i;

  std::set<std::vector<bool>> seen;
  std::function<std::vector<bool>(int)> rec = [&](int node) {
    std::vector<bool> below(n, false);
    if (tree.is_leaf(node)) {
      below[index.at(tree.nodes[node].label)] = true;
      return below;
    }
    for (int c : tree.nodes[node].children) {
      const auto sub = rec(c);
      for (int i = 0; i < n; ++i) below[i] = below[i] || sub[i];
    }
    if (node != tree.root) {
      const int size = static_cast<int>(std::count(below.begin(), below.end(), true));
      if (size >= 2 && size <= n - 2) {
        std::vector<bool> s = below;
        if (!s[0]) s.flip();
        if (seen.insert(s).second) out.splits.push_back(s);
      }
    }
    return below;
  };
  if (tree.root >= 0) rec(tree.root);
  return out;
}

double split_entropy(int side_size, int leaf_count) {
  if (side_size <= 0 || side_size >= leaf_count) throw ConfigError("split sides must be nonempty");
  const double p = static_cast<double>(side_size) / leaf_count;
  return -p * std::log(p) - (1.0 - p) * std::log(1.0 - p);
}

double split_entropy(const std::vector<bool>& split) {
  return split_entropy(static_cast<int>(std::count(split.begin(), split.end(), true)),
                       static_cast<int>(split.size()));
}

double mutual_clustering_information(const std::vector<bool>& s1, const std::vector<bool>& s2) {
  if (s1.size() != s2.size()) throw ConfigError("splits are over different leaf sets");
  const double n = static_cast<double>(s1.size());
  double cell[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 0; i < s1.size(); ++i) cell[s1[i]][s2[i]] += 1.0;
  const double m1[2] = {cell[0][0] + cell[0][1], cell[1][0] + cell[1][1]};
  const double m2[2] = {cell[0][0] + cell[1][0], cell[0][1] + cell[1][1]};
  double info = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      if (cell[a][b] == 0.0) continue;
      const double p = cell[a][b] / n;
      info += p * std::log(p / ((m1[a] / n) * (m2[b] / n)));
    }
  return info;
}

std::vector<int> max_weight_assignment(const Eigen::MatrixXd& score) {
  const int n = static_cast<int>(score.rows());
  if (score.cols() != n) throw ConfigError("assignment matrix must be square");
  if (n == 0) return {};
  const double top = score.maxCoeff();
  // Hungarian algorithm (potentials form) minimizing top - score, 1-based.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<bool> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = (top - score(i0 - 1, j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assign(n, -1);
  for (int j = 1; j <= n; ++j) assign[p[j] - 1] = j - 1;
  return assign;
}

double cid(const LeafTree& t1, const LeafTree& t2) {
  const SplitSet a = splits(t1);
  const SplitSet b = splits(t2);
  if (a.leaves != b.leaves) {
    std::vector<std::string> only_a, only_b;
    std::set_difference(a.leaves.begin(), a.leaves.end(), b.leaves.begin(), b.leaves.end(),
                        std::back_inserter(only_a));
    std::set_difference(b.leaves.begin(), b.leaves.end(), a.leaves.begin(), a.leaves.end(),
                        std::back_inserter(only_b));
    std::string msg = "leaf sets differ;";
    if (!only_a.empty()) {
      msg += " missing from second tree:";
      for (const auto& l : only_a) msg += " " + l;
      msg += ";";
    }
    if (!only_b.empty()) {
      msg += " missing from first tree:";
      for (const auto& l : only_b) msg += " " + l;
    }
    throw ConfigError(msg);
  }
  double h_max = 0.0;
  for (const auto& s : a.splits) h_max += split_entropy(s);
  for (const auto& s : b.splits) h_max += split_entropy(s);
  h_max *= 0.5;
  if (h_max <= 0.0) return 0.0;

  const int n = static_cast<int>(std::max(a.splits.size(), b.splits.size()));
  Eigen::MatrixXd score = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < a.splits.size(); ++i)
    for (std::size_t j = 0; j < b.splits.size(); ++j)
      score(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          mutual_clustering_information(a.splits[i], b.splits[j]);
  const auto assign = max_weight_assignment(score);
  double best = 0.0;
  for (int i = 0; i < n; ++i) best += score(i, assign[i]);
  return std::clamp((h_max - best) / h_max, 0.0, 1.0);
}

}  // namespace ttree
