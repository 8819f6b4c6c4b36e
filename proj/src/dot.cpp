#include "ttree/dot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace ttree {

namespace {

std::string color(double x) {
  x = std::clamp(x, 0.0, 1.0);
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(255 * x)), 0,
                static_cast<int>(std::lround(255 * (1.0 - x))));
  return buf;
}

std::string site_name(NodeRef r, const Dataset* names) {
  return names ? names->site_label(r.index) : std::to_string(r.index);
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::string model_dot(const TensorTree& tree, const std::vector<BondReport>& bonds, int chi_max,
                      bool use_ee, const Dataset* names) {
  std::map<int, const BondReport*> by_bond;
  for (const auto& b : bonds) by_bond[b.bond] = &b;
  const double scale = chi_max > 1 ? std::log(static_cast<double>(chi_max)) : 1.0;
  std::ostringstream os;
  os << "graph ttree {\n  node [shape=circle, label=\"\", width=0.15, style=filled, fillcolor=black];\n";
  for (int s = 0; s < tree.num_inputs(); ++s)
    os << "  s" << s << " [shape=plaintext, style=\"\", label=\"" << escape(site_name(NodeRef::site(s), names)) << "\"];\n";
  for (int id = 0; id < tree.num_tensors(); ++id) {
    os << "  t" << id << ";\n";
    for (NodeRef c : {tree.node(id).left, tree.node(id).right}) {
      if (c.is_site()) {
        os << "  t" << id << " -- s" << c.index << " [color=gray];\n";
        continue;
      }
      os << "  t" << id << " -- t" << c.index;
      const auto it = by_bond.find(c.index);
      if (it != by_bond.end()) {
        const BondReport& b = *it->second;
        const double v = use_ee && b.ee ? *b.ee : b.mi;
        char label[32];
        std::snprintf(label, sizeof label, "%.3f", v);
        os << " [color=\"" << color(v / scale) << "\", penwidth=2, label=\"" << label << "\"]";
      }
      os << ";\n";
    }
  }
  os << "}\n";
  return os.str();
}

std::string hmm_dot(const TensorTree& tree, const HmmExtraction& hmm, const Dataset* names) {
  std::ostringstream os;
  os << "digraph hmm {\n  node [shape=circle];\n";
  for (int s = 0; s < tree.num_inputs(); ++s)
    os << "  s" << s << " [shape=plaintext, label=\"" << escape(site_name(NodeRef::site(s), names)) << "\"];\n";
  for (int id = 0; id < tree.num_tensors(); ++id) os << "  h" << id << " [label=\"h" << id << "\"];\n";
  for (const auto& e : hmm.edges) {
    os << "  h" << e.parent << " -> " << (e.emission() ? "s" : "h") << e.child.index;
    if (e.entries.rows() == e.entries.cols()) {
      const double pc = permutation_closeness(e.entries);
      char label[32];
      std::snprintf(label, sizeof label, "%.3f", pc);
      os << " [label=\"" << label << "\", color=\"" << color(pc) << "\"]";
    }
    os << ";\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace ttree
