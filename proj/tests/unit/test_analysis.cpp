#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "oracles.hpp"
#include "ttree/data.hpp"
#include "ttree/dot.hpp"
#include "ttree/error.hpp"
#include "ttree/hmm.hpp"
#include "ttree/leaf_tree.hpp"
#include "ttree/ward.hpp"

using namespace ttree;

namespace {

double brute_max_assignment(const Eigen::MatrixXd& s) {
  std::vector<int> perm(s.cols());
  std::iota(perm.begin(), perm.end(), 0);
  double best = -std::numeric_limits<double>::infinity();
  do {
    double v = 0.0;
    for (int r = 0; r < s.rows(); ++r) v += s(r, perm[r]);
    best = std::max(best, v);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Direct transcription of the cluster information distance for trees with
// equal split counts.
double cid_oracle(const LeafTree& a, const LeafTree& b) {
  const SplitSet sa = splits(a), sb = splits(b);
  const int n = static_cast<int>(sa.leaves.size());
  auto h = [n](const std::vector<bool>& s) {
    const double p = static_cast<double>(std::count(s.begin(), s.end(), true)) / n;
    return -p * std::log(p) - (1 - p) * std::log(1 - p);
  };
  auto mci = [n](const std::vector<bool>& x, const std::vector<bool>& y) {
    double total = 0.0;
    for (bool u : {true, false})
      for (bool v : {true, false}) {
        int both = 0, cu = 0, cv = 0;
        for (int i = 0; i < n; ++i) {
          cu += x[i] == u;
          cv += y[i] == v;
          both += x[i] == u && y[i] == v;
        }
        if (both > 0) {
          const double p = static_cast<double>(both) / n;
          total += p * std::log(p / ((static_cast<double>(cu) / n) * (static_cast<double>(cv) / n)));
        }
      }
    return total;
  };
  REQUIRE(sa.splits.size() == sb.splits.size());
  Eigen::MatrixXd score(sa.splits.size(), sb.splits.size());
  double hmax = 0.0;
  for (std::size_t i = 0; i < sa.splits.size(); ++i) {
    hmax += 0.5 * h(sa.splits[i]) + 0.5 * h(sb.splits[i]);
    for (std::size_t j = 0; j < sb.splits.size(); ++j) score(i, j) = mci(sa.splits[i], sb.splits[j]);
  }
  return (hmax - brute_max_assignment(score)) / hmax;
}

std::set<std::vector<bool>> split_set(const LeafTree& t) {
  const SplitSet s = splits(t);
  return {s.splits.begin(), s.splits.end()};
}

LeafTree random_leaf_tree(int n, std::uint64_t seed) {
  return tree_of(build_random_tree(n, 2, 2, Mode::Nonnegative, seed));
}

// Order-sensitive maximum abs error minimized over independent row and
// column permutations (2x2 only needs the four combinations).
double perm_error(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want, bool permute_rows) {
  std::vector<int> r(got.rows()), c(got.cols());
  std::iota(r.begin(), r.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    std::iota(c.begin(), c.end(), 0);
    do {
      double e = 0.0;
      for (int i = 0; i < got.rows(); ++i)
        for (int j = 0; j < got.cols(); ++j) e = std::max(e, std::abs(got(r[i], c[j]) - want(i, j)));
      best = std::min(best, e);
    } while (std::next_permutation(c.begin(), c.end()));
  } while (permute_rows && std::next_permutation(r.begin(), r.end()));
  return best;
}

}  // namespace

TEST_CASE("nontrivial splits") {
  CHECK(splits(parse_newick("((a,b),(c,d));")).splits.size() == 1);
  const SplitSet q = splits(parse_newick("((a,b),(c,d));"));
  CHECK(q.splits.front() == std::vector<bool>{true, true, false, false});
  CHECK(splits(parse_newick("((((a,b),c),d),e);")).splits.size() == 2);
  CHECK(splits(parse_newick("(a,b,c,d,e);")).splits.empty());
  CHECK(splits(tree_of(build_random_tree(2, 2, 2, Mode::Nonnegative, 1))).splits.empty());
  for (std::uint64_t s = 0; s < 5; ++s) {
    const LeafTree t = random_leaf_tree(16, s);
    CHECK(splits(t).splits.size() == 13);
    CHECK(split_set(parse_newick(to_newick(t))) == split_set(t));
  }
}

TEST_CASE("newick parsing") {
  const LeafTree t = parse_newick("(('homo sapiens':0.1,b:2)x:0.5,(c,'d''s'));");
  CHECK(t.leaves() == std::vector<std::string>{"b", "c", "d's", "homo sapiens"});
  CHECK(split_set(parse_newick(to_newick(t))) == split_set(t));
  CHECK(to_newick(t).find("'homo sapiens'") != std::string::npos);
  CHECK_THROWS_AS(parse_newick("((a,b);"), IoError);
  CHECK_THROWS_AS(parse_newick(""), IoError);
}

TEST_CASE("split entropy and clustering information") {
  CHECK(split_entropy(2, 4) == doctest::Approx(std::log(2.0)));
  CHECK(split_entropy(1, 4) == doctest::Approx(0.5623).epsilon(1e-4));
  CHECK_THROWS_AS(split_entropy(4, 4), ConfigError);
  const std::vector<bool> ab{true, true, false, false}, ac{true, false, true, false};
  CHECK(mutual_clustering_information(ab, ab) == doctest::Approx(split_entropy(ab)));
  CHECK(std::abs(mutual_clustering_information(ab, ac)) < 1e-15);
  CHECK_THROWS_AS(mutual_clustering_information(ab, {true, false}), ConfigError);
}

TEST_CASE("Hungarian matches exhaustive search") {
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 1; n <= 5; ++n)
    for (int rep = 0; rep < 20; ++rep) {
      Eigen::MatrixXd s(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s(i, j) = u(rng);
      const auto a = max_weight_assignment(s);
      double v = 0.0;
      std::set<int> used;
      for (int i = 0; i < n; ++i) {
        v += s(i, a[i]);
        used.insert(a[i]);
      }
      CHECK(used.size() == static_cast<std::size_t>(n));
      CHECK(v == doctest::Approx(brute_max_assignment(s)).epsilon(1e-12));
    }
}

TEST_CASE("cluster information distance") {
  const LeafTree balanced = parse_newick("(((a,b),c),((d,e),f));");
  const LeafTree caterpillar = parse_newick("(((((a,b),c),d),e),f);");
  CHECK(cid(balanced, balanced) == 0.0);
  CHECK(cid(balanced, caterpillar) == doctest::Approx(cid_oracle(balanced, caterpillar)).epsilon(1e-10));
  CHECK(cid(balanced, caterpillar) > 0.0);

  for (int n = 5; n <= 8; ++n)
    for (std::uint64_t s = 0; s < 12; ++s) {
      const LeafTree a = random_leaf_tree(n, 10 * s + n), b = random_leaf_tree(n, 10 * s + n + 500);
      const double d = cid(a, b);
      CHECK(d >= 0.0);
      CHECK(d <= 1.0);
      CHECK(d == doctest::Approx(cid(b, a)).epsilon(1e-12));
      CHECK((d < 1e-12) == (split_set(a) == split_set(b)));
      if (n <= 7) CHECK(d == doctest::Approx(cid_oracle(a, b)).epsilon(1e-10));
    }

  // Unequal split counts: the star has none.
  CHECK(cid(parse_newick("(a,b,c,d,e);"), parse_newick("((((a,b),c),d),e);")) == doctest::Approx(1.0));
  try {
    cid(parse_newick("((a,b),(c,d));"), parse_newick("((a,b),(c,x));"));
    FAIL("expected a leafset error");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find('d') != std::string::npos);
    CHECK(msg.find('x') != std::string::npos);
  }
}

TEST_CASE("tree_of suppresses the root and uses dataset names") {
  const TensorTree m = build_random_tree(4, 2, 2, Mode::Nonnegative, 6);
  Dataset names;
  names.site_dims = {2, 2, 2, 2};
  names.site_names = {"w", "x", "y", "z"};
  const LeafTree t = tree_of(m, &names);
  CHECK(t.leaves() == std::vector<std::string>{"w", "x", "y", "z"});
  CHECK(splits(t).splits.size() == 1);
}

TEST_CASE("permutation closeness") {
  Eigen::MatrixXd p(3, 3);
  p << 0, 1, 0, 0, 0, 1, 1, 0, 0;
  CHECK(permutation_closeness(Eigen::MatrixXd::Identity(3, 3)) == doctest::Approx(1.0));
  CHECK(permutation_closeness(p) == doctest::Approx(1.0));
  CHECK(permutation_closeness(Eigen::MatrixXd::Constant(4, 4, 0.25)) == doctest::Approx(0.0).epsilon(1e-12));
  Eigen::MatrixXd m(2, 2);
  m << 0.9, 0.1, 0.1, 0.9;
  CHECK(permutation_closeness(m) == doctest::Approx(0.8));
  Eigen::MatrixXd s(3, 3);
  s << 0.7, 0.2, 0.1, 0.2, 0.5, 0.3, 0.1, 0.3, 0.6;
  CHECK(permutation_closeness(p * s * p.transpose()) == doctest::Approx(permutation_closeness(s)).epsilon(1e-12));
  CHECK_THROWS_AS(permutation_closeness(Eigen::MatrixXd::Ones(2, 3)), ConfigError);
}

TEST_CASE("Ward clustering") {
  SUBCASE("identical sites merge first at height zero") {
    std::vector<std::vector<int>> rows = {{0, 1, 0, 1}, {1, 1, 0, 0}, {1, 0, 1, 1}, {0, 0, 1, 0}, {1, 1, 1, 1}};
    for (auto& r : rows) r[3] = r[1];
    const Dendrogram d = ward_cluster(dataset_from_symbols(rows, 2));
    const Merge& first = d.merges.front();
    CHECK(std::min(first.a, first.b) == 1);
    CHECK(std::max(first.a, first.b) == 3);
    CHECK(first.height == 0.0);
  }
  auto triplet_merges_first = [](const Dendrogram& d, int l_op) {
    const int n = 3 * l_op;
    std::vector<int> cluster_triplet(2 * n, -1);
    for (int i = 0; i < n; ++i) cluster_triplet[i] = i % l_op;
    for (int k = 0; k < 2 * l_op; ++k) {
      const Merge& m = d.merges[k];
      if (cluster_triplet[m.a] != cluster_triplet[m.b]) return false;
      cluster_triplet[n + k] = cluster_triplet[m.a];
    }
    return true;
  };
  const Dendrogram and_tree = ward_cluster(gen_bitwise(BitOp::AND, 4, 2000, 3));
  CHECK(triplet_merges_first(and_tree, 4));
  const Dendrogram xor_tree = ward_cluster(gen_bitwise(BitOp::XOR, 4, 2000, 3));
  CHECK_FALSE(triplet_merges_first(xor_tree, 4));
  for (const Dendrogram* d : {&and_tree, &xor_tree}) {
    CHECK(d->merges.size() == 11);
    for (std::size_t k = 1; k < d->merges.size(); ++k) CHECK(d->merges[k].height >= d->merges[k - 1].height - 1e-12);
    CHECK(d->tree.leaves().size() == 12);
  }
  CHECK(hamming_distances(gen_bitwise(BitOp::AND, 1, 4, 1)).rows() == 3);
}

TEST_CASE("extract_hmm inverts an analytic model") {
  // Hidden states on ((0, 1), (2, 3)): the root picks a state from pi, each
  // child tensor's state follows its transition, sites emit through F.
  Eigen::Vector2d pi(0.6, 0.4);
  Eigen::Matrix2d m_left, m_right, f0, f1, f2, f3;
  m_left << 0.8, 0.3, 0.2, 0.7;
  m_right << 0.95, 0.25, 0.05, 0.75;
  f0 << 0.9, 0.2, 0.1, 0.8;
  f1 << 0.7, 0.1, 0.3, 0.9;
  f2 << 0.85, 0.35, 0.15, 0.65;
  f3 << 0.6, 0.05, 0.4, 0.95;
  auto node = [](const Eigen::Matrix2d& fl, const Eigen::Matrix2d& fr, const Eigen::Matrix2d& up) {
    Tensor t({2, 2, 2});
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int p = 0; p < 2; ++p)
          for (int h = 0; h < 2; ++h) t(i, j, p) += fl(i, h) * fr(j, h) * up(h, p);
    return t;
  };
  Tensor root({2, 2, 1});
  for (int h = 0; h < 2; ++h) root(h, h, 0) = pi[h];
  std::vector<TensorNode> nodes = {{NodeRef::site(0), NodeRef::site(1), -1},
                                   {NodeRef::site(2), NodeRef::site(3), -1},
                                   {NodeRef::tensor(0), NodeRef::tensor(1), -1}};
  const TensorTree model(Mode::Nonnegative, {2, 2, 2, 2}, nodes,
                         {node(f0, f1, m_left), node(f2, f3, m_right), root}, 2);

  const HmmExtraction hmm = extract_hmm(model, 2, NMFConfig{5000, 1e-14, 1e-300}, 1e-3, 1);
  CHECK(hmm.inexact.empty());
  int found = 0;
  for (const TransitionMatrix& e : hmm.edges) {
    for (int c = 0; c < e.entries.cols(); ++c) CHECK(e.entries.col(c).sum() == doctest::Approx(1.0).epsilon(1e-9));
    if (e.emission()) {
      const Eigen::Matrix2d* want[] = {&f0, &f1, &f2, &f3};
      CHECK(perm_error(e.entries, *want[e.child.index], false) < 1e-3);
      ++found;
    } else {
      CHECK(e.parent == 2);
      CHECK(perm_error(e.entries, e.child.index == 0 ? m_left : m_right, true) < 1e-3);
      ++found;
    }
  }
  CHECK(found == 6);
  Eigen::VectorXd r = hmm.root_distribution;
  std::sort(r.data(), r.data() + r.size());
  CHECK(r[0] == doctest::Approx(0.4).epsilon(1e-3));
  CHECK(r[1] == doctest::Approx(0.6).epsilon(1e-3));

  const std::string dot = hmm_dot(model, hmm);
  CHECK(dot.find("digraph") != std::string::npos);
}

TEST_CASE("extract_hmm on a uniform model") {
  const TensorTree t = oracle::constant_tree(oracle::chain_topology(4), 2, 2, 0.3);
  const HmmExtraction hmm = extract_hmm(t, 1, NMFConfig{});
  for (const TransitionMatrix& e : hmm.edges)
    for (double x : e.entries.reshaped()) CHECK(x == doctest::Approx(1.0 / static_cast<double>(e.entries.rows())));
  CHECK_THROWS_AS(extract_hmm(build_random_tree(4, 2, 2, Mode::BornMachine, 1), 2, NMFConfig{}), ConfigError);
}

TEST_CASE("model dot output") {
  const TensorTree t = build_random_tree(5, 2, 2, Mode::Nonnegative, 3);
  std::vector<BondReport> bonds;
  for (int b : t.internal_bonds()) bonds.push_back({b, 0.3, 0.3, std::nullopt, 2});
  const std::string dot = model_dot(t, bonds, 2);
  CHECK(dot.rfind("graph", 0) == 0);
  CHECK(dot.find("color") != std::string::npos);
}
