#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

#include "oracles.hpp"
#include "ttree/contract.hpp"
#include "ttree/error.hpp"
#include "ttree/messages.hpp"
#include "ttree/serialize.hpp"
#include "ttree/tree.hpp"

using namespace ttree;

namespace {

TensorTree single_tensor(double fill) {
  Tensor t({2, 2, 1}, fill);
  return TensorTree(Mode::Nonnegative, {2, 2}, {{NodeRef::site(0), NodeRef::site(1), -1}}, {t}, 0);
}

}  // namespace

TEST_CASE("build_random_tree shapes") {
  SUBCASE("two inputs") {
    TensorTree t = build_random_tree(2, 2, 10, Mode::Nonnegative, 7);
    CHECK(t.num_tensors() == 1);
    CHECK(t.node(0).left.is_site());
    CHECK(t.node(0).right.is_site());
    CHECK(t.tensor(0).dim(2) == 1);
  }
  SUBCASE("sixteen inputs at chi_max 2") {
    TensorTree t = build_random_tree(16, 2, 2, Mode::Nonnegative, 3);
    CHECK(t.num_tensors() == 15);
    for (int b : t.internal_bonds()) CHECK(t.tensor(b).dim(2) == 2);
  }
  SUBCASE("five inputs validate for many seeds") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      TensorTree t = build_random_tree(5, 2, 3, seed % 2 ? Mode::BornMachine : Mode::Nonnegative, seed);
      CHECK(t.num_tensors() == 4);
      CHECK(validate(t).empty());
    }
  }
  CHECK_THROWS_AS(build_random_tree(1, 2, 2, Mode::Nonnegative, 0), ConfigError);
}

TEST_CASE("bond dims follow subtree input counts") {
  CHECK(forced_bond_dim(1, 8, 2, 10) == 2);
  CHECK(forced_bond_dim(2, 8, 2, 10) == 4);
  CHECK(forced_bond_dim(3, 8, 2, 10) == 8);
  CHECK(forced_bond_dim(6, 8, 2, 10) == 4);
  CHECK(forced_bond_dim(4, 8, 2, 10) == 10);
}

TEST_CASE("random topologies cover all shapes of four leaves") {
  // 15 rooted labeled binary trees on 4 leaves; all should appear.
  Rng rng(11);
  std::set<std::string> seen;
  for (int i = 0; i < 3000; ++i) {
    Topology t = random_topology(4, rng);
    Rng r2(0);
    seen.insert(make_tree(t, 2, 2, Mode::Nonnegative, r2).canonical_newick());
  }
  CHECK(seen.size() == 15);
}

TEST_CASE("log_weight examples") {
  TensorTree u = single_tensor(0.25);
  CHECK(log_weight(u, one_hot_sample({0, 0}, {2, 2})) == doctest::Approx(std::log(0.25)).epsilon(1e-14));

  TensorTree z = single_tensor(0.0);
  z.tensor(0)(0, 0, 0) = 1.0;
  CHECK(log_weight(z, one_hot_sample({0, 1}, {2, 2})) == -std::numeric_limits<double>::infinity());

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    TensorTree t = build_random_tree(4, 2, 3, Mode::Nonnegative, seed);
    oracle::for_each_input(t.site_dims(), [&](const std::vector<int>& x) {
      const Sample s = one_hot_sample(x, t.site_dims());
      CHECK(oracle::rel_err(std::exp(log_weight(t, s)), oracle::weight(t, s)) < 1e-12);
    });
  }
  CHECK_THROWS_AS(log_weight(u, one_hot_sample({0, 0, 1}, {2, 2, 2})), ConfigError);
}

TEST_CASE("log_weight with probability-vector inputs") {
  Rng rng(5);
  for (Mode mode : {Mode::Nonnegative, Mode::BornMachine}) {
    TensorTree t = build_random_tree(5, 2, 3, mode, 9);
    const Sample s = oracle::random_vector_sample(t.site_dims(), rng);
    CHECK(oracle::rel_err(std::exp(log_weight(t, s)), oracle::weight(t, s)) < 1e-12);
  }
}

TEST_CASE("log_partition examples") {
  CHECK(log_partition(single_tensor(0.25)) == doctest::Approx(0.0));
  CHECK(log_partition(single_tensor(1.0)) == doctest::Approx(std::log(4.0)));
  for (Mode mode : {Mode::Nonnegative, Mode::BornMachine}) {
    TensorTree t = build_random_tree(6, 2, 4, mode, 21);
    CHECK(oracle::rel_err(std::exp(log_partition(t)), oracle::partition(t)) < 1e-10);
  }
}

TEST_CASE("marginal_log_weight reductions and brute force") {
  for (Mode mode : {Mode::Nonnegative, Mode::BornMachine}) {
    TensorTree t = build_random_tree(4, 2, 3, mode, 4);
    const Sample s = one_hot_sample({1, 0, 1, 1}, t.site_dims());
    CHECK(marginal_log_weight(t, s, {true, true, true, true}) == doctest::Approx(log_weight(t, s)).epsilon(1e-12));
    CHECK(marginal_log_weight(t, s, {false, false, false, false}) == doctest::Approx(log_partition(t)).epsilon(1e-12));
    double sum = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) sum += oracle::weight(t, one_hot_sample({1, 0, a, b}, t.site_dims()));
    CHECK(oracle::rel_err(std::exp(marginal_log_weight(t, s, {true, true, false, false})), sum) < 1e-10);
  }
}

TEST_CASE("probabilities sum to one") {
  for (Mode mode : {Mode::Nonnegative, Mode::BornMachine}) {
    for (int n : {2, 5, 8, 10}) {
      TensorTree t = build_random_tree(n, 2, 4, mode, 100 + n);
      const double lz = log_partition(t);
      double total = 0.0;
      oracle::for_each_input(t.site_dims(), [&](const std::vector<int>& x) {
        total += std::exp(log_weight(t, one_hot_sample(x, t.site_dims())) - lz);
      });
      CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("weight does not depend on the tensor used as the contraction end") {
  for (Mode mode : {Mode::Nonnegative, Mode::BornMachine}) {
    TensorTree t = build_random_tree(7, 2, 3, mode, 8);
    const Sample s = one_hot_sample({0, 1, 1, 0, 1, 0, 0}, t.site_dims());
    const double lw = log_weight(t, s);
    const double order = mode == Mode::BornMachine ? 2.0 : 1.0;
    for (int id = 0; id < t.num_tensors(); ++id) {
      const Environment env = environment(t, {id, false}, &s);
      const double w = inner(env.values, t.tensor(id)) / order;
      CHECK(oracle::rel_err(std::log(w) + env.log_scale, lw) < 1e-12);
    }
  }
}

TEST_CASE("rescaling keeps long chains finite") {
  TensorTree half = oracle::constant_tree(oracle::chain_topology(64), 2, 2, 0.5);
  std::vector<int> x(64);
  for (int i = 0; i < 64; ++i) x[i] = (i * 7) % 3 == 0;
  const Sample s = one_hot_sample(x, half.site_dims());
  CHECK(log_weight(half, s) == doctest::Approx(std::log(0.5)).epsilon(1e-12));
  CHECK(log_partition(half) == doctest::Approx(63 * std::log(2.0)).epsilon(1e-12));

  // W = 1e-3 * (2e-3)^254 is far below the smallest double.
  TensorTree tiny = oracle::constant_tree(oracle::chain_topology(256), 2, 2, 1e-3);
  const Sample s2 = one_hot_sample(std::vector<int>(256, 1), tiny.site_dims());
  const double expect = std::log(1e-3) + 254 * std::log(2e-3);
  CHECK(std::isfinite(log_weight(tiny, s2)));
  CHECK(log_weight(tiny, s2) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("environment examples") {
  SUBCASE("single tensor indicator") {
    TensorTree t = single_tensor(0.3);
    const Sample s = one_hot_sample({1, 0}, {2, 2});
    const Environment env = environment(t, {0, false}, &s);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        CHECK(env.values(a, b, 0) * std::exp(env.log_scale) == doctest::Approx(a == 1 && b == 0 ? 1.0 : 0.0));
  }
  SUBCASE("Euler identity") {
    for (Mode mode : {Mode::Nonnegative, Mode::BornMachine}) {
      const double order = mode == Mode::BornMachine ? 2.0 : 1.0;
      TensorTree t = build_random_tree(6, 2, 3, mode, 31);
      const Sample s = one_hot_sample({1, 1, 0, 1, 0, 0}, t.site_dims());
      const double w = oracle::weight(t, s);
      const double z = oracle::partition(t);
      for (int id = 0; id < t.num_tensors(); ++id) {
        const Environment e = environment(t, {id, false}, &s);
        CHECK(oracle::rel_err(inner(e.values, t.tensor(id)) * std::exp(e.log_scale), order * w) < 1e-10);
        const Environment ez = environment(t, {id, false}, nullptr);
        CHECK(oracle::rel_err(inner(ez.values, t.tensor(id)) * std::exp(ez.log_scale), order * z) < 1e-10);
        if (t.node(id).parent >= 0) {
          const Environment ef = environment(t, {id, true}, &s);
          CHECK(oracle::rel_err(inner(ef.values, fused_tensor(t, id)) * std::exp(ef.log_scale), order * w) < 1e-10);
        }
      }
    }
  }
  SUBCASE("finite differences") {
    for (Mode mode : {Mode::Nonnegative, Mode::BornMachine}) {
      TensorTree t = build_random_tree(5, 2, 3, mode, 77);
      const Sample s = one_hot_sample({0, 1, 1, 0, 1}, t.site_dims());
      for (int id = 0; id < t.num_tensors(); ++id) {
        const Environment e = environment(t, {id, false}, &s);
        for (std::size_t i = 0; i < t.tensor(id).size(); ++i) {
          TensorTree tp = t, tm = t;
          const double h = 1e-6;
          tp.tensor(id)[i] += h;
          tm.tensor(id)[i] -= h;
          const double fd = (oracle::weight(tp, s) - oracle::weight(tm, s)) / (2 * h);
          const double an = e.values[i] * std::exp(e.log_scale);
          CHECK(std::abs(fd - an) <= 1e-5 * std::max(std::abs(an), 1e-3));
        }
      }
    }
  }
  TensorTree t = single_tensor(1.0);
  CHECK_THROWS_AS(environment(t, {3, false}, nullptr), ConfigError);
}

TEST_CASE("validate reports problems") {
  TensorTree good = build_random_tree(5, 2, 4, Mode::Nonnegative, 1);
  CHECK(validate(good).empty());

  SUBCASE("mismatched bond") {
    TensorTree bad = good;
    int child = good.internal_bonds().front();
    Tensor& t = bad.tensor(child);
    Tensor wider({t.dim(0), t.dim(1), t.dim(2) + 1}, 0.5);
    bad.tensor(child) = wider;
    const auto issues = validate(bad);
    REQUIRE(!issues.empty());
    bool named = false;
    for (const auto& m : issues) named = named || m.find("tensor " + std::to_string(child)) != std::string::npos;
    CHECK(named);
  }
  SUBCASE("negative element") {
    TensorTree bad = good;
    bad.tensor(0)[0] = -1e-9;
    const auto issues = validate(bad);
    REQUIRE(!issues.empty());
    CHECK(issues.front().find("nonnegativity") != std::string::npos);
  }
}

TEST_CASE("model files round-trip exactly") {
  for (Mode mode : {Mode::Nonnegative, Mode::BornMachine}) {
    TensorTree t = build_random_tree(9, 2, 5, mode, 12);
    t.tensor(0)[0] = 0.1 + 1e-17;
    const TensorTree back = model_from_json(model_to_json(t));
    CHECK(back.mode() == t.mode());
    CHECK(back.root() == t.root());
    CHECK(back.canonical_newick() == t.canonical_newick());
    for (int id = 0; id < t.num_tensors(); ++id) {
      CHECK(back.tensor(id).shape() == t.tensor(id).shape());
      for (std::size_t i = 0; i < t.tensor(id).size(); ++i) CHECK(back.tensor(id)[i] == t.tensor(id)[i]);
    }
  }
  CHECK_THROWS_AS(model_from_json("{\"format\":\"other\"}"), IoError);
  CHECK_THROWS_AS(model_from_json("not json"), IoError);
}

TEST_CASE("batch messages agree with single-sample contraction") {
  for (Mode mode : {Mode::Nonnegative, Mode::BornMachine}) {
    TensorTree t = build_random_tree(6, 2, 3, mode, 40);
    Dataset d;
    d.site_dims = t.site_dims();
    Rng rng(2);
    for (int i = 0; i < 7; ++i) d.samples.push_back(oracle::random_vector_sample(d.site_dims, rng));
    const auto idx = all_indices(d.size());
    BatchMessages m(t, d, idx);
    const auto legs = m.tensor_legs(t.root());
    const LocalEval ev = local_nll(t.tensor(t.root()), legs, m.weights(), mode, false);
    double mean = 0.0;
    for (const auto& s : d.samples) mean += log_weight(t, s);
    mean /= static_cast<double>(d.size());
    CHECK(ev.log_z == doctest::Approx(log_partition(t)).epsilon(1e-12));
    CHECK(ev.nll == doctest::Approx(log_partition(t) - mean).epsilon(1e-12));
  }
}
