#include <doctest.h>

#include <cmath>

#include "models.hpp"
#include "oracles.hpp"
#include "ttree/data.hpp"
#include "ttree/error.hpp"
#include "ttree/schemes.hpp"

using namespace ttree;

namespace {

TrainConfig small_config(Scheme scheme, int t_max) {
  TrainConfig c;
  c.scheme = scheme;
  c.t_max = t_max;
  c.n_batch = 10;
  c.eta = 0.02;
  c.chi_max = 2;
  c.seed = 3;
  c.checkpoint_every = 5;
  c.fused_steps = 3;
  c.pair_rounds = 2;
  return c;
}

}  // namespace

TEST_CASE("scheme names") {
  for (Scheme s : {Scheme::NATT, Scheme::BMATT, Scheme::Hybrid}) CHECK(scheme_from_string(to_string(s)) == s);
  CHECK_THROWS_AS(scheme_from_string("dmrg"), ConfigError);
}

TEST_CASE("table presets") {
  const Preset r = table1_preset("random");
  CHECK(r.n_samples == 10);
  CHECK(r.length == 64);
  CHECK(r.train.n_batch == 10);
  CHECK(r.train.eta == 0.005);
  CHECK(r.train.chi_max == 10);
  CHECK(r.train.t_max == 10000);
  const Preset b = table1_preset("bitwise");
  CHECK(b.n_samples == 1000);
  CHECK(b.train.n_batch == 1000);
  CHECK(b.train.eta == 0.05);
  CHECK(b.train.chi_max == 2);
  const Preset bn = table1_preset("bayesnet");
  CHECK(bn.n_samples == 1000000);
  CHECK(bn.train.n_batch == 10000);
  const Preset m = table1_preset("mtdna");
  CHECK(m.train.chi_input == 4);
  CHECK(m.train.chi_max == 4);
  CHECK(m.train.eta == 0.0005);
  CHECK(m.train.n_batch == 1140);
  CHECK_THROWS_AS(table1_preset("mnist"), ConfigError);
}

TEST_CASE("config validation") {
  const Dataset d = gen_random_bits(8, 4, 1);
  TrainConfig c = small_config(Scheme::NATT, 10);
  c.n_batch = 9;
  CHECK_THROWS_AS(c.validate(&d), ConfigError);
  c.n_batch = 8;
  CHECK_NOTHROW(c.validate(&d));
  c.chi_input = 4;
  CHECK_THROWS_AS(c.validate(&d), ConfigError);
  c = small_config(Scheme::NATT, 0);
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config(Scheme::Hybrid, 10);
  c.hybrid_stage1_fraction = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(train(d, small_config(Scheme::NATT, 5)), ConfigError);
}

TEST_CASE("evaluate examples") {
  const TensorTree product = oracle::constant_tree(oracle::chain_topology(6), 2, 2, 0.4);
  const Evaluation e = evaluate(product, gen_random_bits(200, 6, 2));
  CHECK(e.total_mi < 0.05 * static_cast<double>(e.bonds.size()));
  CHECK(e.nll == doctest::Approx(6 * std::log(2.0)));
  CHECK_FALSE(e.total_ee.has_value());

  const Evaluation c = evaluate(models::copied_bit_model(), models::copied_bit_data());
  REQUIRE(c.bonds.size() == 1);
  CHECK(c.total_mi == doctest::Approx(std::log(2.0)).epsilon(1e-6));

  const Evaluation z = evaluate(models::copied_bit_model(), dataset_from_symbols({{0, 0, 1}}, 2));
  CHECK(std::isinf(z.nll));
  CHECK(z.zero_weight_samples == 1);
}

TEST_CASE("training log and determinism") {
  const Dataset d = gen_bitwise(BitOp::XOR, 2, 40, 5);
  for (Scheme s : {Scheme::NATT, Scheme::BMATT}) {
    const TrainConfig c = small_config(s, 23);
    int visits = 0;
    TrainCallbacks cb;
    cb.on_visit = [&](const BondVisit&, int it, const std::string&) { CHECK(it == ++visits); };
    const TrainResult a = train(d, c, cb);
    const TrainResult b = train(d, c);
    CHECK(visits == 23);
    REQUIRE(a.log.checkpoints.size() == b.log.checkpoints.size());
    CHECK(a.log.checkpoints.back().iteration == 23);
    for (std::size_t i = 0; i < a.log.checkpoints.size(); ++i) {
      const Checkpoint& x = a.log.checkpoints[i];
      CHECK(x.fingerprint == b.log.checkpoints[i].fingerprint);
      CHECK(x.nll == b.log.checkpoints[i].nll);
      if (i > 0) CHECK(x.iteration > a.log.checkpoints[i - 1].iteration);
      CHECK(x.nll >= empirical_entropy(d) - 1e-9);
      CHECK(x.nonnegative);
      CHECK(x.total_ee.has_value() == (s == Scheme::BMATT));
    }
    CHECK(validate(a.tree).empty());
  }
}

TEST_CASE("hybrid hands the stage-one topology to stage two") {
  const Dataset d = gen_bitwise(BitOp::XOR, 4, 40, 6);
  TrainConfig c = small_config(Scheme::Hybrid, 40);
  const TrainResult r = train(d, c);
  REQUIRE(r.log.handoff_before.has_value());
  REQUIRE(r.log.handoff_after.has_value());
  CHECK(*r.log.handoff_before == *r.log.handoff_after);
  CHECK(r.tree.mode() == Mode::Nonnegative);
  const Checkpoint* handoff = nullptr;
  for (const auto& cp : r.log.checkpoints)
    if (cp.iteration == 20) handoff = &cp;
  REQUIRE(handoff != nullptr);
  CHECK(handoff->stage == "bmatt");
  CHECK(handoff->fingerprint == *r.log.handoff_before);
  for (const auto& cp : r.log.checkpoints)
    if (cp.stage == "natt") CHECK(cp.nonnegative);
  CHECK(r.log.checkpoints.back().iteration == 40);
  CHECK(r.log.checkpoints.back().stage == "natt");
}

TEST_CASE("two-site models train without bonds") {
  std::vector<std::vector<int>> rows;
  for (int k = 0; k < 10; ++k) rows.push_back({k % 2, k % 2});
  const Dataset d = dataset_from_symbols(rows, 2);
  TrainConfig c = small_config(Scheme::NATT, 300);
  c.eta = 0.05;
  const TrainResult r = train(d, c);
  CHECK(r.tree.num_tensors() == 1);
  CHECK(r.log.checkpoints.back().iteration == 300);
  CHECK(r.log.checkpoints.back().nll < r.log.checkpoints.front().nll);
  CHECK(r.log.checkpoints.back().nll < std::log(2.0) + 0.1);
}
