#include "ttree/schemes.hpp"

#include <cmath>
#include <limits>

#include "ttree/error.hpp"
#include "ttree/messages.hpp"

namespace ttree {

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::NATT: return "natt";
    case Scheme::BMATT: return "bmatt";
    case Scheme::Hybrid: return "hybrid";
  }
  return "?";
}

Scheme scheme_from_string(const std::string& name) {
  if (name == "natt") return Scheme::NATT;
  if (name == "bmatt") return Scheme::BMATT;
  if (name == "hybrid") return Scheme::Hybrid;
  throw ConfigError("unknown scheme: " + name + " (expected natt, bmatt or hybrid)");
}

void TrainConfig::validate(const Dataset* data) const {
  if (!(eta > 0.0)) throw ConfigError("eta must be positive");
  if (t_max < 1) throw ConfigError("t_max must be positive");
  if (n_batch < 1) throw ConfigError("n_batch must be positive");
  if (chi_input < 1 || chi_max < 1) throw ConfigError("bond dimensions must be positive");
  if (!(hybrid_stage1_fraction > 0.0 && hybrid_stage1_fraction < 1.0)) {
    throw ConfigError("hybrid_stage1_fraction must lie in (0, 1)");
  }
  if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be positive");
  if (fused_steps < 0 || pair_rounds < 0) throw ConfigError("step counts must be nonnegative");
  if (data) {
    if (data->size() == 0) throw ConfigError("dataset is empty");
    if (data->num_sites() < 2) throw ConfigError("a tensor tree needs at least 2 sites");
    if (static_cast<std::size_t>(n_batch) > data->size()) {
      throw ConfigError("n_batch " + std::to_string(n_batch) + " exceeds the dataset size " +
                        std::to_string(data->size()));
    }
    for (int d : data->site_dims)
      if (d != chi_input) {
        throw ConfigError("dataset site dimension " + std::to_string(d) + " differs from chi_input " +
                          std::to_string(chi_input));
      }
  }
}

Preset table1_preset(const std::string& column) {
  Preset p;
  TrainConfig& c = p.train;
  c.t_max = 10000;
  c.chi_input = 2;
  if (column == "random" || column == "lrcorr") {
    p.n_samples = 10;
    p.length = 64;
    c.n_batch = 10;
    c.eta = 0.005;
    c.chi_max = 10;
  } else if (column == "bitwise") {
    p.n_samples = 1000;
    p.length = 48;
    c.n_batch = 1000;
    c.eta = 0.05;
    c.chi_max = 2;
  } else if (column == "bayesnet") {
    p.n_samples = 1000000;
    p.length = 16;
    c.n_batch = 10000;
    c.eta = 0.005;
    c.chi_max = 2;
  } else if (column == "mtdna") {
    p.n_samples = 1140;
    p.length = 16;
    c.n_batch = 1140;
    c.eta = 0.0005;
    c.chi_input = 4;
    c.chi_max = 4;
  } else {
    throw ConfigError("unknown preset column: " + column);
  }
  return p;
}

Evaluation evaluate(const TensorTree& tree, const Dataset& data) {
  if (data.size() == 0) throw ConfigError("cannot evaluate on an empty dataset");
  const auto idx = all_indices(data.size());
  BatchMessages msgs(tree, data, idx);
  const Mode mode = tree.mode();
  Evaluation ev;
  const LocalEval root = local_nll(tree.tensor(tree.root()), msgs.tensor_legs(tree.root()),
                                   msgs.weights(), mode, false);
  ev.nll = root.nll;
  ev.zero_weight_samples = root.zero_weight_samples;
  if (root.zero_weight_samples > 0) ev.nll = std::numeric_limits<double>::infinity();
  if (mode == Mode::BornMachine) ev.total_ee = 0.0;
  for (int bond : tree.internal_bonds()) {
    const LegBatch& below = msgs.up(NodeRef::tensor(bond));
    const LegBatch& above = msgs.down(bond);
    const BondInformation info = bond_information(below, above, msgs.weights(), mode);
    BondReport r;
    r.bond = bond;
    r.mi_raw = info.mi();
    r.mi = std::max(r.mi_raw, -0.05);
    r.chi = tree.tensor(bond).dim(2);
    if (mode == Mode::BornMachine) {
      r.ee = entanglement_entropy(below.gram, above.gram);
      *ev.total_ee += *r.ee;
    }
    ev.total_mi += r.mi;
    ev.bonds.push_back(r);
  }
  return ev;
}

namespace {

StructureConfig structure_config(const TrainConfig& c) {
  StructureConfig s;
  s.chi_max = c.chi_max;
  s.structure_opt = c.structure_opt;
  s.fused_steps = c.fused_steps;
  s.pair_rounds = c.pair_rounds;
  s.adam.eta = c.eta;
  s.adam.weight_decay = c.weight_decay;
  s.nmf = c.nmf;
  return s;
}

bool all_nonnegative(const TensorTree& tree) {
  if (tree.mode() != Mode::Nonnegative) return true;
  for (int id = 0; id < tree.num_tensors(); ++id)
    if (!tree.tensor(id).nonnegative()) return false;
  return true;
}

Checkpoint make_checkpoint(const TensorTree& tree, const Dataset& data, int iteration,
                           const std::string& stage) {
  const Evaluation ev = evaluate(tree, data);
  Checkpoint cp;
  cp.iteration = iteration;
  cp.stage = stage;
  cp.nll = ev.nll;
  cp.total_mi = ev.total_mi;
  cp.total_ee = ev.total_ee;
  cp.fingerprint = tree.fingerprint();
  cp.nonnegative = all_nonnegative(tree);
  return cp;
}

}  // namespace

void train_stage(TensorTree& tree, const Dataset& data, const TrainConfig& config, int visits,
                 int first_iteration, const std::string& stage, BatchSampler& sampler,
                 TrainLog& log, const TrainCallbacks& callbacks) {
  const StructureConfig sc = structure_config(config);
  int iteration = first_iteration;
  auto record = [&](int it) {
    if (!log.checkpoints.empty() && log.checkpoints.back().iteration >= it) return;
    Checkpoint cp = make_checkpoint(tree, data, it, stage);
    log.checkpoints.push_back(cp);
    if (callbacks.on_checkpoint) callbacks.on_checkpoint(cp);
  };

  if (tree.num_tensors() < 2) {
    // No internal bond: plain gradient descent on the only tensor.
    OptState state(tree.tensor(0).shape(), sc.adam);
    for (int v = 0; v < visits; ++v) {
      const std::vector<int> batch = sampler.next();
      BatchMessages msgs(tree, data, batch);
      const auto legs = msgs.tensor_legs(0);
      gradient_step(tree.tensor(0), legs, msgs.weights(), tree.mode(), state);
      ++iteration;
      if (iteration % config.checkpoint_every == 0) record(iteration);
    }
    record(iteration);
    return;
  }

  int done = 0;
  int sweep_index = 0;
  while (done < visits) {
    auto on_visit = [&](const BondVisit& v) {
      ++iteration;
      log.zero_weight_samples += v.zero_weight_samples;
      if (callbacks.on_visit) callbacks.on_visit(v, iteration, stage);
      if (iteration % config.checkpoint_every == 0) record(iteration);
    };
    const auto reports = sweep(tree, data, sc, sampler, sweep_index++, on_visit, visits - done);
    done += static_cast<int>(reports.size());
  }
  record(iteration);
}

TrainResult train(const Dataset& data, const TrainConfig& config, const TrainCallbacks& callbacks) {
  config.validate(&data);
  TrainResult res;
  const Mode first_mode = config.scheme == Scheme::NATT ? Mode::Nonnegative : Mode::BornMachine;
  res.tree = build_random_tree(data.num_sites(), config.chi_input, config.chi_max, first_mode, config.seed);
  BatchSampler sampler(data.size(), config.n_batch, make_rng(config.seed, "batching"));

  if (config.scheme != Scheme::Hybrid) {
    train_stage(res.tree, data, config, config.t_max, 0, to_string(config.scheme), sampler, res.log,
                callbacks);
    return res;
  }

  const int stage1 = std::max(1, static_cast<int>(std::lround(config.hybrid_stage1_fraction * config.t_max)));
  train_stage(res.tree, data, config, stage1, 0, "bmatt", sampler, res.log, callbacks);
  res.log.handoff_before = res.tree.fingerprint();
  Rng rng = make_rng(config.seed, "reinit");
  res.tree.set_mode(Mode::Nonnegative);
  for (int id = 0; id < res.tree.num_tensors(); ++id) randomize_elements(res.tree.tensor(id), Mode::Nonnegative, rng);
  res.log.handoff_after = res.tree.fingerprint();
  train_stage(res.tree, data, config, std::max(0, config.t_max - stage1), stage1, "natt", sampler,
              res.log, callbacks);
  return res;
}

}  // namespace ttree
