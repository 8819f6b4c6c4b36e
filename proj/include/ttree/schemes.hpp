#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ttree/dataset.hpp"
#include "ttree/structure.hpp"
#include "ttree/tree.hpp"

namespace ttree {

enum class Scheme { NATT, BMATT, Hybrid };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& name);

struct TrainConfig {
  Scheme scheme = Scheme::NATT;
  double eta = 0.005;
  /// Budget in bond visits.
  int t_max = 10000;
  int n_batch = 10;
  int chi_input = 2;
  int chi_max = 2;
  bool structure_opt = true;
  std::uint64_t seed = 0;
  double hybrid_stage1_fraction = 0.5;
  int checkpoint_every = 50;
  int fused_steps = 10;
  int pair_rounds = 10;
  double weight_decay = 0.01;
  NMFConfig nmf;

  /// Throws ConfigError on inconsistent values.
  void validate(const Dataset* data = nullptr) const;
};

/// Training parameters and dataset size of one named preset: random, lrcorr,
/// bitwise, bayesnet, mtdna.
struct Preset {
  TrainConfig train;
  int n_samples = 0;
  int length = 0;
};
Preset table1_preset(const std::string& column);

struct Evaluation {
  double nll = 0.0;
  std::vector<BondReport> bonds;
  double total_mi = 0.0;
  std::optional<double> total_ee;
  int zero_weight_samples = 0;
};

/// NLL and bond information of a model on a dataset. Totals run over the
/// internal bonds.
Evaluation evaluate(const TensorTree& tree, const Dataset& data);

struct Checkpoint {
  int iteration = 0;
  std::string stage;
  double nll = 0.0;
  double total_mi = 0.0;
  std::optional<double> total_ee;
  std::uint64_t fingerprint = 0;
  bool nonnegative = true;
};

struct TrainLog {
  std::vector<Checkpoint> checkpoints;
  /// Hybrid only: fingerprints on either side of the stage change.
  std::optional<std::uint64_t> handoff_before;
  std::optional<std::uint64_t> handoff_after;
  int zero_weight_samples = 0;
};

struct TrainCallbacks {
  std::function<void(const BondVisit&, int iteration, const std::string& stage)> on_visit;
  std::function<void(const Checkpoint&)> on_checkpoint;
};

struct TrainResult {
  TensorTree tree;
  TrainLog log;
};

TrainResult train(const Dataset& data, const TrainConfig& config, const TrainCallbacks& callbacks = {});

/// Continues training an existing tree in its own mode for `visits` bond
/// visits, starting the iteration count at `first_iteration`.
void train_stage(TensorTree& tree, const Dataset& data, const TrainConfig& config, int visits,
                 int first_iteration, const std::string& stage, BatchSampler& sampler,
                 TrainLog& log, const TrainCallbacks& callbacks);

}  // namespace ttree
