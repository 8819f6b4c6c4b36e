#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ttree/dataset.hpp"
#include "ttree/tree.hpp"

namespace ttree {

/// I.i.d. uniform bits, one-hot.
Dataset gen_random_bits(int n_samples, int length, std::uint64_t seed);

/// Outer quarters random, middle half one shared random bit.
Dataset gen_lrcorr(int n_samples, int length, std::uint64_t seed);

enum class BitOp { AND, XOR };
BitOp bitop_from_string(const std::string& name);

/// 3 * l_op bits: two random operands and their bitwise result. Cluster i is
/// {i, i + l_op, i + 2 l_op}.
Dataset gen_bitwise(BitOp op, int l_op, int n_samples, std::uint64_t seed);

/// Rooted full binary topology by random recursive leaf splitting, leaves
/// relabeled by a random permutation.
Topology random_split_topology(int num_leaves, Rng& rng);

/// Hidden Markov model on a rooted binary tree: every node is a state; each
/// child draws its state from transition(:, parent state) and only the
/// leaves (sites) are emitted.
struct TreeHmm {
  Topology topology;
  Eigen::VectorXd root_distribution;
  /// Column-stochastic: transition(child, parent).
  Eigen::MatrixXd transition;
  std::string alphabet;
};

Dataset sample_tree_hmm(const TreeHmm& hmm, int n_samples, std::uint64_t seed);

/// Copy-or-resample transition: keep with probability p_keep, otherwise
/// move to one of the other states uniformly.
Eigen::MatrixXd keep_transition(int states, double p_keep);

struct BayesNetSpec {
  int num_visible = 16;
  double p_keep = 0.8;
  Topology topology;
  std::uint64_t seed = 0;
};

BayesNetSpec make_bayesnet_spec(int num_visible, double p_keep, std::uint64_t seed);

struct BayesNetData {
  Dataset data;
  Topology truth;
};

BayesNetData gen_bayesnet(const BayesNetSpec& spec, int n_samples, std::uint64_t seed);

/// Newick of a topology with site labels from `data` (or indices).
std::string topology_newick(const Topology& topo, const Dataset* data = nullptr);

struct FastaRecord {
  std::string name;
  std::string sequence;
};

std::vector<FastaRecord> read_fasta(const std::filesystem::path& path);
void write_fasta(const std::vector<FastaRecord>& records, const std::filesystem::path& path);

/// One site per sequence, one sample per alignment column; A, C, T, G map to
/// states 0..3 and ambiguity codes to uniform vectors over their bases.
Dataset ingest_fasta(const std::vector<std::filesystem::path>& paths);
Dataset dataset_from_fasta(const std::vector<FastaRecord>& records);

/// Text format: a header line, then one sample per line (symbol indices or
/// comma-separated vectors per site), optionally followed by " w=<weight>".
void write_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);
void write_dataset(const Dataset& data, std::ostream& out);
Dataset read_dataset(std::istream& in);

/// Entropy in nats of the empirical joint distribution of the symbols at
/// `sites` (all sites when empty). Samples must be one-hot.
double empirical_entropy(const Dataset& data, const std::vector<int>& sites = {});

/// I(A; B) from empirical_entropy.
double empirical_mi(const Dataset& data, const std::vector<int>& a, const std::vector<int>& b);

}  // namespace ttree
