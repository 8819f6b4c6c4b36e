#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ttree {

/// One input configuration: a probability vector per site (one-hot for
/// categorical data) with an optional multiplicity.
struct Sample {
  std::vector<std::vector<double>> site_vectors;
  double weight = 1.0;

  int num_sites() const { return static_cast<int>(site_vectors.size()); }
  bool is_one_hot() const;
  /// Symbol index per site; -1 where the vector is not one-hot.
  std::vector<int> symbols() const;
};

Sample one_hot_sample(const std::vector<int>& symbols, const std::vector<int>& site_dims,
                      double weight = 1.0);

struct Dataset {
  std::vector<Sample> samples;
  std::vector<int> site_dims;
  /// Optional symbol table, one character per state (e.g. "01", "ACTG").
  std::string alphabet;
  /// Optional site labels (e.g. sequence names); empty means 0..N-1.
  std::vector<std::string> site_names;

  int num_sites() const { return static_cast<int>(site_dims.size()); }
  std::size_t size() const { return samples.size(); }
  double total_weight() const;
  /// Throws ConfigError when a sample disagrees with site_dims or carries a
  /// negative entry.
  void validate() const;
  /// Uniform input dimension; throws if the sites differ.
  int uniform_site_dim() const;
  /// FNV-1a hash over the numeric content.
  std::uint64_t checksum() const;
  /// Label of a site: its name if set, else its index.
  std::string site_label(int site) const;
};

/// Builds a dataset of one-hot samples from a symbol matrix (rows = samples).
Dataset dataset_from_symbols(const std::vector<std::vector<int>>& rows, int site_dim,
                             std::string alphabet = {});

}  // namespace ttree
