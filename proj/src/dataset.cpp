#include "ttree/dataset.hpp"

#include <cstring>
#include <numeric>

#include "ttree/error.hpp"

namespace ttree {

bool Sample::is_one_hot() const {
  for (const auto& v : site_vectors) {
    int ones = 0;
    for (double x : v) {
      if (x == 1.0) {
        ++ones;
      } else if (x != 0.0) {
        return false;
      }
    }
    if (ones != 1) return false;
  }
  return true;
}

std::vector<int> Sample::symbols() const {
  std::vector<int> out(site_vectors.size(), -1);
  for (std::size_t s = 0; s < site_vectors.size(); ++s) {
    int hot = -1;
    bool ok = true;
    for (std::size_t k = 0; k < site_vectors[s].size(); ++k) {
      const double x = site_vectors[s][k];
      if (x == 1.0 && hot < 0) {
        hot = static_cast<int>(k);
      } else if (x != 0.0) {
        ok = false;
      }
    }
    out[s] = ok ? hot : -1;
  }
  return out;
}

Sample one_hot_sample(const std::vector<int>& symbols, const std::vector<int>& site_dims,
                      double weight) {
  if (symbols.size() != site_dims.size()) throw ConfigError("symbol count does not match site count");
  Sample s;
  s.weight = weight;
  s.site_vectors.resize(symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (symbols[i] < 0 || symbols[i] >= site_dims[i]) {
      throw ConfigError("symbol " + std::to_string(symbols[i]) + " out of range at site " +
                        std::to_string(i));
    }
    s.site_vectors[i].assign(site_dims[i], 0.0);
    s.site_vectors[i][symbols[i]] = 1.0;
  }
  return s;
}

double Dataset::total_weight() const {
  double w = 0.0;
  for (const auto& s : samples) w += s.weight;
  return w;
}

void Dataset::validate() const {
  if (site_dims.empty()) throw ConfigError("dataset has no sites");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    if (s.num_sites() != num_sites()) {
      throw ConfigError("sample " + std::to_string(i) + " has " + std::to_string(s.num_sites()) +
                        " sites, expected " + std::to_string(num_sites()));
    }
    if (!(s.weight >= 0.0)) throw ConfigError("sample " + std::to_string(i) + " has a negative weight");
    for (int site = 0; site < num_sites(); ++site) {
      const auto& v = s.site_vectors[site];
      if (static_cast<int>(v.size()) != site_dims[site]) {
        throw ConfigError("sample " + std::to_string(i) + " site " + std::to_string(site) +
                          " has dimension " + std::to_string(v.size()));
      }
      for (double x : v)
        if (!(x >= 0.0)) {
          throw ConfigError("sample " + std::to_string(i) + " site " + std::to_string(site) +
                            " has a negative entry");
        }
    }
  }
}

int Dataset::uniform_site_dim() const {
  if (site_dims.empty()) throw ConfigError("dataset has no sites");
  for (int d : site_dims)
    if (d != site_dims.front()) throw ConfigError("sites have different input dimensions");
  return site_dims.front();
}

std::uint64_t Dataset::checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  for (int d : site_dims) mix(&d, sizeof d);
  mix(alphabet.data(), alphabet.size());
  for (const auto& s : samples) {
    mix(&s.weight, sizeof s.weight);
    for (const auto& v : s.site_vectors) mix(v.data(), v.size() * sizeof(double));
  }
  return h;
}

std::string Dataset::site_label(int site) const {
  if (site >= 0 && site < static_cast<int>(site_names.size())) return site_names[site];
  return std::to_string(site);
}

Dataset dataset_from_symbols(const std::vector<std::vector<int>>& rows, int site_dim,
                             std::string alphabet) {
  Dataset ds;
  ds.alphabet = std::move(alphabet);
  if (rows.empty()) return ds;
  ds.site_dims.assign(rows.front().size(), site_dim);
  ds.samples.reserve(rows.size());
  for (const auto& r : rows) ds.samples.push_back(one_hot_sample(r, ds.site_dims));
  return ds;
}

}  // namespace ttree
