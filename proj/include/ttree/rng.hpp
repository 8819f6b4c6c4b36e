#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ttree {

using Rng = std::mt19937_64;

/// Derives an independent generator for a named sub-stream of a run seed
/// ("dataset", "init", "batching", ...), so each component is reproducible
/// on its own.
inline Rng make_rng(std::uint64_t seed, std::string_view stream = {}) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (char c : stream) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return Rng(seq);
}

}  // namespace ttree
