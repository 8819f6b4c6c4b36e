#pragma once

#include <stdexcept>
#include <string>

namespace ttree {

/// Invalid configuration or arguments.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// File could not be read, written, or parsed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation produced an unusable result (zero partition function,
/// non-finite tensor, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ttree
