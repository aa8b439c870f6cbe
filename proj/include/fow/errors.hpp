#pragma once

#include <stdexcept>
#include <string>

namespace fow {

// ---------------------------------------------------------------------------
// Error taxonomy. The CLI maps these to distinct exit codes, so everything a
// user can trigger from a config file or a data file must land in one of the
// three buckets below. Plain std::logic_error/std::invalid_argument remain
// reserved for programmer errors.
// ---------------------------------------------------------------------------

// Malformed or out-of-range experiment configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Missing, inconsistent, or degenerate data at run time (exit code 3).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Hyperparameter outside its feasible range for the given windows
// (exit code 4).
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace fow
