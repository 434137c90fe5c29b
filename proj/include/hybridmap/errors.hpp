#pragma once

#include <stdexcept>
#include <string>

namespace hybridmap {

/// Bad input data or file format. Mapped to exit code 1 by the CLI.
struct InputError : std::runtime_error {
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure (non-finite loss, divergence). Mapped to exit code 2.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Query outside the supported domain (point not in any allocated voxel,
/// point outside the encoding bounding box). Callers are expected to
/// pre-filter; reaching this is a contract violation.
struct QueryError : std::runtime_error {
  explicit QueryError(const std::string& msg) : std::runtime_error(msg) {}
};

/// API misuse (e.g. running a gradient tape backward twice).
struct UsageError : std::logic_error {
  explicit UsageError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace hybridmap
