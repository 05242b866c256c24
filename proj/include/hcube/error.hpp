#pragma once

#include <stdexcept>
#include <string>

namespace hcube {

/// Requested size exceeds a configured or hard capacity limit.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Operands of different hypercube dimensions.
class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A required representation (sphere weights, family members, ...) is absent.
class MissingRepresentation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Floating-point search could not resolve the expected structure (e.g. roots).
class NumericalResolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or stream.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kDefaultMaxDimension = 26;

/// Execution knobs shared by the heavy 2^n-sized kernels.
struct ExecOptions {
  int max_dimension = kDefaultMaxDimension;
  unsigned threads = 1;
};

inline void check_capacity(int n, const ExecOptions& opts) {
  if (n < 0) throw DomainError("hypercube dimension must be nonnegative");
  if (n > opts.max_dimension || n > 30) {
    throw CapacityError("dimension " + std::to_string(n) + " exceeds cap " +
                        std::to_string(opts.max_dimension));
  }
}

}  // namespace hcube
