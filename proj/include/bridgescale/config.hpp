#pragma once

#include <cstdint>

#include "bridgescale/error.hpp"

namespace bridgescale {

struct SolverConfig {
  double tol = 1e-11;
  std::uint64_t max_iter = 10000;
  double damping = 1.0;  // in (0, 1]
  std::uint64_t seed = 0;
  std::uint64_t starts = 1;
  bool anderson = false;

  void validate() const {
    if (!(tol > 0.0)) throw Error(ErrorCode::kValidationError, "tol must be positive");
    if (max_iter < 1) throw Error(ErrorCode::kValidationError, "max_iter must be at least 1");
    if (!(damping > 0.0 && damping <= 1.0)) {
      throw Error(ErrorCode::kValidationError, "damping must lie in (0, 1]");
    }
    if (starts < 1) throw Error(ErrorCode::kValidationError, "starts must be at least 1");
  }
};

}  // namespace bridgescale
