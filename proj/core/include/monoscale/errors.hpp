#pragma once

#include <stdexcept>
#include <string>

namespace monoscale {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A declared structural property (monotonicity, Lipschitz bound, zero at the
/// origin, x-modulus) failed beyond tolerance. Message names the condition.
struct StructuralFailure : Error {
  using Error::Error;
};

/// Configuration or argument rejected before any numerics ran.
struct ConfigError : Error {
  using Error::Error;
};

/// Iteration budget exhausted before the residual tolerance was met.
struct NonConvergence : Error {
  int iterations = 0;
  double final_residual = 0.0;
  NonConvergence(const std::string& msg, int iters, double resid)
      : Error(msg), iterations(iters), final_residual(resid) {}
};

/// Table-mode evaluation outside the tabulated range.
struct ExtrapolationError : Error {
  using Error::Error;
};

/// CSV / JSON input rejected; nothing was imported.
struct ParseError : Error {
  using Error::Error;
};

}  // namespace monoscale
