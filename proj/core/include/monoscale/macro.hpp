#pragma once

#include "monoscale/homogenized.hpp"
#include "monoscale/mesh.hpp"
#include "monoscale/solver.hpp"

namespace monoscale {

/// Solves the effective Dirichlet problem -div b(x, Du) = f with zero boundary
/// values. The iteration consumes b's certified constants (monotone with
/// alpha, Lipschitz with beta^2/alpha), so the map must have passed its
/// property audit unless the caller explicitly overrides.
FEField solve_homogenized(HomogenizedMap& b, const MacroMesh& mesh,
                          const std::vector<double>& load, const SolveOptions& opts = {},
                          SolveStats* stats = nullptr, bool allow_unaudited = false);

}  // namespace monoscale
