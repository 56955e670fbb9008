#pragma once

#include "monoscale/mesh.hpp"
#include "monoscale/operators.hpp"
#include "monoscale/solver.hpp"

namespace monoscale {

/// Rejects under-resolved oscillatory solves: every mesh spacing must fit at
/// least min_cells_per_period elements into one microstructure period, and
/// 1/epsilon must be an integer so periods tile boxes exactly.
void resolution_check(const MacroMesh& mesh, double epsilon, int min_cells_per_period = 8);

/// Solves the oscillatory Dirichlet problem -div a(x, x/epsilon, Du) = f with
/// zero boundary values. The coefficient is sampled pointwise at quadrature
/// points; resolution_check keeps the sampling subordinate to the FE error.
FEField solve_oscillatory(const MonotoneMapSpec& spec, double epsilon, const MacroMesh& mesh,
                          const std::vector<double>& load, const SolveOptions& opts = {},
                          SolveStats* stats = nullptr);

}  // namespace monoscale
