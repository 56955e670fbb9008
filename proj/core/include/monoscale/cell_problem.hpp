#pragma once

#include "monoscale/mesh.hpp"
#include "monoscale/operators.hpp"
#include "monoscale/solver.hpp"

namespace monoscale {

/// Solution of one periodic cell problem: find v with zero mean such that
/// int_Y (a(anchor, y, xi + Dv), Dphi) dy = 0 for all periodic phi.
struct CellSolution {
  Vec xi;             // imposed mean gradient
  Vec anchor;         // frozen macro point the coefficient was sampled at
  FEField corrector;  // v, zero mean, periodic by construction
  Vec averaged_flux;  // int_Y a(anchor, y, xi + Dv) dy by the solve's quadrature
  double energy = 0;  // int_Y |xi + Dv|^2 dy
  SolveStats stats;
};

/// Solves the cell problem. Linear specs go through an assembled CG solve;
/// nonlinear specs run the monotone iteration. Both land on the same discrete
/// solution (the weak form has one).
CellSolution solve_cell(const MonotoneMapSpec& spec, const CellMesh& mesh, const Vec& anchor,
                        const Vec& xi, const SolveOptions& opts = {});

/// Cell average of the flux for a given corrector field, using the solve's
/// quadrature so discrete monotonicity of the effective map is inherited
/// exactly.
Vec average_flux(const MonotoneMapSpec& spec, const CellMesh& mesh, const Vec& anchor,
                 const Vec& xi, const FEField& corrector);

/// int_Y |xi1 + Dv1 - xi2 - Dv2|^2 for two solutions on the same mesh.
double corrector_pair_energy(const CellSolution& a, const CellSolution& b);

/// Independent 1D effective-flux oracle: in one dimension the cell flux is
/// constant, so b(x, xi) is the unique q with int_Y g_y^{-1}(q) dy = xi where
/// g_y(s) = a(x, y, s). Nested bisection, both levels to `tol`; the integral
/// uses composite 2-point Gauss on n_quadrature panels. Shares no machinery
/// with the FE solve.
double effective_flux_1d(const MonotoneMapSpec& spec, const Vec& anchor, double xi,
                         int n_quadrature, double tol = 1e-12);

}  // namespace monoscale
