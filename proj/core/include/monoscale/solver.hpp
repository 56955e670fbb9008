#pragma once

#include <functional>
#include <vector>

#include "monoscale/mesh.hpp"

namespace monoscale {

struct SolveOptions {
  double tau = 0.0;          // Richardson step; 0 selects alpha/beta^2
  double outer_tol = 1e-10;  // absolute tolerance on the preconditioner-norm residual
  int max_outer = 200;
  double cg_tol = 1e-12;     // relative tolerance of inner CG solves
  int max_cg = 0;            // 0 selects 4*n_nodes + 200
};

struct SolveStats {
  enum class Method { zarantonello, cg };
  Method method = Method::zarantonello;
  int iterations = 0;
  double final_residual = 0.0;
  std::vector<double> residual_history;  // residual before each update, then the final one
  double tau = 0.0;
  double alpha = 0.0;
  double beta = 0.0;

  /// Guaranteed per-step ratio sqrt(1 - 2*tau*alpha + tau^2*beta^2) of the
  /// preconditioner-norm residual (meaningful for the zarantonello method).
  double contraction_bound() const;
};

/// Flux at a quadrature point: physical location and the current gradient of
/// the iterate. Every solve in the engine is assembled through this signature.
using FluxEvaluator = std::function<Vec(const Vec& x, const Vec& grad)>;

/// Weak problem sum_e int (flux(x, Du), Dphi) = <load, phi> on the mesh's
/// space; alpha/beta are the structural constants of the flux map in its
/// gradient argument and drive the default step and the contraction bound.
struct DiscreteProblem {
  const StructuredMesh* mesh = nullptr;
  FluxEvaluator flux;
  std::vector<double> load;
  double alpha = 1.0;
  double beta = 1.0;
};

std::vector<double> assemble_load(const StructuredMesh& mesh,
                                  const std::function<double(const Vec&)>& density);

/// Dual residual r[i] = int (flux(x, Du), Dphi_i) - load[i]. Dirichlet rows
/// are zeroed (those basis functions are not in the space); periodic spaces
/// keep all rows and their residual sums to zero.
std::vector<double> assemble_residual(const DiscreteProblem& p, const FEField& u);

/// Matrix-free coefficient stiffness sum_e int c (Du, Dphi). Empty coef means
/// unit coefficient (the preconditioner); otherwise one scalar per element
/// quadrature point, ordered e * q.n + k.
struct StiffnessOperator {
  const StructuredMesh* mesh = nullptr;
  std::vector<double> coef;

  void apply(const std::vector<double>& u, std::vector<double>& out) const;
};

/// Zero the entries CG treats as constrained: Dirichlet boundary rows, or the
/// pinned node of a periodic space (removes the constant null space; gradients
/// are unaffected and callers subtract the mean afterwards).
void zero_constrained(const StructuredMesh& mesh, std::vector<double>& v);
void zero_constrained_dirichlet_only(const StructuredMesh& mesh, std::vector<double>& v);

using LinearOp = std::function<void(const std::vector<double>&, std::vector<double>&)>;

/// Plain conjugate gradients for an SPD operator action. Returns iteration
/// count; throws NonConvergence past max_iter. rhs and the returned x live in
/// the constrained subspace.
int solve_linear_spd(const LinearOp& op, const std::vector<double>& rhs, std::vector<double>& x,
                     double rel_tol, int max_iter, std::vector<double>* history = nullptr);

/// Preconditioned Richardson iteration u <- u - tau * R^{-1} (A(u) - f) with
/// R the unit-coefficient stiffness of the same space. Converges for any flux
/// with the declared constants when tau is in (0, 2*alpha/beta^2); the
/// recorded residual contracts at least by contraction_bound() every step.
FEField solve_monotone(const DiscreteProblem& p, const SolveOptions& opts = {},
                       SolveStats* stats = nullptr, const FEField* initial = nullptr);

/// Assembled linear solve for coefficient problems; same space conventions.
FEField solve_linear_field(const StructuredMesh& mesh, const StiffnessOperator& op,
                           const std::vector<double>& load, const SolveOptions& opts = {},
                           SolveStats* stats = nullptr);

}  // namespace monoscale
