#include "monoscale/oscillatory.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "monoscale/errors.hpp"

namespace monoscale {

void resolution_check(const MacroMesh& mesh, double epsilon, int min_cells_per_period) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  const double inv = 1.0 / epsilon;
  if (std::abs(inv - std::round(inv)) > 1e-9 * inv)
    throw ConfigError("1/epsilon must be an integer so periods tile the domain exactly; got " +
                      std::to_string(epsilon));
  for (int d = 0; d < mesh.dim(); ++d) {
    const double per_period = epsilon / mesh.h(d);
    if (per_period + 1e-9 < min_cells_per_period)
      throw ConfigError("mesh under-resolves the oscillation on axis " + std::to_string(d) +
                        ": " + std::to_string(per_period) + " elements per period, need >= " +
                        std::to_string(min_cells_per_period));
  }
}

FEField solve_oscillatory(const MonotoneMapSpec& spec, double epsilon, const MacroMesh& mesh,
                          const std::vector<double>& load, const SolveOptions& opts,
                          SolveStats* stats) {
  if (mesh.space() != SpaceKind::dirichlet_zero)
    throw ConfigError("solve_oscillatory needs a Dirichlet macro mesh");
  if (spec.dim != mesh.dim()) throw ConfigError("solve_oscillatory: spec/mesh dimension mismatch");
  if (static_cast<int>(load.size()) != mesh.n_nodes())
    throw ConfigError("solve_oscillatory: load vector does not match the mesh");
  spec.validate();

  const double inv = 1.0 / epsilon;
  if (spec.linear()) {
    // a(x, x/eps, Du) = c(x, x/eps) Du: assemble the sampled coefficient once
    // and run the SPD path.
    const Quadrature& q = quadrature(mesh.dim());
    std::vector<double> coef(static_cast<size_t>(mesh.n_elements()) * q.n);
    for (int e = 0; e < mesh.n_elements(); ++e) {
      const Box eb = mesh.element_box(e);
      for (int k = 0; k < q.n; ++k) {
        Vec x = eb.lo;
        for (int d = 0; d < mesh.dim(); ++d) x[d] += q.point[k][d] * mesh.h(d);
        coef[static_cast<size_t>(e) * q.n + k] = coefficient(spec, x, wrap_unit(inv * x));
      }
    }
    const StiffnessOperator op{&mesh, std::move(coef)};
    FEField u = solve_linear_field(mesh, op, load, opts, stats);
    if (stats) {
      stats->alpha = spec.alpha;
      stats->beta = spec.beta;
    }
    return u;
  }

  DiscreteProblem p;
  p.mesh = &mesh;
  p.alpha = spec.alpha;
  p.beta = spec.beta;
  p.load = load;
  p.flux = [&spec, inv](const Vec& x, const Vec& grad) {
    return evaluate(spec, x, inv * x, grad);
  };
  return solve_monotone(p, opts, stats);
}

}  // namespace monoscale
