#include "monoscale/macro.hpp"

#include "monoscale/errors.hpp"

namespace monoscale {

FEField solve_homogenized(HomogenizedMap& b, const MacroMesh& mesh,
                          const std::vector<double>& load, const SolveOptions& opts,
                          SolveStats* stats, bool allow_unaudited) {
  if (mesh.space() != SpaceKind::dirichlet_zero)
    throw ConfigError("solve_homogenized needs a Dirichlet macro mesh");
  if (b.spec().dim != mesh.dim())
    throw ConfigError("solve_homogenized: map/mesh dimension mismatch");
  if (static_cast<int>(load.size()) != mesh.n_nodes())
    throw ConfigError("solve_homogenized: load vector does not match the mesh");
  if (!b.audited() && !allow_unaudited)
    throw ConfigError(
        "effective map has not passed its property audit; run audit_properties first "
        "or override explicitly");

  DiscreteProblem p;
  p.mesh = &mesh;
  p.load = load;
  p.alpha = b.alpha();
  p.beta = b.lipschitz();
  p.flux = [&b](const Vec& x, const Vec& grad) { return b.eval(x, grad); };
  return solve_monotone(p, opts, stats);
}

}  // namespace monoscale
