#include "monoscale/cell_problem.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "monoscale/errors.hpp"

namespace monoscale {

namespace {

Vec physical_point(const StructuredMesh& mesh, const Box& eb, const Vec& local) {
  Vec x = eb.lo;
  for (int d = 0; d < mesh.dim(); ++d) x[d] += local[d] * mesh.h(d);
  return x;
}

// Pre-samples the scalar coefficient at every quadrature point of the cell
// mesh, in the StiffnessOperator layout e * q.n + k.
std::vector<double> sample_coefficient(const MonotoneMapSpec& spec, const CellMesh& mesh,
                                       const Vec& anchor) {
  const Quadrature& q = quadrature(mesh.dim());
  std::vector<double> c(static_cast<size_t>(mesh.n_elements()) * q.n);
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const Box eb = mesh.element_box(e);
    for (int k = 0; k < q.n; ++k) {
      const Vec y = physical_point(mesh, eb, q.point[k]);
      c[static_cast<size_t>(e) * q.n + k] = coefficient(spec, anchor, wrap_unit(y));
    }
  }
  return c;
}

// Linear path: a(x, y, xi + Dv) = c(x, y)(xi + Dv), so the cell problem is the
// SPD system int c (Dv, Dphi) = -int c (xi, Dphi).
FEField solve_cell_linear(const MonotoneMapSpec& spec, const CellMesh& mesh, const Vec& anchor,
                          const Vec& xi, const SolveOptions& opts, SolveStats* stats) {
  const Quadrature& q = quadrature(mesh.dim());
  std::vector<double> coef = sample_coefficient(spec, mesh, anchor);

  std::vector<double> rhs(static_cast<size_t>(mesh.n_nodes()), 0.0);
  const double vol = mesh.element_volume();
  for (int e = 0; e < mesh.n_elements(); ++e) {
    for (int k = 0; k < q.n; ++k) {
      const double w = q.weight[k] * vol * coef[static_cast<size_t>(e) * q.n + k];
      for (int c = 0; c < mesh.nodes_per_element(); ++c) {
        const Vec gr = basis_gradient_ref(mesh.dim(), c, q.point[k]);
        double contrib = 0.0;
        for (int d = 0; d < mesh.dim(); ++d) contrib += xi[d] * gr[d] / mesh.h(d);
        rhs[static_cast<size_t>(mesh.element_node(e, c))] -= w * contrib;
      }
    }
  }

  const StiffnessOperator op{&mesh, std::move(coef)};
  FEField v = solve_linear_field(mesh, op, rhs, opts, stats);
  if (stats) {
    stats->alpha = spec.alpha;
    stats->beta = spec.beta;
  }
  return v;
}

FEField solve_cell_nonlinear(const MonotoneMapSpec& spec, const CellMesh& mesh, const Vec& anchor,
                             const Vec& xi, const SolveOptions& opts, SolveStats* stats) {
  DiscreteProblem p;
  p.mesh = &mesh;
  p.alpha = spec.alpha;
  p.beta = spec.beta;
  p.load.assign(static_cast<size_t>(mesh.n_nodes()), 0.0);
  p.flux = [&spec, &anchor, &xi](const Vec& y, const Vec& grad) {
    return evaluate(spec, anchor, y, xi + grad);
  };
  return solve_monotone(p, opts, stats);
}

}  // namespace

Vec average_flux(const MonotoneMapSpec& spec, const CellMesh& mesh, const Vec& anchor,
                 const Vec& xi, const FEField& corrector) {
  const Quadrature& q = quadrature(mesh.dim());
  const double vol = mesh.element_volume();
  Vec sum = Vec::zero(mesh.dim());
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const Box eb = mesh.element_box(e);
    for (int k = 0; k < q.n; ++k) {
      const Vec y = physical_point(mesh, eb, q.point[k]);
      const Vec g = xi + corrector.gradient(e, q.point[k]);
      sum += q.weight[k] * vol * evaluate(spec, anchor, y, g);
    }
  }
  // The cell has measure one, so the integral is already the mean.
  return sum;
}

CellSolution solve_cell(const MonotoneMapSpec& spec, const CellMesh& mesh, const Vec& anchor,
                        const Vec& xi, const SolveOptions& opts) {
  if (mesh.space() != SpaceKind::periodic)
    throw ConfigError("solve_cell requires a periodic cell mesh");
  if (xi.dim != mesh.dim() || anchor.dim != spec.dim || spec.dim != mesh.dim())
    throw ConfigError("solve_cell: dimension mismatch between spec, mesh and arguments");

  CellSolution s;
  s.xi = xi;
  s.anchor = anchor;
  if (spec.linear())
    s.corrector = solve_cell_linear(spec, mesh, anchor, xi, opts, &s.stats);
  else
    s.corrector = solve_cell_nonlinear(spec, mesh, anchor, xi, opts, &s.stats);
  s.averaged_flux = average_flux(spec, mesh, anchor, xi, s.corrector);

  const Quadrature& q = quadrature(mesh.dim());
  const double vol = mesh.element_volume();
  double en = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    for (int k = 0; k < q.n; ++k) {
      const Vec g = xi + s.corrector.gradient(e, q.point[k]);
      en += q.weight[k] * vol * dot(g, g);
    }
  }
  s.energy = en;
  return s;
}

double corrector_pair_energy(const CellSolution& a, const CellSolution& b) {
  const CellMesh* mesh = a.corrector.mesh;
  if (mesh == nullptr || mesh != b.corrector.mesh)
    throw ConfigError("corrector_pair_energy: solutions must share one mesh");
  const Quadrature& q = quadrature(mesh->dim());
  const double vol = mesh->element_volume();
  double en = 0.0;
  for (int e = 0; e < mesh->n_elements(); ++e) {
    for (int k = 0; k < q.n; ++k) {
      const Vec d = (a.xi + a.corrector.gradient(e, q.point[k])) -
                    (b.xi + b.corrector.gradient(e, q.point[k]));
      en += q.weight[k] * vol * dot(d, d);
    }
  }
  return en;
}

namespace {

// Inverts s -> g_y(s) = q by bisection. Both families have slope between c and
// 2c, so the root lies between q/(2c) and q/c; the bracket [0, q/c] (oriented
// by sign) always contains it.
double invert_scalar_flux(double c, Family family, double q, double tol) {
  if (q == 0.0) return 0.0;
  double lo = std::min(0.0, q / c);
  double hi = std::max(0.0, q / c);
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (scalar_flux(c, family, Vec(mid))[0] < q)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double effective_flux_1d(const MonotoneMapSpec& spec, const Vec& anchor, double xi,
                         int n_quadrature, double tol) {
  if (spec.dim != 1) throw ConfigError("effective_flux_1d: spec must be one-dimensional");
  if (n_quadrature < 1) throw ConfigError("effective_flux_1d: n_quadrature must be positive");
  if (xi == 0.0) return 0.0;

  // F(q) = int_0^1 g_y^{-1}(q) dy by composite 2-point Gauss. F is strictly
  // increasing with F(0) = 0 and |F(q)| >= |q| / beta, so |q| <= beta |xi|
  // brackets the root of F(q) = xi.
  const double gp = 0.5 / std::sqrt(3.0);
  const double h = 1.0 / n_quadrature;
  auto mean_inverse = [&](double q) {
    double sum = 0.0;
    for (int p = 0; p < n_quadrature; ++p) {
      const double mid = (p + 0.5) * h;
      for (const double y : {mid - gp * h, mid + gp * h}) {
        const double c = coefficient(spec, anchor, wrap_unit(Vec(y)));
        sum += invert_scalar_flux(c, spec.family, q, tol);
      }
    }
    return 0.5 * h * sum;
  };

  double lo = std::min(0.0, spec.beta * xi);
  double hi = std::max(0.0, spec.beta * xi);
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mean_inverse(mid) < xi)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace monoscale
