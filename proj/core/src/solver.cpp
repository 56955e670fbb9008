#include "monoscale/solver.hpp"

#include <algorithm>
#include <cmath>

#include "monoscale/errors.hpp"

namespace monoscale {

double SolveStats::contraction_bound() const {
  return std::sqrt(std::max(0.0, 1.0 - 2.0 * tau * alpha + tau * tau * beta * beta));
}

std::vector<double> assemble_load(const StructuredMesh& mesh,
                                  const std::function<double(const Vec&)>& density) {
  const Quadrature& q = quadrature(mesh.dim());
  const double vol = mesh.element_volume();
  std::vector<double> load(static_cast<size_t>(mesh.n_nodes()), 0.0);
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const Box eb = mesh.element_box(e);
    for (int k = 0; k < q.n; ++k) {
      Vec x = eb.lo;
      for (int d = 0; d < mesh.dim(); ++d) x[d] += q.point[k][d] * mesh.h(d);
      const double fw = density(x) * q.weight[k] * vol;
      for (int c = 0; c < mesh.nodes_per_element(); ++c)
        load[static_cast<size_t>(mesh.element_node(e, c))] +=
            fw * basis_value(mesh.dim(), c, q.point[k]);
    }
  }
  zero_constrained_dirichlet_only(mesh, load);
  return load;
}

void zero_constrained_dirichlet_only(const StructuredMesh& mesh, std::vector<double>& v) {
  if (mesh.space() != SpaceKind::dirichlet_zero) return;
  for (int i = 0; i < mesh.n_nodes(); ++i)
    if (mesh.boundary_node(i)) v[static_cast<size_t>(i)] = 0.0;
}

void zero_constrained(const StructuredMesh& mesh, std::vector<double>& v) {
  if (mesh.space() == SpaceKind::periodic) {
    v[0] = 0.0;
    return;
  }
  zero_constrained_dirichlet_only(mesh, v);
}

std::vector<double> assemble_residual(const DiscreteProblem& p, const FEField& u) {
  const StructuredMesh& mesh = *p.mesh;
  const int dim = mesh.dim();
  const Quadrature& q = quadrature(dim);
  const double vol = mesh.element_volume();
  std::vector<double> r(static_cast<size_t>(mesh.n_nodes()), 0.0);
  const int npe = mesh.nodes_per_element();
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const Box eb = mesh.element_box(e);
    for (int k = 0; k < q.n; ++k) {
      Vec x = eb.lo;
      for (int d = 0; d < dim; ++d) x[d] += q.point[k][d] * mesh.h(d);
      const Vec flux = p.flux(x, u.gradient(e, q.point[k]));
      const double w = q.weight[k] * vol;
      for (int c = 0; c < npe; ++c) {
        const Vec gr = basis_gradient_ref(dim, c, q.point[k]);
        double contrib = 0.0;
        for (int d = 0; d < dim; ++d) contrib += flux[d] * gr[d] / mesh.h(d);
        r[static_cast<size_t>(mesh.element_node(e, c))] += w * contrib;
      }
    }
  }
  for (size_t i = 0; i < r.size(); ++i) r[i] -= p.load[i];
  zero_constrained_dirichlet_only(mesh, r);
  return r;
}

void StiffnessOperator::apply(const std::vector<double>& u, std::vector<double>& out) const {
  const StructuredMesh& m = *mesh;
  const int dim = m.dim();
  const Quadrature& q = quadrature(dim);
  const double vol = m.element_volume();
  out.assign(u.size(), 0.0);
  const bool unit = coef.empty();

  if (dim == 1) {
    const double inv_h = 1.0 / m.h(0);
    for (int e = 0; e < m.n_elements(); ++e) {
      const int n0 = m.element_node(e, 0);
      const int n1 = m.element_node(e, 1);
      const double grad = (u[static_cast<size_t>(n1)] - u[static_cast<size_t>(n0)]) * inv_h;
      double cbar = 0.0;
      for (int k = 0; k < q.n; ++k)
        cbar += q.weight[k] * (unit ? 1.0 : coef[static_cast<size_t>(e * q.n + k)]);
      const double t = cbar * vol * grad * inv_h;
      out[static_cast<size_t>(n0)] -= t;
      out[static_cast<size_t>(n1)] += t;
    }
    return;
  }

  const double inv_h0 = 1.0 / m.h(0);
  const double inv_h1 = 1.0 / m.h(1);
  // reference gradients at the four Gauss points, laid out [qp][corner]
  static thread_local std::vector<Vec> gref;
  if (gref.empty()) {
    gref.resize(static_cast<size_t>(q.n) * 4);
    for (int k = 0; k < q.n; ++k)
      for (int c = 0; c < 4; ++c) gref[static_cast<size_t>(k * 4 + c)] = basis_gradient_ref(2, c, q.point[k]);
  }
  for (int e = 0; e < m.n_elements(); ++e) {
    int nodes[4];
    double uu[4];
    for (int c = 0; c < 4; ++c) {
      nodes[c] = m.element_node(e, c);
      uu[c] = u[static_cast<size_t>(nodes[c])];
    }
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    for (int k = 0; k < q.n; ++k) {
      double g0 = 0.0, g1 = 0.0;
      for (int c = 0; c < 4; ++c) {
        const Vec& gr = gref[static_cast<size_t>(k * 4 + c)];
        g0 += uu[c] * gr[0];
        g1 += uu[c] * gr[1];
      }
      g0 *= inv_h0;
      g1 *= inv_h1;
      const double cw = (unit ? 1.0 : coef[static_cast<size_t>(e * q.n + k)]) * q.weight[k] * vol;
      const double f0 = cw * g0 * inv_h0;
      const double f1 = cw * g1 * inv_h1;
      for (int c = 0; c < 4; ++c) {
        const Vec& gr = gref[static_cast<size_t>(k * 4 + c)];
        acc[c] += f0 * gr[0] + f1 * gr[1];
      }
    }
    for (int c = 0; c < 4; ++c) out[static_cast<size_t>(nodes[c])] += acc[c];
  }
}

namespace {
double dot_v(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
}  // namespace

int solve_linear_spd(const LinearOp& op, const std::vector<double>& rhs, std::vector<double>& x,
                     double rel_tol, int max_iter, std::vector<double>* history) {
  const size_t n = rhs.size();
  x.assign(n, 0.0);
  std::vector<double> resid = rhs;
  double rr = dot_v(resid, resid);
  const double stop = rel_tol * rel_tol * rr;
  if (history) history->push_back(std::sqrt(rr));
  if (rr == 0.0) return 0;

  std::vector<double> p = resid, ap(n);
  int it = 0;
  while (true) {
    if (it >= max_iter)
      throw NonConvergence("cg: iteration budget exhausted", it, std::sqrt(rr));
    op(p, ap);
    const double pap = dot_v(p, ap);
    if (pap <= 0.0) throw Error("cg: operator is not positive definite on this subspace");
    const double step = rr / pap;
    for (size_t i = 0; i < n; ++i) x[i] += step * p[i];
    for (size_t i = 0; i < n; ++i) resid[i] -= step * ap[i];
    const double rr_new = dot_v(resid, resid);
    ++it;
    if (history) history->push_back(std::sqrt(rr_new));
    if (rr_new <= stop) return it;
    const double beta = rr_new / rr;
    rr = rr_new;
    for (size_t i = 0; i < n; ++i) p[i] = resid[i] + beta * p[i];
  }
}

FEField solve_monotone(const DiscreteProblem& p, const SolveOptions& opts, SolveStats* stats,
                       const FEField* initial) {
  const StructuredMesh& mesh = *p.mesh;
  if (!(p.alpha > 0.0) || p.beta < p.alpha)
    throw ConfigError("solve_monotone needs 0 < alpha <= beta");
  const double tau = opts.tau > 0.0 ? opts.tau : p.alpha / (p.beta * p.beta);
  if (!(tau > 0.0) || tau >= 2.0 * p.alpha / (p.beta * p.beta))
    throw ConfigError("step tau lies outside the contraction range (0, 2*alpha/beta^2)");

  SolveStats local;
  SolveStats& st = stats ? *stats : local;
  st = SolveStats{};
  st.method = SolveStats::Method::zarantonello;
  st.tau = tau;
  st.alpha = p.alpha;
  st.beta = p.beta;

  FEField u = initial ? *initial : FEField(mesh);
  zero_constrained_dirichlet_only(mesh, u.values);

  StiffnessOperator laplace{&mesh, {}};
  const int n = mesh.n_nodes();
  const int max_cg = opts.max_cg > 0 ? opts.max_cg : 4 * n + 200;
  auto precond = [&](const std::vector<double>& v, std::vector<double>& out) {
    laplace.apply(v, out);
    zero_constrained(mesh, out);
  };

  std::vector<double> direction;
  for (int iter = 0;; ++iter) {
    std::vector<double> r = assemble_residual(p, u);
    zero_constrained(mesh, r);
    solve_linear_spd(precond, r, direction, opts.cg_tol, max_cg);
    const double resid = std::sqrt(std::max(0.0, dot_v(r, direction)));
    st.residual_history.push_back(resid);
    st.final_residual = resid;
    st.iterations = iter;
    if (resid <= opts.outer_tol) break;
    if (iter >= opts.max_outer)
      throw NonConvergence("solve_monotone: outer iteration budget exhausted", iter, resid);
    for (size_t i = 0; i < u.values.size(); ++i) u.values[i] -= tau * direction[i];
  }
  if (mesh.space() == SpaceKind::periodic) subtract_mean(u);
  return u;
}

FEField solve_linear_field(const StructuredMesh& mesh, const StiffnessOperator& op,
                           const std::vector<double>& load, const SolveOptions& opts,
                           SolveStats* stats) {
  std::vector<double> rhs = load;
  zero_constrained(mesh, rhs);
  auto action = [&](const std::vector<double>& v, std::vector<double>& out) {
    op.apply(v, out);
    zero_constrained(mesh, out);
  };
  const int max_cg = opts.max_cg > 0 ? opts.max_cg : 4 * mesh.n_nodes() + 200;
  FEField u(mesh);
  std::vector<double> history;
  const int iters = solve_linear_spd(action, rhs, u.values, opts.cg_tol, max_cg,
                                     stats ? &history : nullptr);
  if (stats) {
    stats->method = SolveStats::Method::cg;
    stats->iterations = iters;
    stats->residual_history = std::move(history);
    stats->final_residual = stats->residual_history.empty() ? 0.0 : stats->residual_history.back();
    stats->tau = 0.0;
    stats->alpha = 0.0;
    stats->beta = 0.0;
  }
  if (mesh.space() == SpaceKind::periodic) subtract_mean(u);
  return u;
}

}  // namespace monoscale
