/// Linear and fixed-point solves: nodal exactness, route equivalence,
/// contraction, and failure reporting.

#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "monoscale/errors.hpp"
#include "monoscale/mesh.hpp"
#include "monoscale/operators.hpp"
#include "monoscale/solver.hpp"
#include "test_util.hpp"

using namespace monoscale;

namespace {
std::vector<double> sample_coefficient(const StructuredMesh& mesh,
                                       const std::function<double(const Vec&)>& c) {
  const Quadrature& q = quadrature(mesh.dim());
  std::vector<double> coef(static_cast<size_t>(mesh.n_elements() * q.n));
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const Box eb = mesh.element_box(e);
    for (int k = 0; k < q.n; ++k) {
      Vec x = eb.lo;
      for (int d = 0; d < mesh.dim(); ++d) x[d] += q.point[k][d] * mesh.h(d);
      coef[static_cast<size_t>(e * q.n + k)] = c(x);
    }
  }
  return coef;
}
}  // namespace

TEST_SUITE("solver") {
  TEST_CASE("constant load assembles h per interior node") {
    const MacroMesh m = build_macro_mesh(1, Box::unit(1), 4);
    const std::vector<double> load = assemble_load(m, [](const Vec&) { return 1.0; });
    for (int i = 0; i < m.n_nodes(); ++i) {
      if (m.boundary_node(i))
        CHECK(load[static_cast<size_t>(i)] == 0.0);
      else
        CHECK(load[static_cast<size_t>(i)] == doctest::Approx(0.25).epsilon(1e-14));
    }
  }

  TEST_CASE("unit-coefficient solve is nodally exact for a constant load") {
    const MacroMesh m = build_macro_mesh(1, Box::unit(1), 64);
    const std::vector<double> load = assemble_load(m, [](const Vec&) { return 1.0; });
    const StiffnessOperator op{&m, {}};
    const FEField u = solve_linear_field(m, op, load, {});
    CHECK(u.value_at(Vec(0.5)) == doctest::Approx(0.125).epsilon(1e-10));
    CHECK(u.value_at(Vec(0.25)) == doctest::Approx(0.25 * 0.75 / 2.0).epsilon(1e-10));
  }

  TEST_CASE("conjugate gradient and fixed-point routes agree") {
    const MacroMesh m = build_macro_mesh(1, Box::unit(1), 32);
    const auto c = [](const Vec& x) { return 1.0 + x[0]; };
    const std::vector<double> load = assemble_load(m, [](const Vec&) { return 1.0; });

    const StiffnessOperator op{&m, sample_coefficient(m, c)};
    SolveOptions opts;
    opts.cg_tol = 1e-13;
    opts.outer_tol = 1e-12;
    opts.max_outer = 2000;
    const FEField via_cg = solve_linear_field(m, op, load, opts);

    DiscreteProblem p;
    p.mesh = &m;
    p.flux = [&c](const Vec& x, const Vec& g) { return c(x) * g; };
    p.load = load;
    p.alpha = 1.0;
    p.beta = 2.0;
    SolveStats stats;
    const FEField via_fp = solve_monotone(p, opts, &stats);

    for (int i = 0; i < m.n_nodes(); ++i)
      CHECK(via_cg.values[static_cast<size_t>(i)] ==
            doctest::Approx(via_fp.values[static_cast<size_t>(i)]).epsilon(1e-8));
    CHECK(stats.method == SolveStats::Method::zarantonello);

    // the solved field annihilates the residual
    const std::vector<double> r = assemble_residual(p, via_fp);
    double mx = 0.0;
    for (double v : r) mx = std::max(mx, std::abs(v));
    CHECK(mx < 1e-9);
  }

  TEST_CASE("fixed-point histories contract at the guaranteed ratio") {
    const MacroMesh m = build_macro_mesh(1, Box::unit(1), 64);
    DiscreteProblem p;
    p.mesh = &m;
    p.flux = [](const Vec&, const Vec& g) {
      return scalar_flux(1.0, Family::nonlinear_isotropic, g);
    };
    p.load = assemble_load(m, [](const Vec&) { return 1.0; });
    p.alpha = 1.0;
    p.beta = 2.0;
    SolveOptions opts;
    opts.max_outer = 2000;
    SolveStats stats;
    solve_monotone(p, opts, &stats);

    CHECK(stats.tau == doctest::Approx(0.25));
    CHECK(stats.contraction_bound() == doctest::Approx(0.8660254037844386).epsilon(1e-15));
    REQUIRE(stats.residual_history.size() == static_cast<size_t>(stats.iterations) + 1);
    CHECK(stats.iterations > 5);
    for (size_t i = 0; i + 1 < stats.residual_history.size(); ++i) {
      const double r0 = stats.residual_history[i];
      const double r1 = stats.residual_history[i + 1];
      REQUIRE(r0 > 0.0);
      CHECK(r1 / r0 <= stats.contraction_bound() + 1e-3);
    }
    CHECK(stats.final_residual <= opts.outer_tol);
  }

  TEST_CASE("the fixed point is independent of the initial guess") {
    const MacroMesh m = build_macro_mesh(1, Box::unit(1), 32);
    DiscreteProblem p;
    p.mesh = &m;
    p.flux = [](const Vec&, const Vec& g) {
      return scalar_flux(2.0, Family::nonlinear_isotropic, g);
    };
    p.load = assemble_load(m, [](const Vec& x) { return x[0]; });
    p.alpha = 2.0;
    p.beta = 4.0;
    SolveOptions opts;
    opts.max_outer = 2000;
    const FEField from_zero = solve_monotone(p, opts);
    const FEField guess =
        testutil::interpolate(m, [](const Vec& x) { return 5.0 * x[0] * (1.0 - x[0]); });
    const FEField from_guess = solve_monotone(p, opts, nullptr, &guess);
    for (int i = 0; i < m.n_nodes(); ++i)
      CHECK(std::abs(from_zero.values[static_cast<size_t>(i)] -
                     from_guess.values[static_cast<size_t>(i)]) < 1e-8);
  }

  TEST_CASE("exhausted budgets raise with the iteration count") {
    const MacroMesh m = build_macro_mesh(1, Box::unit(1), 32);
    DiscreteProblem p;
    p.mesh = &m;
    p.flux = [](const Vec&, const Vec& g) {
      return scalar_flux(1.0, Family::nonlinear_isotropic, g);
    };
    p.load = assemble_load(m, [](const Vec&) { return 1.0; });
    p.alpha = 1.0;
    p.beta = 2.0;
    SolveOptions opts;
    opts.max_outer = 2;
    opts.outer_tol = 1e-16;
    try {
      solve_monotone(p, opts);
      FAIL("expected a budget failure");
    } catch (const NonConvergence& e) {
      CHECK(e.iterations == 2);
      CHECK(e.final_residual > 0.0);
    }
  }

  TEST_CASE("invalid step sizes are rejected") {
    const MacroMesh m = build_macro_mesh(1, Box::unit(1), 8);
    DiscreteProblem p;
    p.mesh = &m;
    p.flux = [](const Vec&, const Vec& g) { return g; };
    p.load = assemble_load(m, [](const Vec&) { return 1.0; });
    p.alpha = 1.0;
    p.beta = 2.0;
    SolveOptions opts;
    opts.tau = 0.6;  // at or past 2*alpha/beta^2 the scheme need not contract
    CHECK_THROWS_AS(solve_monotone(p, opts), ConfigError);
  }

  TEST_CASE("periodic solves return a zero-mean field") {
    const CellMesh m = build_cell_mesh(1, 32);
    DiscreteProblem p;
    p.mesh = &m;
    p.flux = [](const Vec&, const Vec& g) { return g; };
    p.load = assemble_load(m, [](const Vec& x) { return std::sin(2.0 * M_PI * x[0]); });
    p.alpha = 1.0;
    p.beta = 1.0;
    SolveOptions opts;
    opts.max_outer = 50;
    SolveStats stats;
    const FEField u = solve_monotone(p, opts, &stats);
    CHECK(std::abs(field_mean(u)) < 1e-12);
    CHECK(stats.final_residual <= opts.outer_tol);
    // alpha = beta makes the preconditioned step an exact solve
    CHECK(stats.iterations <= 2);
    double mx = 0.0;
    for (double v : u.values) mx = std::max(mx, std::abs(v));
    CHECK(mx > 1e-3);
  }
}
