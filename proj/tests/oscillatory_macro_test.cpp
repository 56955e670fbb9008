/// Dirichlet solves: oscillatory-coefficient problems with the resolution
/// gate, and the effective problem driven by an audited flux map.

#include <cmath>
#include <vector>

#include "doctest.h"
#include "monoscale/errors.hpp"
#include "monoscale/homogenized.hpp"
#include "monoscale/macro.hpp"
#include "monoscale/mesh.hpp"
#include "monoscale/operators.hpp"
#include "monoscale/oscillatory.hpp"
#include "monoscale/solver.hpp"
#include "test_util.hpp"

using namespace monoscale;

TEST_SUITE("oscillatory_macro") {
  TEST_CASE("resolution gate counts elements per period") {
    const MacroMesh fine = build_macro_mesh(1, Box::unit(1), 64);
    CHECK_NOTHROW(resolution_check(fine, 1.0 / 8.0));  // 8 elements per period
    CHECK_THROWS_AS(resolution_check(fine, 1.0 / 8.0, 9), ConfigError);
    const MacroMesh coarse = build_macro_mesh(1, Box::unit(1), 32);
    CHECK_THROWS_AS(resolution_check(coarse, 1.0 / 8.0), ConfigError);
    CHECK_THROWS_AS(resolution_check(fine, 0.3), ConfigError);  // 1/eps not an integer
    const MacroMesh square = build_macro_mesh(2, Box::unit(2), 16);
    CHECK_NOTHROW(resolution_check(square, 0.5));
    CHECK_THROWS_AS(resolution_check(square, 0.25), ConfigError);
  }

  TEST_CASE("unit microstructure reduces to the poisson problem") {
    const MonotoneMapSpec spec = make_linear_spec(constant_profile(1.0), 1);
    const MacroMesh mesh = build_macro_mesh(1, Box::unit(1), 32);
    const auto load = assemble_load(mesh, [](const Vec&) { return 1.0; });
    SolveStats stats;
    const FEField u = solve_oscillatory(spec, 0.25, mesh, load, {}, &stats);
    CHECK(stats.method == SolveStats::Method::cg);  // linear family takes the direct route
    CHECK(u.value_at(Vec(0.5)) == doctest::Approx(0.125).epsilon(1e-10));
    CHECK(u.value_at(Vec(0.25)) == doctest::Approx(0.25 * 0.75 / 2.0).epsilon(1e-10));
  }

  TEST_CASE("two-phase oscillatory solution approaches its effective limit") {
    const MonotoneMapSpec spec = make_linear_spec(layered_profile(1.0, 3.0), 1);
    const MacroMesh mesh = build_macro_mesh(1, Box::unit(1), 512);
    const auto load = assemble_load(mesh, [](const Vec&) { return 1.0; });
    const FEField u = solve_oscillatory(spec, 1.0 / 32.0, mesh, load);
    // Effective coefficient is the harmonic mean 1.5, so the limit solution
    // is (x - x^2) / 3; the distance at this epsilon is already small.
    const FEField u_hom =
        testutil::interpolate(mesh, [](const Vec& x) { return (x[0] - x[0] * x[0]) / 3.0; });
    CHECK(l2_norm_value_diff(u, u_hom) < 0.02);
    CHECK(u.value_at(Vec(0.5)) == doctest::Approx(1.0 / 12.0).epsilon(0.1));
  }

  TEST_CASE("direct and generic routes agree on an oscillatory solve") {
    const MonotoneMapSpec spec = make_linear_spec(layered_profile(1.0, 3.0), 1);
    const double eps = 1.0 / 8.0;
    const MacroMesh mesh = build_macro_mesh(1, Box::unit(1), 64);
    const auto load = assemble_load(mesh, [](const Vec&) { return 1.0; });
    SolveOptions tight;
    tight.outer_tol = 1e-12;
    tight.cg_tol = 1e-13;
    tight.max_outer = 2000;
    const FEField direct = solve_oscillatory(spec, eps, mesh, load, tight);

    DiscreteProblem p;
    p.mesh = &mesh;
    p.flux = [&](const Vec& x, const Vec& grad) {
      Vec y = x;
      for (int d = 0; d < 1; ++d) y[d] = x[d] / eps;
      return evaluate(spec, x, y, grad);
    };
    p.load = load;
    p.alpha = spec.alpha;
    p.beta = spec.beta;
    const FEField generic = solve_monotone(p, tight);

    double worst = 0.0;
    for (size_t i = 0; i < direct.values.size(); ++i)
      worst = std::max(worst, std::abs(direct.values[i] - generic.values[i]));
    CHECK(worst < 1e-8);
  }

  TEST_CASE("the effective dirichlet solve demands an audited map") {
    // A coarse cell mesh keeps the per-miss cell solves cheap inside the
    // macro iteration; the layered composite is grid-exact at any even n.
    HomogenizedMap map(make_linear_spec(layered_profile(1.0, 3.0), 1), 8);
    const MacroMesh mesh = build_macro_mesh(1, Box::unit(1), 32);
    const auto load = assemble_load(mesh, [](const Vec&) { return 1.0; });
    SolveOptions opts;
    opts.max_outer = 2000;  // the guaranteed step tau = alpha/beta^2 converges slowly
    CHECK_THROWS_AS(solve_homogenized(map, mesh, load, opts), ConfigError);
    CHECK_NOTHROW(solve_homogenized(map, mesh, load, opts, nullptr, true));
    REQUIRE(map.audit_properties(16, 4, 5).pass());
    SolveStats stats;
    const FEField u = solve_homogenized(map, mesh, load, opts, &stats);
    CHECK(stats.method == SolveStats::Method::zarantonello);
    CHECK(stats.iterations > 0);
    // b(xi) = 1.5 xi, so the effective problem is -1.5 u'' = 1 and the
    // conforming solution is nodally exact: u(1/2) = 1/12.
    CHECK(u.value_at(Vec(0.5)) == doctest::Approx(1.0 / 12.0).epsilon(1e-8));
    const double bound = stats.contraction_bound();
    for (size_t i = 0; i + 1 < stats.residual_history.size(); ++i) {
      if (stats.residual_history[i] <= 0.0) continue;
      CHECK(stats.residual_history[i + 1] / stats.residual_history[i] <= bound + 1e-3);
    }
  }
}
