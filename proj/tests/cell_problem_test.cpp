/// Periodic cell solves and the averaged flux: closed-form composites,
/// flux constancy, energy identities, and the bisection reference.

#include <cmath>

#include "doctest.h"
#include "monoscale/cell_problem.hpp"
#include "monoscale/errors.hpp"
#include "monoscale/mesh.hpp"
#include "monoscale/operators.hpp"
#include "monoscale/rng.hpp"

using namespace monoscale;

namespace {
// contrast 6 contracts at ~0.972 per step, so give slow solves headroom
SolveOptions slow_opts() {
  SolveOptions o;
  o.max_outer = 5000;
  return o;
}
}  // namespace

TEST_SUITE("cell_problem") {
  TEST_CASE("a y-constant coefficient needs no corrector") {
    const MonotoneMapSpec spec = make_nonlinear_spec(constant_profile(1.0), 2);
    const CellMesh mesh = build_cell_mesh(2, 8);
    const CellSolution s = solve_cell(spec, mesh, spec.domain.center(), Vec(3.0, 0.0));
    CHECK(gradient_l2_norm(s.corrector) < 1e-8);
    CHECK(s.averaged_flux[0] == doctest::Approx(3.75).epsilon(1e-10));
    CHECK(std::abs(s.averaged_flux[1]) < 1e-10);
    CHECK(s.energy == doctest::Approx(9.0).epsilon(1e-10));
  }

  TEST_CASE("layered linear composite averages harmonically") {
    // c in {1,3} on half cells: effective coefficient 2/(1/1 + 1/3) = 1.5,
    // and the flux energy is q^2 * mean(1/c^2) = 9 * (5/9) = 5 at xi = 2
    const MonotoneMapSpec spec = make_linear_spec(layered_profile(1.0, 3.0), 1);
    const CellMesh mesh = build_cell_mesh(1, 64);
    const Vec x0 = spec.domain.center();
    const CellSolution s2 = solve_cell(spec, mesh, x0, Vec(2.0));
    CHECK(s2.averaged_flux[0] == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(s2.energy == doctest::Approx(5.0).epsilon(1e-9));
    const CellSolution sm4 = solve_cell(spec, mesh, x0, Vec(-4.0));
    CHECK(sm4.averaged_flux[0] == doctest::Approx(-6.0).epsilon(1e-9));
    CHECK(std::abs(field_mean(s2.corrector)) < 1e-12);
  }

  TEST_CASE("the pointwise flux is constant across a 1D cell") {
    const MonotoneMapSpec spec = make_nonlinear_spec(layered_profile(1.0, 3.0), 1);
    const CellMesh mesh = build_cell_mesh(1, 64);
    const Vec x0 = spec.domain.center();
    const CellSolution s = solve_cell(spec, mesh, x0, Vec(2.0), slow_opts());
    const Quadrature& q = quadrature(1);
    double dev = 0.0;
    for (int e = 0; e < mesh.n_elements(); ++e) {
      for (int k = 0; k < q.n; ++k) {
        const Vec y((e + q.point[k][0]) * mesh.h(0));
        const Vec g = Vec(2.0) + s.corrector.gradient(e, q.point[k]);
        dev = std::max(dev, std::abs(evaluate(spec, x0, y, g)[0] - s.averaged_flux[0]));
      }
    }
    CHECK(dev < 1e-8);
  }

  TEST_CASE("bisection reference reproduces the harmonic mean") {
    const MonotoneMapSpec spec = make_linear_spec(layered_profile(1.0, 3.0), 1);
    const Vec x0 = spec.domain.center();
    for (const double xi : {-4.0, 0.5, 8.0})
      CHECK(effective_flux_1d(spec, x0, xi, 256) == doctest::Approx(1.5 * xi).epsilon(1e-9));
    CHECK(effective_flux_1d(spec, x0, 0.0, 256) == 0.0);
  }

  TEST_CASE("discrete solve and bisection reference agree for a nonlinear composite") {
    const MonotoneMapSpec spec = make_nonlinear_spec(layered_profile(1.0, 3.0), 1);
    const CellMesh mesh = build_cell_mesh(1, 64);
    const Vec x0 = spec.domain.center();
    for (const double xi : {-1.0, 2.0}) {
      const CellSolution s = solve_cell(spec, mesh, x0, Vec(xi), slow_opts());
      const double ref = effective_flux_1d(spec, x0, xi, 256);
      CHECK(std::abs(s.averaged_flux[0] - ref) <= 1e-6 * std::max(1.0, std::abs(ref)));
    }
  }

  TEST_CASE("cell energies obey the mean and contrast bounds") {
    const MonotoneMapSpec spec = make_nonlinear_spec(layered_profile(1.0, 3.0), 1);
    const CellMesh mesh = build_cell_mesh(1, 32);
    const Vec x0 = spec.domain.center();
    const double ratio2 = (spec.beta / spec.alpha) * (spec.beta / spec.alpha);
    Rng rng(41);
    for (int i = 0; i < 8; ++i) {
      const Vec xi(rng.uniform(-10.0, 10.0));
      const CellSolution s = solve_cell(spec, mesh, x0, xi, slow_opts());
      // averaging the gradient cannot lower the energy below |xi|^2
      CHECK(s.energy >= dot(xi, xi) - 1e-9);
      CHECK(s.energy <= ratio2 * dot(xi, xi) + 1e-8);
    }
  }

  TEST_CASE("paired solutions differ by at most the contrast factor") {
    const MonotoneMapSpec spec = make_nonlinear_spec(layered_profile(1.0, 3.0), 1);
    const CellMesh mesh = build_cell_mesh(1, 32);
    const Vec x0 = spec.domain.center();
    const double ratio2 = (spec.beta / spec.alpha) * (spec.beta / spec.alpha);
    const CellSolution a = solve_cell(spec, mesh, x0, Vec(3.0), slow_opts());
    const CellSolution b = solve_cell(spec, mesh, x0, Vec(-2.0), slow_opts());
    CHECK(corrector_pair_energy(a, a) < 1e-12);
    CHECK(corrector_pair_energy(a, b) <= ratio2 * 25.0 + 1e-8);
    CHECK(corrector_pair_energy(a, b) > 0.0);
  }

  TEST_CASE("checkerboard flux is axis-aligned by symmetry") {
    const MonotoneMapSpec spec = make_linear_spec(checkerboard_profile(1.0, 4.0), 2);
    const CellMesh mesh = build_cell_mesh(2, 32);
    const CellSolution s = solve_cell(spec, mesh, spec.domain.center(), Vec(1.0, 0.0));
    CHECK(std::abs(s.averaged_flux[1]) < 1e-8);
    CHECK(s.averaged_flux[0] > 1.9);
    CHECK(s.averaged_flux[0] < 2.4);
  }

  TEST_CASE("refinement differences shrink for a smooth profile") {
    const MonotoneMapSpec spec = make_linear_spec(sine_profile(2.0, 0.5), 1);
    const Vec x0 = spec.domain.center();
    const Vec xi(1.0);
    auto b_at = [&](int n) {
      const CellMesh mesh = build_cell_mesh(1, n);
      return solve_cell(spec, mesh, x0, xi).averaged_flux[0];
    };
    const double d1 = std::abs(b_at(16) - b_at(32));
    const double d2 = std::abs(b_at(64) - b_at(128));
    CHECK(d2 < d1);
    CHECK(d1 > 0.0);
  }

  TEST_CASE("dirichlet meshes are rejected for cell solves") {
    const MonotoneMapSpec spec = make_linear_spec(layered_profile(1.0, 3.0), 1);
    const MacroMesh wrong = build_macro_mesh(1, Box::unit(1), 16);
    CHECK_THROWS_AS(solve_cell(spec, wrong, spec.domain.center(), Vec(1.0)), ConfigError);
  }
}
