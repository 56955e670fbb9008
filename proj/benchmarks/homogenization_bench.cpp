/// Microbenchmarks of the engine's hot paths: cell solves, memoized flux
/// evaluation, oscillatory Dirichlet solves, and reconstruction norms.

#include <benchmark/benchmark.h>

#include "monoscale/cell_problem.hpp"
#include "monoscale/corrector.hpp"
#include "monoscale/cover.hpp"
#include "monoscale/homogenized.hpp"
#include "monoscale/macro.hpp"
#include "monoscale/mesh.hpp"
#include "monoscale/operators.hpp"
#include "monoscale/oscillatory.hpp"
#include "monoscale/solver.hpp"

using namespace monoscale;

static void BM_CellSolveLinear1D(benchmark::State& state) {
  const MonotoneMapSpec spec = make_linear_spec(layered_profile(1.0, 3.0), 1);
  const CellMesh mesh = build_cell_mesh(1, static_cast<int>(state.range(0)));
  const Vec x0 = spec.domain.center();
  for (auto _ : state) {
    CellSolution s = solve_cell(spec, mesh, x0, Vec(2.0));
    benchmark::DoNotOptimize(s.averaged_flux);
  }
}
BENCHMARK(BM_CellSolveLinear1D)->Arg(64)->Arg(256);

static void BM_CellSolveCheckerboard2D(benchmark::State& state) {
  const MonotoneMapSpec spec = make_linear_spec(checkerboard_profile(1.0, 4.0), 2);
  const CellMesh mesh = build_cell_mesh(2, static_cast<int>(state.range(0)));
  const Vec x0 = spec.domain.center();
  for (auto _ : state) {
    CellSolution s = solve_cell(spec, mesh, x0, Vec(1.0, 0.0));
    benchmark::DoNotOptimize(s.averaged_flux);
  }
}
BENCHMARK(BM_CellSolveCheckerboard2D)->Arg(32)->Arg(64);

static void BM_CellSolveNonlinear1D(benchmark::State& state) {
  const MonotoneMapSpec spec = make_nonlinear_spec(layered_profile(1.0, 3.0), 1);
  const CellMesh mesh = build_cell_mesh(1, static_cast<int>(state.range(0)));
  const Vec x0 = spec.domain.center();
  SolveOptions opts;
  opts.max_outer = 5000;
  for (auto _ : state) {
    CellSolution s = solve_cell(spec, mesh, x0, Vec(2.0), opts);
    benchmark::DoNotOptimize(s.averaged_flux);
  }
}
BENCHMARK(BM_CellSolveNonlinear1D)->Arg(32)->Arg(64);

static void BM_EffectiveEvalWarmCache(benchmark::State& state) {
  HomogenizedMap map(make_linear_spec(layered_profile(1.0, 3.0), 1), 64);
  const Vec x0 = map.spec().domain.center();
  map.eval_direct(x0, Vec(2.0));
  for (auto _ : state) {
    Vec b = map.eval_direct(x0, Vec(2.0));
    benchmark::DoNotOptimize(b);
  }
}
BENCHMARK(BM_EffectiveEvalWarmCache);

static void BM_OscillatorySolve1D(benchmark::State& state) {
  const MonotoneMapSpec spec = make_linear_spec(layered_profile(1.0, 3.0), 1);
  const MacroMesh mesh = build_macro_mesh(1, Box::unit(1), static_cast<int>(state.range(0)));
  const auto load = assemble_load(mesh, [](const Vec&) { return 1.0; });
  for (auto _ : state) {
    FEField u = solve_oscillatory(spec, 1.0 / 16.0, mesh, load);
    benchmark::DoNotOptimize(u.values);
  }
}
BENCHMARK(BM_OscillatorySolve1D)->Arg(256)->Arg(512);

static void BM_CorrectorErrorNorms(benchmark::State& state) {
  const MonotoneMapSpec spec = make_linear_spec(layered_profile(1.0, 3.0), 1);
  const double eps = 1.0 / 16.0;
  const MacroMesh mesh = build_macro_mesh(1, Box::unit(1), static_cast<int>(state.range(0)));
  const auto load = assemble_load(mesh, [](const Vec&) { return 1.0; });
  const FEField fine = solve_oscillatory(spec, eps, mesh, load);
  HomogenizedMap map(spec, 64);
  map.audit_properties(8, 2, 1);
  std::vector<double> knots;
  for (int i = 0; i <= 16; ++i) knots.push_back(-2.0 + 0.25 * i);
  map.build_table(knots);  // keeps the macro solve off the per-miss cell-solve path
  SolveOptions opts;
  opts.max_outer = 2000;  // the guaranteed step tau = alpha/beta^2 converges slowly
  const FEField macro_u = solve_homogenized(map, mesh, load, opts);
  const CellCover cover = build_cell_cover(spec.domain, eps);
  const StepField step = cell_average(cover, macro_u);
  const CorrectorField P = build_corrector(map, cover, step, AnchorMode::cell_anchor);
  for (auto _ : state) {
    CorrectorErrorReport rep = corrector_error(fine, macro_u, P);
    benchmark::DoNotOptimize(rep);
  }
}
BENCHMARK(BM_CorrectorErrorNorms)->Arg(256);

BENCHMARK_MAIN();
