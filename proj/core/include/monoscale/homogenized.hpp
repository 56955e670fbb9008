#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "monoscale/cell_problem.hpp"
#include "monoscale/mesh.hpp"
#include "monoscale/operators.hpp"
#include "monoscale/solver.hpp"

namespace monoscale {

/// Margins of the effective map's structural properties, each normalized by
/// the natural scale of its sample (|xi1 - xi2|^2, |xi1 - xi2|, or |xi|^2), so
/// one absolute tolerance reads across all of them. A margin is the distance
/// to the declared bound: monotonicity passes when the margin is >= -tol, the
/// excess fields pass when <= tol.
struct PropertyAuditReport {
  double monotonicity_margin = 0.0;  // min of [(db, dxi) - alpha|dxi|^2] / |dxi|^2
  double lipschitz_excess = 0.0;     // max of [|db| - (beta^2/alpha)|dxi|] / |dxi|
  double zero_norm = 0.0;            // max |b(x, 0)| over sampled x
  double x_continuity_excess = 0.0;  // max of [|b(x1,xi)-b(x2,xi)|^2 - w(|dx|) C |xi|^2] / |xi|^2
  double continuity_constant = 0.0;  // C = 2 (beta/alpha)^2 (1 + (beta/alpha)^2)
  int xi_pairs = 0;
  int x_pairs = 0;
  uint64_t seed = 0;

  bool pass(double tol = 1e-6) const;
};

/// The effective flux map b(x, xi), evaluated by periodic cell solves with
/// memoization. Evaluations are keyed by the spec's macro structure (single
/// key, part index, or quantized point) and the quantized gradient, so
/// repeated calls return bitwise-identical values. An optional interpolation
/// table accelerates gradient-dense consumers such as the macro solver.
class HomogenizedMap {
 public:
  HomogenizedMap(MonotoneMapSpec spec, int cell_n_per_side, SolveOptions opts = {});

  const MonotoneMapSpec& spec() const { return spec_; }
  const CellMesh& cell_mesh() const { return *mesh_; }
  const SolveOptions& options() const { return opts_; }

  /// Structural constants of b itself: monotone with the spec's alpha,
  /// Lipschitz with beta^2/alpha. The macro solver consumes these.
  double alpha() const { return spec_.alpha; }
  double lipschitz() const { return spec_.beta * spec_.beta / spec_.alpha; }

  /// b(x, xi). Uses the table when one is installed and the gradient lies in
  /// range; otherwise a memoized cell solve.
  Vec eval(const Vec& x, const Vec& xi);

  /// Memoized cell solve, bypassing any table.
  Vec eval_direct(const Vec& x, const Vec& xi);

  /// Full cell solution at (x, xi), pooled separately so corrector assembly
  /// can reuse fields, not just averaged fluxes. Fills the flux cache too.
  const CellSolution& cell_solution(const Vec& x, const Vec& xi);

  /// Composite memoization key; exposed so tests can assert hit behaviour.
  std::string cache_key(const Vec& x, const Vec& xi) const;

  std::size_t cache_size() const;
  std::size_t cache_hits() const;
  std::size_t cache_misses() const;

  /// Writes the flux cache as CSV (x_key, xi components, b components),
  /// rows sorted by key, 17 significant digits, atomic via temp-then-rename.
  void export_cache(const std::string& path) const;

  /// Imports a cache CSV produced by export_cache. All-or-nothing: a malformed
  /// row throws ParseError naming the line and nothing is merged. Returns the
  /// number of rows merged.
  std::size_t import_cache(const std::string& path);

  /// Samples the declared properties of b: monotonicity against alpha,
  /// Lipschitz against beta^2/alpha, b(x,0) = 0, and x-continuity against
  /// w(|dx|) * C with C = 2(beta/alpha)^2(1 + (beta/alpha)^2). Gradients are
  /// drawn from [-10,10]^dim, points from the domain (piecewise structures
  /// draw both points of a pair from one part, where the continuity
  /// hypothesis applies). Marks the map audited when every margin passes.
  PropertyAuditReport audit_properties(int n_xi_pairs, int n_x_pairs, uint64_t seed);

  bool audited() const { return audited_; }

  /// Builds the gradient-interpolation table on a tensor grid with the given
  /// strictly increasing per-axis knots. One table per macro key, so the
  /// structure must have finitely many (constant or piecewise). Records the
  /// worst interpolation error over `probe_count` random in-range gradients.
  void build_table(const std::vector<double>& knots, int probe_count = 64,
                   uint64_t probe_seed = 2026);
  bool table_mode() const { return !tables_.empty(); }
  double table_probe_error() const { return table_probe_error_; }
  void clear_table();

  /// Stats of every cell solve performed, in completion order. The harness
  /// audits the recorded iteration histories against the contraction bound.
  std::vector<SolveStats> solve_log() const;

 private:
  Vec eval_table(const Vec& x, const Vec& xi);
  Vec solve_and_cache(const std::string& key, const Vec& x, const Vec& xi);
  std::string macro_key(const Vec& x) const;
  Vec representative_point(const std::string& macro_key) const;
  std::vector<std::string> all_macro_keys() const;

  MonotoneMapSpec spec_;
  std::unique_ptr<CellMesh> mesh_;
  SolveOptions opts_;

  mutable std::mutex mu_;
  std::map<std::string, Vec> cache_;
  std::map<std::string, CellSolution> pool_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
  std::vector<SolveStats> log_;
  bool audited_ = false;

  struct Table {
    std::vector<double> knots;
    std::vector<Vec> values;  // knot-major, axis 0 fastest
  };
  std::map<std::string, Table> tables_;
  double table_probe_error_ = 0.0;
};

/// Quantized decimal rendering used in memoization keys: 12 significant
/// digits, negative zero normalized.
std::string quantize_component(double v);

}  // namespace monoscale
