#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "monoscale/corrector.hpp"
#include "monoscale/homogenized.hpp"
#include "monoscale/operators.hpp"
#include "monoscale/solver.hpp"

namespace monoscale {

/// Right-hand side descriptor: constant, a product of half-period sines
/// vanishing on the boundary, or a polynomial in the first coordinate.
struct LoadSpec {
  enum class Kind { constant, sine_product, polynomial };
  Kind kind = Kind::constant;
  double value = 1.0;                // constant value or sine amplitude
  std::vector<double> coefficients;  // polynomial: sum_k c_k * x0^k

  std::function<double(const Vec&)> density(const Box& domain) const;
};

/// One experiment. Parsed from a JSON document; every field the run resolves
/// to a default is echoed back in the report.
struct ExperimentConfig {
  enum class Kind { audit, effective, convergence, corrector };

  Kind kind = Kind::audit;
  uint64_t seed = 0;
  MonotoneMapSpec spec;
  int cell_n = 64;
  int macro_n = 0;                    // convergence / corrector
  std::vector<int> inverse_epsilons;  // strictly increasing, so epsilon decreases
  LoadSpec load;
  SolveOptions solver;       // fine and effective Dirichlet solves
  SolveOptions cell_solver;  // periodic cell solves
  std::vector<Vec> xi_grid;  // effective
  int xi_pairs = 200;        // audit sampling
  int x_pairs = 20;
  int gate_xi_pairs = 24;  // audit gate run before Dirichlet solves consume the map
  int gate_x_pairs = 6;
  bool use_table = false;  // tabulated effective flux for the macro solve
  int table_knots = 33;
  double table_lo = -10.0;
  double table_hi = 10.0;
  AnchorMode anchor_mode = AnchorMode::cell_anchor;
  int min_cells_per_period = 8;
  double corr_ratio_bound = 0.35;    // e_corr(eps_min) / e_corr(eps_max) must not exceed this
  double plain_spread_bound = 0.20;  // relative variation of e_plain across the sweep
  std::string out_dir;

  void validate() const;
};

/// Parses the JSON text; errors name the offending field.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config_file(const std::string& path);

/// Everything a run produced. table_csv() is byte-deterministic for a given
/// config and seed (17 significant digits, LF endings, no timings);
/// report_json() adds runtimes, per-row details, and the resolved config.
struct ExperimentReport {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // formatted cells; last column is the verdict
  std::vector<std::map<std::string, double>> row_details;  // extra per-row numbers (JSON only)
  std::vector<std::pair<std::string, bool>> checks;        // named summary verdicts
  std::map<std::string, double> metrics;
  std::map<std::string, double> runtimes;  // phase -> seconds
  std::string resolved_config;             // JSON echo

  bool pass() const;
  std::string table_csv() const;
  std::string report_json() const;
};

/// Runs the experiment. With a cache path, imports an existing cache file
/// before solving and exports the grown cache afterwards. With a configured
/// output directory, writes table.csv and report.json (and gradients.csv for
/// corrector runs) atomically.
ExperimentReport run_experiment(const ExperimentConfig& cfg, const std::string& cache_path = "");

/// Exports the map's cache, imports it into a fresh map of the same spec, and
/// verifies the file reproduces every row bitwise. Returns the row count.
std::size_t cache_roundtrip(const HomogenizedMap& map, const std::string& path);

/// Checks every fixed-point iteration history in the log against its
/// guaranteed contraction factor plus `tol`. Histories from plain conjugate
/// gradient solves are not covered by the bound and are skipped. When `worst`
/// is given it receives the largest observed ratio excess.
bool histories_contract(const std::vector<SolveStats>& log, double tol = 1e-3,
                        double* worst = nullptr);

/// Fixed 17-significant-digit rendering used for all emitted numbers.
std::string format_g17(double v);

}  // namespace monoscale
