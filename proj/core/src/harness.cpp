#include "monoscale/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "monoscale/cell_problem.hpp"
#include "monoscale/errors.hpp"
#include "monoscale/macro.hpp"
#include "monoscale/oscillatory.hpp"

namespace monoscale {

using nlohmann::json;

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

struct Stopwatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double lap() {
    const auto t1 = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(t1 - t0).count();
    t0 = t1;
    return s;
  }
};

std::string verdict(bool pass) { return pass ? "PASS" : "FAIL"; }

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("could not open " + tmp.string() + " for writing");
    f << content;
    if (!f.flush()) throw Error("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("could not move " + tmp.string() + " into place: " + ec.message());
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    v[static_cast<size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  return v;
}

// ---------------------------------------------------------------- parsing --

[[noreturn]] void fail_field(const std::string& field, const std::string& why) {
  throw ParseError("config: field '" + field + "': " + why);
}

const json& require(const json& j, const std::string& field) {
  const auto it = j.find(field);
  if (it == j.end()) throw ParseError("config: missing field '" + field + "'");
  return *it;
}

double require_number(const json& j, const std::string& field) {
  const json& v = require(j, field);
  if (!v.is_number()) fail_field(field, "expected a number");
  return v.get<double>();
}

int require_int(const json& j, const std::string& field) {
  const json& v = require(j, field);
  if (!v.is_number_integer()) fail_field(field, "expected an integer");
  return v.get<int>();
}

std::string require_string(const json& j, const std::string& field) {
  const json& v = require(j, field);
  if (!v.is_string()) fail_field(field, "expected a string");
  return v.get<std::string>();
}

Vec parse_point(const json& v, int dim, const std::string& field) {
  if (!v.is_array() || static_cast<int>(v.size()) != dim)
    fail_field(field, "expected an array of " + std::to_string(dim) + " numbers");
  Vec p = Vec::zero(dim);
  for (int d = 0; d < dim; ++d) {
    if (!v[static_cast<size_t>(d)].is_number()) fail_field(field, "expected numbers");
    p[d] = v[static_cast<size_t>(d)].get<double>();
  }
  return p;
}

Box parse_box(const json& j, int dim, const std::string& field) {
  return Box(parse_point(require(j, "lo"), dim, field + ".lo"),
             parse_point(require(j, "hi"), dim, field + ".hi"));
}

CellProfile parse_profile(const json& j, const std::string& field) {
  const std::string kind = require_string(j, "kind");
  const double c1 = j.value("c1", 1.0);
  const double c2 = j.value("c2", 1.0);
  if (kind == "constant") return constant_profile(c1);
  if (kind == "layered") return layered_profile(c1, c2);
  if (kind == "checkerboard") return checkerboard_profile(c1, c2);
  if (kind == "sine") return sine_profile(c1, c2);
  fail_field(field + ".kind", "unknown profile kind '" + kind + "'");
}

ModulusSpec parse_modulus(const json& j, const std::string& field) {
  ModulusSpec m;
  const std::string form = require_string(j, "form");
  if (form == "linear")
    m.form = ModulusSpec::Form::linear;
  else if (form == "power")
    m.form = ModulusSpec::Form::power;
  else
    fail_field(field + ".form", "expected 'linear' or 'power'");
  m.scale = require_number(j, "scale");
  m.exponent = j.value("exponent", 1.0);
  return m;
}

MonotoneMapSpec parse_spec(const json& j) {
  const int dim = require_int(j, "dim");
  if (dim != 1 && dim != 2) fail_field("spec.dim", "must be 1 or 2");

  const std::string family_name = require_string(j, "family");
  Family family;
  if (family_name == "linear")
    family = Family::linear_tensor;
  else if (family_name == "nonlinear")
    family = Family::nonlinear_isotropic;
  else
    fail_field("spec.family", "expected 'linear' or 'nonlinear'");

  const std::string structure = require_string(j, "structure");
  Box domain = j.contains("domain") ? parse_box(j.at("domain"), dim, "spec.domain")
                                    : Box::unit(dim);

  MonotoneMapSpec spec;
  if (structure == "constant" || structure == "continuous") {
    const CellProfile profile = parse_profile(require(j, "profile"), "spec.profile");
    spec = family == Family::linear_tensor ? make_linear_spec(profile, dim, domain)
                                           : make_nonlinear_spec(profile, dim, domain);
    if (structure == "continuous") {
      const double amp = require_number(j, "modulation_amplitude");
      spec = with_sine_modulation(std::move(spec), amp);
    }
  } else if (structure == "piecewise") {
    const json& parts_json = require(j, "parts");
    if (!parts_json.is_array() || parts_json.empty())
      fail_field("spec.parts", "expected a non-empty array");
    std::vector<SpecPart> parts;
    for (size_t i = 0; i < parts_json.size(); ++i) {
      const json& pj = parts_json[i];
      const std::string field = "spec.parts[" + std::to_string(i) + "]";
      SpecPart part;
      part.box = parse_box(require(pj, "box"), dim, field + ".box");
      part.profile = parse_profile(require(pj, "profile"), field + ".profile");
      part.scale = pj.value("scale", 1.0);
      parts.push_back(part);
    }
    spec = make_piecewise_spec(family, std::move(parts), dim, domain);
  } else {
    fail_field("spec.structure", "expected 'constant', 'piecewise' or 'continuous'");
  }

  if (j.contains("name")) spec.name = require_string(j, "name");
  if (j.contains("alpha")) spec.alpha = require_number(j, "alpha");
  if (j.contains("beta")) spec.beta = require_number(j, "beta");
  if (j.contains("modulus")) spec.modulus = parse_modulus(j.at("modulus"), "spec.modulus");
  spec.validate();
  return spec;
}

LoadSpec parse_load(const json& j) {
  LoadSpec load;
  const std::string kind = require_string(j, "kind");
  if (kind == "constant") {
    load.kind = LoadSpec::Kind::constant;
    load.value = require_number(j, "value");
  } else if (kind == "sine_product") {
    load.kind = LoadSpec::Kind::sine_product;
    load.value = require_number(j, "value");
  } else if (kind == "polynomial") {
    load.kind = LoadSpec::Kind::polynomial;
    const json& c = require(j, "coefficients");
    if (!c.is_array() || c.empty()) fail_field("load.coefficients", "expected a non-empty array");
    for (const json& v : c) {
      if (!v.is_number()) fail_field("load.coefficients", "expected numbers");
      load.coefficients.push_back(v.get<double>());
    }
  } else {
    fail_field("load.kind", "expected 'constant', 'sine_product' or 'polynomial'");
  }
  return load;
}

SolveOptions parse_solver(const json& j, SolveOptions d) {
  d.tau = j.value("tau", d.tau);
  d.outer_tol = j.value("outer_tol", d.outer_tol);
  d.max_outer = j.value("max_outer", d.max_outer);
  d.cg_tol = j.value("cg_tol", d.cg_tol);
  d.max_cg = j.value("max_cg", d.max_cg);
  return d;
}

// ------------------------------------------------------------------- echo --

std::string profile_kind_name(CellProfile::Kind k) {
  switch (k) {
    case CellProfile::Kind::constant: return "constant";
    case CellProfile::Kind::layered: return "layered";
    case CellProfile::Kind::checkerboard: return "checkerboard";
    case CellProfile::Kind::sine: return "sine";
  }
  return "?";
}

json echo_point(const Vec& p) {
  json a = json::array();
  for (int d = 0; d < p.dim; ++d) a.push_back(p[d]);
  return a;
}

json echo_box(const Box& b) { return json{{"lo", echo_point(b.lo)}, {"hi", echo_point(b.hi)}}; }

json echo_profile(const CellProfile& p) {
  return json{{"kind", profile_kind_name(p.kind)}, {"c1", p.c1}, {"c2", p.c2}};
}

json echo_solver(const SolveOptions& s) {
  return json{{"tau", s.tau},
              {"outer_tol", s.outer_tol},
              {"max_outer", s.max_outer},
              {"cg_tol", s.cg_tol},
              {"max_cg", s.max_cg}};
}

json echo_config(const ExperimentConfig& c) {
  json spec;
  spec["name"] = c.spec.name;
  spec["dim"] = c.spec.dim;
  spec["family"] = c.spec.linear() ? "linear" : "nonlinear";
  spec["domain"] = echo_box(c.spec.domain);
  spec["alpha"] = c.spec.alpha;
  spec["beta"] = c.spec.beta;
  switch (c.spec.x_structure) {
    case XStructure::constant:
      spec["structure"] = "constant";
      spec["profile"] = echo_profile(c.spec.profile);
      break;
    case XStructure::continuous:
      spec["structure"] = "continuous";
      spec["profile"] = echo_profile(c.spec.profile);
      spec["modulation_amplitude"] = c.spec.modulation_amplitude;
      spec["modulus"] = json{{"form", c.spec.modulus.form == ModulusSpec::Form::linear
                                          ? "linear"
                                          : "power"},
                             {"scale", c.spec.modulus.scale},
                             {"exponent", c.spec.modulus.exponent}};
      break;
    case XStructure::piecewise: {
      spec["structure"] = "piecewise";
      json parts = json::array();
      for (const SpecPart& p : c.spec.parts)
        parts.push_back(json{{"box", echo_box(p.box)},
                             {"profile", echo_profile(p.profile)},
                             {"scale", p.scale}});
      spec["parts"] = parts;
      break;
    }
  }

  json load{{"kind", c.load.kind == LoadSpec::Kind::constant       ? "constant"
                     : c.load.kind == LoadSpec::Kind::sine_product ? "sine_product"
                                                                   : "polynomial"}};
  if (c.load.kind == LoadSpec::Kind::polynomial)
    load["coefficients"] = c.load.coefficients;
  else
    load["value"] = c.load.value;

  json xi_grid = json::array();
  for (const Vec& v : c.xi_grid) {
    if (c.spec.dim == 1)
      xi_grid.push_back(v[0]);
    else
      xi_grid.push_back(echo_point(v));
  }

  json j;
  j["kind"] = c.kind == ExperimentConfig::Kind::audit         ? "audit"
              : c.kind == ExperimentConfig::Kind::effective   ? "effective"
              : c.kind == ExperimentConfig::Kind::convergence ? "convergence"
                                                              : "corrector";
  j["seed"] = c.seed;
  j["spec"] = spec;
  j["cell_n"] = c.cell_n;
  j["macro_n"] = c.macro_n;
  j["inverse_epsilons"] = c.inverse_epsilons;
  j["load"] = load;
  j["solver"] = echo_solver(c.solver);
  j["cell_solver"] = echo_solver(c.cell_solver);
  j["xi_grid"] = xi_grid;
  j["xi_pairs"] = c.xi_pairs;
  j["x_pairs"] = c.x_pairs;
  j["gate_xi_pairs"] = c.gate_xi_pairs;
  j["gate_x_pairs"] = c.gate_x_pairs;
  j["table"] = json{{"enabled", c.use_table},
                    {"knots", c.table_knots},
                    {"lo", c.table_lo},
                    {"hi", c.table_hi}};
  j["anchor_mode"] = c.anchor_mode == AnchorMode::cell_anchor ? "cell_anchor" : "part_anchor";
  j["min_cells_per_period"] = c.min_cells_per_period;
  j["corr_ratio_bound"] = c.corr_ratio_bound;
  j["plain_spread_bound"] = c.plain_spread_bound;
  j["out_dir"] = c.out_dir;
  return j;
}

}  // namespace

// ------------------------------------------------------------------- load --

std::function<double(const Vec&)> LoadSpec::density(const Box& domain) const {
  switch (kind) {
    case Kind::constant: {
      const double v = value;
      return [v](const Vec&) { return v; };
    }
    case Kind::sine_product: {
      const double v = value;
      const Box box = domain;
      return [v, box](const Vec& x) {
        double f = v;
        for (int d = 0; d < x.dim; ++d)
          f *= std::sin(M_PI * (x[d] - box.lo[d]) / box.side(d));
        return f;
      };
    }
    case Kind::polynomial: {
      const std::vector<double> c = coefficients;
      return [c](const Vec& x) {
        double f = 0.0;
        for (size_t k = c.size(); k-- > 0;) f = f * x[0] + c[k];
        return f;
      };
    }
  }
  throw ConfigError("unknown load kind");
}

// ----------------------------------------------------------------- config --

void ExperimentConfig::validate() const {
  spec.validate();
  if (cell_n < 2) throw ConfigError("cell_n must be at least 2");
  if (!(solver.outer_tol > 0.0) || !(solver.cg_tol > 0.0) || !(cell_solver.outer_tol > 0.0) ||
      !(cell_solver.cg_tol > 0.0))
    throw ConfigError("solver tolerances must be positive");
  if (load.kind == LoadSpec::Kind::polynomial && load.coefficients.empty())
    throw ConfigError("polynomial load needs coefficients");

  if (kind == Kind::effective) {
    if (xi_grid.empty()) throw ConfigError("effective runs need a non-empty xi_grid");
    for (const Vec& v : xi_grid)
      if (v.dim != spec.dim) throw ConfigError("xi_grid entries must match the spec dimension");
  }
  if (kind == Kind::audit && xi_pairs < 1) throw ConfigError("audit needs xi_pairs >= 1");

  if (kind == Kind::convergence || kind == Kind::corrector) {
    if (macro_n < 2) throw ConfigError("convergence and corrector runs need macro_n >= 2");
    if (inverse_epsilons.empty()) throw ConfigError("inverse_epsilons must not be empty");
    for (size_t i = 0; i < inverse_epsilons.size(); ++i) {
      if (inverse_epsilons[i] < 1) throw ConfigError("inverse_epsilons entries must be >= 1");
      if (i > 0 && inverse_epsilons[i] <= inverse_epsilons[i - 1])
        throw ConfigError("inverse_epsilons must be strictly increasing (epsilon decreasing)");
    }
    double min_side = std::numeric_limits<double>::infinity();
    for (int d = 0; d < spec.dim; ++d) min_side = std::min(min_side, spec.domain.side(d));
    for (const int inv : inverse_epsilons) {
      const double eps = 1.0 / inv;
      if (eps > min_side)
        throw ConfigError("epsilon 1/" + std::to_string(inv) + " exceeds the domain");
      for (int d = 0; d < spec.dim; ++d) {
        const double h = spec.domain.side(d) / macro_n;
        if (eps / h + 1e-9 < min_cells_per_period)
          throw ConfigError("macro_n " + std::to_string(macro_n) +
                            " under-resolves epsilon 1/" + std::to_string(inv) + ": " +
                            format_g17(eps / h) + " elements per period, need >= " +
                            std::to_string(min_cells_per_period));
      }
    }
    if (use_table) {
      if (table_knots < 2) throw ConfigError("table needs at least 2 knots");
      if (!(table_lo < table_hi)) throw ConfigError("table range must have lo < hi");
    }
    if (!(corr_ratio_bound > 0.0) || !(plain_spread_bound > 0.0))
      throw ConfigError("trend thresholds must be positive");
  }
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: invalid JSON: ") + e.what());
  }
  try {
    ExperimentConfig cfg;
    const std::string kind = require_string(j, "kind");
    if (kind == "audit")
      cfg.kind = ExperimentConfig::Kind::audit;
    else if (kind == "effective")
      cfg.kind = ExperimentConfig::Kind::effective;
    else if (kind == "convergence")
      cfg.kind = ExperimentConfig::Kind::convergence;
    else if (kind == "corrector")
      cfg.kind = ExperimentConfig::Kind::corrector;
    else
      fail_field("kind", "expected 'audit', 'effective', 'convergence' or 'corrector'");

    cfg.seed = j.value("seed", uint64_t{0});
    cfg.spec = parse_spec(require(j, "spec"));
    cfg.cell_n = j.value("cell_n", 64);
    cfg.macro_n = j.value("macro_n", 0);
    if (j.contains("inverse_epsilons")) {
      const json& arr = j.at("inverse_epsilons");
      if (!arr.is_array()) fail_field("inverse_epsilons", "expected an array of integers");
      for (const json& v : arr) {
        if (!v.is_number_integer()) fail_field("inverse_epsilons", "expected integers");
        cfg.inverse_epsilons.push_back(v.get<int>());
      }
    }
    if (j.contains("load")) cfg.load = parse_load(j.at("load"));

    // Harness defaults are sized for desk-scale studies: slow contractions
    // near the Lipschitz/monotonicity limit still fit the iteration budget.
    cfg.solver.max_outer = 50000;
    cfg.cell_solver.max_outer = 20000;
    if (j.contains("solver")) cfg.solver = parse_solver(j.at("solver"), cfg.solver);
    if (j.contains("cell_solver"))
      cfg.cell_solver = parse_solver(j.at("cell_solver"), cfg.cell_solver);

    if (j.contains("xi_grid")) {
      const json& arr = j.at("xi_grid");
      if (!arr.is_array()) fail_field("xi_grid", "expected an array");
      for (const json& v : arr) {
        if (cfg.spec.dim == 1) {
          if (!v.is_number()) fail_field("xi_grid", "expected numbers for a 1D spec");
          cfg.xi_grid.push_back(Vec(v.get<double>()));
        } else {
          cfg.xi_grid.push_back(parse_point(v, 2, "xi_grid"));
        }
      }
    }
    cfg.xi_pairs = j.value("xi_pairs", 200);
    cfg.x_pairs = j.value("x_pairs", 20);
    cfg.gate_xi_pairs = j.value("gate_xi_pairs", 24);
    cfg.gate_x_pairs = j.value("gate_x_pairs", 6);
    if (j.contains("table")) {
      const json& t = j.at("table");
      cfg.use_table = t.value("enabled", true);
      cfg.table_knots = t.value("knots", 33);
      cfg.table_lo = t.value("lo", -10.0);
      cfg.table_hi = t.value("hi", 10.0);
    }
    if (j.contains("anchor_mode")) {
      const std::string mode = require_string(j, "anchor_mode");
      if (mode == "cell_anchor")
        cfg.anchor_mode = AnchorMode::cell_anchor;
      else if (mode == "part_anchor")
        cfg.anchor_mode = AnchorMode::part_anchor;
      else
        fail_field("anchor_mode", "expected 'cell_anchor' or 'part_anchor'");
    }
    cfg.min_cells_per_period = j.value("min_cells_per_period", 8);
    cfg.corr_ratio_bound = j.value("corr_ratio_bound", 0.35);
    cfg.plain_spread_bound = j.value("plain_spread_bound", 0.20);
    cfg.out_dir = j.value("out_dir", std::string{});
    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open config file " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config(buf.str());
}

// ----------------------------------------------------------------- report --

bool ExperimentReport::pass() const {
  for (const auto& row : rows)
    if (!row.empty() && row.back() != "PASS") return false;
  for (const auto& [name, ok] : checks)
    if (!ok) return false;
  return true;
}

std::string ExperimentReport::table_csv() const {
  std::ostringstream out;
  for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
  return out.str();
}

std::string ExperimentReport::report_json() const {
  json j;
  j["config"] = json::parse(resolved_config);
  j["columns"] = header;
  json jrows = json::array();
  for (size_t r = 0; r < rows.size(); ++r) {
    json cells;
    for (size_t i = 0; i < header.size() && i < rows[r].size(); ++i) cells[header[i]] = rows[r][i];
    json row{{"cells", cells}};
    if (r < row_details.size() && !row_details[r].empty()) {
      json details;
      for (const auto& [k, v] : row_details[r]) details[k] = v;
      row["details"] = details;
    }
    jrows.push_back(row);
  }
  j["rows"] = jrows;
  json jchecks = json::array();
  for (const auto& [name, ok] : checks) jchecks.push_back(json{{"name", name}, {"pass", ok}});
  j["checks"] = jchecks;
  j["metrics"] = json::object();
  for (const auto& [k, v] : metrics) j["metrics"][k] = v;
  j["runtimes"] = json::object();
  for (const auto& [k, v] : runtimes) j["runtimes"][k] = v;
  j["pass"] = pass();
  return j.dump(2) + "\n";
}

// ------------------------------------------------------------ contraction --

bool histories_contract(const std::vector<SolveStats>& log, double tol, double* worst) {
  bool ok = true;
  double w = -std::numeric_limits<double>::infinity();
  for (const SolveStats& s : log) {
    if (s.method != SolveStats::Method::zarantonello) continue;
    const double bound = s.contraction_bound();
    for (size_t i = 0; i + 1 < s.residual_history.size(); ++i) {
      const double r0 = s.residual_history[i];
      const double r1 = s.residual_history[i + 1];
      if (r0 <= 0.0) {
        if (r1 > 0.0) ok = false;
        continue;
      }
      const double excess = r1 / r0 - bound;
      w = std::max(w, excess);
      if (excess > tol) ok = false;
    }
  }
  if (worst) *worst = std::isfinite(w) ? w : 0.0;
  return ok;
}

// -------------------------------------------------------------- pipelines --

namespace {

void run_audit(const ExperimentConfig& cfg, HomogenizedMap& map, ExperimentReport& rep) {
  Stopwatch sw;
  const PropertyAuditReport a = map.audit_properties(cfg.xi_pairs, cfg.x_pairs, cfg.seed);
  rep.runtimes["audit"] += sw.lap();

  rep.header = {"check", "value", "bound", "verdict"};
  auto row = [&rep](const std::string& name, double value, double bound, bool pass) {
    rep.rows.push_back({name, format_g17(value), format_g17(bound), verdict(pass)});
    rep.row_details.emplace_back();
  };
  row("monotonicity_margin", a.monotonicity_margin, -1e-6, a.monotonicity_margin >= -1e-6);
  row("lipschitz_excess", a.lipschitz_excess, 1e-6, a.lipschitz_excess <= 1e-6);
  row("zero_norm", a.zero_norm, 1e-10, a.zero_norm <= 1e-10);
  row("x_continuity_excess", a.x_continuity_excess, 1e-6, a.x_continuity_excess <= 1e-6);
  rep.checks.emplace_back("audit_pass", a.pass());
  rep.metrics["monotonicity_margin"] = a.monotonicity_margin;
  rep.metrics["lipschitz_excess"] = a.lipschitz_excess;
  rep.metrics["zero_norm"] = a.zero_norm;
  rep.metrics["x_continuity_excess"] = a.x_continuity_excess;
  rep.metrics["continuity_constant"] = a.continuity_constant;
}

void run_effective(const ExperimentConfig& cfg, HomogenizedMap& map, ExperimentReport& rep) {
  const int dim = cfg.spec.dim;
  const Vec x0 = cfg.spec.domain.center();
  Stopwatch sw;
  double worst_err = 0.0;
  bool all_ok = true;

  if (dim == 1) {
    rep.header = {"xi0", "b0", "reference", "abs_err", "verdict"};
    for (const Vec& xi : cfg.xi_grid) {
      const Vec b = map.eval_direct(x0, xi);
      const double ref =
          effective_flux_1d(cfg.spec, x0, xi[0], std::max(256, 2 * cfg.cell_n));
      const double err = std::abs(b[0] - ref);
      const bool ok = err <= 1e-4 * std::max(1.0, std::abs(xi[0]));
      all_ok = all_ok && ok;
      worst_err = std::max(worst_err, err);
      rep.rows.push_back(
          {format_g17(xi[0]), format_g17(b[0]), format_g17(ref), format_g17(err), verdict(ok)});
      rep.row_details.emplace_back();
    }
    rep.checks.emplace_back("reference_agreement", all_ok);
  } else {
    rep.header = {"xi0", "xi1", "b0", "b1", "verdict"};
    for (const Vec& xi : cfg.xi_grid) {
      const Vec b = map.eval_direct(x0, xi);
      const bool ok = finite(b);
      all_ok = all_ok && ok;
      rep.rows.push_back({format_g17(xi[0]), format_g17(xi[1]), format_g17(b[0]),
                          format_g17(b[1]), verdict(ok)});
      rep.row_details.emplace_back();
    }
    rep.checks.emplace_back("values_finite", all_ok);
  }
  rep.runtimes["cell_solves"] += sw.lap();
  rep.metrics["max_abs_err"] = worst_err;
  rep.metrics["cache_hits"] = static_cast<double>(map.cache_hits());
  rep.metrics["cache_misses"] = static_cast<double>(map.cache_misses());
}

struct MacroContext {
  MacroMesh mesh;
  std::vector<double> load;
  FEField u;
};

MacroContext prepare_macro(const ExperimentConfig& cfg, HomogenizedMap& map,
                           ExperimentReport& rep, std::vector<SolveStats>& dirichlet_stats) {
  Stopwatch sw;
  const PropertyAuditReport gate =
      map.audit_properties(cfg.gate_xi_pairs, cfg.gate_x_pairs, cfg.seed);
  rep.runtimes["audit"] += sw.lap();
  if (!map.audited())
    throw StructuralFailure(
        "effective map failed its audit gate: monotonicity margin " +
        format_g17(gate.monotonicity_margin) + ", Lipschitz excess " +
        format_g17(gate.lipschitz_excess) + ", zero norm " + format_g17(gate.zero_norm) +
        ", continuity excess " + format_g17(gate.x_continuity_excess));

  if (cfg.use_table) {
    map.build_table(linspace(cfg.table_lo, cfg.table_hi, cfg.table_knots));
    rep.runtimes["cell_solves"] += sw.lap();
    rep.metrics["table_probe_error"] = map.table_probe_error();
  }

  MacroContext ctx{build_macro_mesh(cfg.spec.dim, cfg.spec.domain, cfg.macro_n), {}, {}};
  ctx.load = assemble_load(ctx.mesh, cfg.load.density(cfg.spec.domain));
  SolveStats stats;
  ctx.u = solve_homogenized(map, ctx.mesh, ctx.load, cfg.solver, &stats);
  dirichlet_stats.push_back(stats);
  rep.runtimes["macro_solve"] += sw.lap();
  rep.metrics["macro_iterations"] = static_cast<double>(stats.iterations);
  return ctx;
}

std::vector<Box> part_boxes(const MonotoneMapSpec& spec) {
  std::vector<Box> boxes;
  if (spec.x_structure == XStructure::piecewise)
    for (const SpecPart& p : spec.parts) boxes.push_back(p.box);
  return boxes;
}

void run_convergence(const ExperimentConfig& cfg, HomogenizedMap& map, ExperimentReport& rep,
                     std::vector<SolveStats>& dirichlet_stats) {
  MacroContext ctx = prepare_macro(cfg, map, rep, dirichlet_stats);
  const std::vector<Box> parts = part_boxes(cfg.spec);

  rep.header = {"epsilon", "e_plain", "e_corr", "e_outside", "verdict"};
  std::vector<double> e_corrs, e_plains, u_errs;
  Stopwatch sw;
  for (const int inv : cfg.inverse_epsilons) {
    const double eps = 1.0 / inv;
    resolution_check(ctx.mesh, eps, cfg.min_cells_per_period);

    sw.lap();
    SolveStats fine_stats;
    const FEField u_h =
        solve_oscillatory(cfg.spec, eps, ctx.mesh, ctx.load, cfg.solver, &fine_stats);
    dirichlet_stats.push_back(fine_stats);
    rep.runtimes["fine_solve"] += sw.lap();

    const CellCover cover = build_cell_cover(cfg.spec.domain, eps, AnchorRule::center, parts);
    const StepField step = cell_average(cover, ctx.u);
    rep.runtimes["norms"] += sw.lap();
    const CorrectorField P = build_corrector(map, cover, step, cfg.anchor_mode);
    rep.runtimes["cell_solves"] += sw.lap();
    const CorrectorErrorReport err = corrector_error(u_h, ctx.u, P);
    const double u_err = l2_norm_value_diff(u_h, ctx.u);
    rep.runtimes["norms"] += sw.lap();

    const bool row_ok = e_corrs.empty() ||
                        (err.e_corr < e_corrs.back() && u_err < u_errs.back());
    rep.rows.push_back({format_g17(eps), format_g17(err.e_plain), format_g17(err.e_corr),
                        format_g17(err.e_outside), verdict(row_ok)});
    rep.row_details.push_back({{"u_err", u_err},
                               {"fine_iterations", static_cast<double>(fine_stats.iterations)},
                               {"interior_cells", static_cast<double>(cover.interior.size())},
                               {"boundary_cells", static_cast<double>(cover.boundary.size())}});
    e_corrs.push_back(err.e_corr);
    e_plains.push_back(err.e_plain);
    u_errs.push_back(u_err);
  }

  bool corr_decreasing = true, u_decreasing = true;
  for (size_t i = 1; i < e_corrs.size(); ++i) {
    corr_decreasing = corr_decreasing && e_corrs[i] < e_corrs[i - 1];
    u_decreasing = u_decreasing && u_errs[i] < u_errs[i - 1];
  }
  const double ratio = e_corrs.front() > 0.0 ? e_corrs.back() / e_corrs.front() : 0.0;
  const double plain_lo = *std::min_element(e_plains.begin(), e_plains.end());
  const double plain_hi = *std::max_element(e_plains.begin(), e_plains.end());
  const double spread = plain_lo > 0.0 ? (plain_hi - plain_lo) / plain_lo
                                       : (plain_hi > 0.0 ? std::numeric_limits<double>::infinity()
                                                         : 0.0);
  rep.checks.emplace_back("e_corr_decreasing", corr_decreasing);
  rep.checks.emplace_back("e_corr_ratio", ratio <= cfg.corr_ratio_bound);
  rep.checks.emplace_back("e_plain_spread", spread < cfg.plain_spread_bound);
  rep.checks.emplace_back("u_err_decreasing", u_decreasing);
  rep.metrics["e_corr_ratio"] = ratio;
  rep.metrics["e_plain_spread"] = spread;
  rep.metrics["cache_hits"] = static_cast<double>(map.cache_hits());
  rep.metrics["cache_misses"] = static_cast<double>(map.cache_misses());
}

void run_corrector_study(const ExperimentConfig& cfg, HomogenizedMap& map, ExperimentReport& rep,
                         std::vector<SolveStats>& dirichlet_stats,
                         std::map<std::string, std::string>& files) {
  MacroContext ctx = prepare_macro(cfg, map, rep, dirichlet_stats);
  const double eps = 1.0 / cfg.inverse_epsilons.front();
  resolution_check(ctx.mesh, eps, cfg.min_cells_per_period);

  Stopwatch sw;
  SolveStats fine_stats;
  const FEField u_h =
      solve_oscillatory(cfg.spec, eps, ctx.mesh, ctx.load, cfg.solver, &fine_stats);
  dirichlet_stats.push_back(fine_stats);
  rep.runtimes["fine_solve"] += sw.lap();

  const CellCover cover =
      build_cell_cover(cfg.spec.domain, eps, AnchorRule::center, part_boxes(cfg.spec));
  const StepField step = cell_average(cover, ctx.u);
  rep.runtimes["norms"] += sw.lap();
  const CorrectorField P = build_corrector(map, cover, step, cfg.anchor_mode);
  rep.runtimes["cell_solves"] += sw.lap();
  const CorrectorErrorReport err = corrector_error(u_h, ctx.u, P);
  rep.runtimes["norms"] += sw.lap();

  // Per-cell reconstruction energy against the declared-constant bound.
  const double r = cfg.spec.beta / cfg.spec.alpha;
  double worst_energy_excess = -std::numeric_limits<double>::infinity();
  bool energy_ok = true;
  for (size_t jcell = 0; jcell < P.cells.size(); ++jcell) {
    const double bound = r * r * dot(P.xi[jcell], P.xi[jcell]);
    const double excess = P.cells[jcell]->energy - bound;
    worst_energy_excess = std::max(worst_energy_excess, excess);
    if (excess > 1e-8) energy_ok = false;
  }
  if (P.cells.empty()) worst_energy_excess = 0.0;

  const bool finite_ok =
      std::isfinite(err.e_plain) && std::isfinite(err.e_corr) && std::isfinite(err.e_outside);
  rep.header = {"epsilon", "e_plain", "e_corr", "e_outside", "verdict"};
  rep.rows.push_back({format_g17(eps), format_g17(err.e_plain), format_g17(err.e_corr),
                      format_g17(err.e_outside), verdict(energy_ok && finite_ok)});
  rep.row_details.push_back({{"interior_cells", static_cast<double>(cover.interior.size())},
                             {"fine_iterations", static_cast<double>(fine_stats.iterations)},
                             {"max_energy_excess", worst_energy_excess}});
  rep.checks.emplace_back("cell_energy_bound", energy_ok);
  rep.checks.emplace_back("errors_finite", finite_ok);
  rep.metrics["e_plain"] = err.e_plain;
  rep.metrics["e_corr"] = err.e_corr;
  rep.metrics["e_outside"] = err.e_outside;
  rep.metrics["max_energy_excess"] = worst_energy_excess;

  // Pointwise reconstruction export for plotting.
  std::ostringstream csv;
  const Quadrature& q = quadrature(ctx.mesh.dim());
  csv << (ctx.mesh.dim() == 1 ? "x0,duh0,p0" : "x0,x1,duh0,duh1,p0,p1") << "\n";
  for (int e = 0; e < ctx.mesh.n_elements(); ++e) {
    const Box eb = ctx.mesh.element_box(e);
    for (int k = 0; k < q.n; ++k) {
      Vec x = eb.lo;
      for (int d = 0; d < ctx.mesh.dim(); ++d) x[d] += q.point[k][d] * ctx.mesh.h(d);
      const Vec gh = u_h.gradient(e, q.point[k]);
      const Vec p = P.value_at(x);
      for (int d = 0; d < ctx.mesh.dim(); ++d) csv << (d ? "," : "") << format_g17(x[d]);
      for (int d = 0; d < ctx.mesh.dim(); ++d) csv << "," << format_g17(gh[d]);
      for (int d = 0; d < ctx.mesh.dim(); ++d) csv << "," << format_g17(p[d]);
      csv << "\n";
    }
  }
  files["gradients.csv"] = csv.str();
  rep.runtimes["norms"] += sw.lap();
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg, const std::string& cache_path) {
  cfg.validate();
  ExperimentReport rep;
  rep.resolved_config = echo_config(cfg).dump(2);

  HomogenizedMap map(cfg.spec, cfg.cell_n, cfg.cell_solver);
  if (!cache_path.empty() && std::filesystem::exists(cache_path)) map.import_cache(cache_path);

  std::vector<SolveStats> dirichlet_stats;
  std::map<std::string, std::string> files;
  switch (cfg.kind) {
    case ExperimentConfig::Kind::audit:
      run_audit(cfg, map, rep);
      break;
    case ExperimentConfig::Kind::effective:
      run_effective(cfg, map, rep);
      break;
    case ExperimentConfig::Kind::convergence:
      run_convergence(cfg, map, rep, dirichlet_stats);
      break;
    case ExperimentConfig::Kind::corrector:
      run_corrector_study(cfg, map, rep, dirichlet_stats, files);
      break;
  }

  std::vector<SolveStats> all = map.solve_log();
  all.insert(all.end(), dirichlet_stats.begin(), dirichlet_stats.end());
  double worst = 0.0;
  rep.checks.emplace_back("solver_contraction", histories_contract(all, 1e-3, &worst));
  rep.metrics["contraction_ratio_excess"] = worst;

  if (!cache_path.empty()) map.export_cache(cache_path);
  if (!cfg.out_dir.empty()) {
    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    write_atomic(dir / "table.csv", rep.table_csv());
    write_atomic(dir / "report.json", rep.report_json());
    for (const auto& [name, content] : files) write_atomic(dir / name, content);
  }
  return rep;
}

std::size_t cache_roundtrip(const HomogenizedMap& map, const std::string& path) {
  map.export_cache(path);
  HomogenizedMap fresh(map.spec(), map.cell_mesh().per_side(), map.options());
  const std::size_t merged = fresh.import_cache(path);
  const std::string verify = path + ".verify";
  fresh.export_cache(verify);

  auto slurp = [](const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream buf;
    buf << f.rdbuf();
    return buf.str();
  };
  const std::string original = slurp(path);
  const std::string reexport = slurp(verify);
  std::filesystem::remove(verify);
  if (original != reexport)
    throw Error("cache roundtrip drifted: re-export does not reproduce the file");
  return merged;
}

}  // namespace monoscale
