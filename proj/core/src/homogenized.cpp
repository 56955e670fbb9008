#include "monoscale/homogenized.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "monoscale/errors.hpp"
#include "monoscale/rng.hpp"

namespace monoscale {

namespace {

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Moves the file into place; export stays atomic so a crashed run never
// leaves a half-written cache behind.
void rename_over(const std::string& tmp, const std::string& path) {
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw Error("could not move " + tmp + " into place at " + path);
}

}  // namespace

std::string quantize_component(double v) {
  if (v == 0.0) v = 0.0;  // collapses negative zero
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12e", v);
  return buf;
}

bool PropertyAuditReport::pass(double tol) const {
  return monotonicity_margin >= -tol && lipschitz_excess <= tol && zero_norm <= 1e-10 &&
         x_continuity_excess <= tol;
}

HomogenizedMap::HomogenizedMap(MonotoneMapSpec spec, int cell_n_per_side, SolveOptions opts)
    : spec_(std::move(spec)), opts_(opts) {
  spec_.validate();
  mesh_ = std::make_unique<CellMesh>(build_cell_mesh(spec_.dim, cell_n_per_side));
}

std::string HomogenizedMap::macro_key(const Vec& x) const {
  switch (spec_.x_structure) {
    case XStructure::constant:
      return "c";
    case XStructure::piecewise:
      return "p" + std::to_string(find_part(spec_, x));
    case XStructure::continuous: {
      std::string k = "x";
      for (int d = 0; d < spec_.dim; ++d) {
        if (d) k += ';';
        k += quantize_component(x[d]);
      }
      return k;
    }
  }
  throw ConfigError("unknown macro structure");
}

std::string HomogenizedMap::cache_key(const Vec& x, const Vec& xi) const {
  std::string k = macro_key(x);
  k += '|';
  for (int d = 0; d < spec_.dim; ++d) {
    if (d) k += ';';
    k += quantize_component(xi[d]);
  }
  return k;
}

Vec HomogenizedMap::solve_and_cache(const std::string& key, const Vec& x, const Vec& xi) {
  CellSolution s = solve_cell(spec_, *mesh_, x, xi, opts_);
  std::lock_guard<std::mutex> lock(mu_);
  log_.push_back(s.stats);
  auto [it, inserted] = cache_.emplace(key, s.averaged_flux);
  (void)inserted;  // concurrent duplicate solves land on identical values
  return it->second;
}

Vec HomogenizedMap::eval_direct(const Vec& x, const Vec& xi) {
  const std::string key = cache_key(x, xi);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) {
      ++hits_;
      return it->second;
    }
    ++misses_;
  }
  return solve_and_cache(key, x, xi);
}

Vec HomogenizedMap::eval(const Vec& x, const Vec& xi) {
  if (!tables_.empty()) return eval_table(x, xi);
  return eval_direct(x, xi);
}

const CellSolution& HomogenizedMap::cell_solution(const Vec& x, const Vec& xi) {
  const std::string key = cache_key(x, xi);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = pool_.find(key);
    if (it != pool_.end()) {
      ++hits_;
      return it->second;
    }
    ++misses_;
  }
  CellSolution s = solve_cell(spec_, *mesh_, x, xi, opts_);
  std::lock_guard<std::mutex> lock(mu_);
  log_.push_back(s.stats);
  cache_.emplace(key, s.averaged_flux);
  auto [it, inserted] = pool_.emplace(key, std::move(s));
  (void)inserted;
  return it->second;  // std::map nodes are reference-stable under inserts
}

std::size_t HomogenizedMap::cache_size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return cache_.size();
}
std::size_t HomogenizedMap::cache_hits() const {
  std::lock_guard<std::mutex> lock(mu_);
  return hits_;
}
std::size_t HomogenizedMap::cache_misses() const {
  std::lock_guard<std::mutex> lock(mu_);
  return misses_;
}

std::vector<SolveStats> HomogenizedMap::solve_log() const {
  std::lock_guard<std::mutex> lock(mu_);
  return log_;
}

void HomogenizedMap::export_cache(const std::string& path) const {
  std::ostringstream out;
  out << "x_key";
  for (int d = 0; d < spec_.dim; ++d) out << ",xi" << d;
  for (int d = 0; d < spec_.dim; ++d) out << ",b" << d;
  out << "\n";
  {
    std::lock_guard<std::mutex> lock(mu_);
    for (const auto& [key, b] : cache_) {
      const auto bar = key.find('|');
      out << key.substr(0, bar);
      // The quantized gradient components in the key are the authoritative
      // coordinates of the entry; emitting them keeps the roundtrip exact.
      std::string rest = key.substr(bar + 1);
      for (size_t pos = 0; pos < rest.size();) {
        size_t semi = rest.find(';', pos);
        if (semi == std::string::npos) semi = rest.size();
        out << ',' << rest.substr(pos, semi - pos);
        pos = semi + 1;
      }
      for (int d = 0; d < spec_.dim; ++d) out << ',' << format_full(b[d]);
      out << "\n";
    }
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("could not open " + tmp + " for writing");
    f << out.str();
    if (!f.flush()) throw Error("short write to " + tmp);
  }
  rename_over(tmp, path);
}

std::size_t HomogenizedMap::import_cache(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cache import: cannot open " + path);

  auto parse_double = [&](const std::string& field, int line) {
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (end == field.c_str() || *end != '\0' || !std::isfinite(v))
      throw ParseError("cache import: line " + std::to_string(line) + ": bad number '" + field +
                       "'");
    return v;
  };

  std::vector<std::pair<std::string, Vec>> staged;
  std::string line;
  int line_no = 0;
  const int n_fields = 1 + 2 * spec_.dim;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    for (size_t pos = 0; pos <= line.size();) {
      size_t comma = line.find(',', pos);
      if (comma == std::string::npos) comma = line.size();
      fields.push_back(line.substr(pos, comma - pos));
      pos = comma + 1;
    }
    if (line_no == 1) {
      if (fields.empty() || fields[0] != "x_key")
        throw ParseError("cache import: line 1: missing x_key header");
      if (static_cast<int>(fields.size()) != n_fields)
        throw ParseError("cache import: line 1: expected " + std::to_string(n_fields) +
                         " columns, got " + std::to_string(fields.size()));
      continue;
    }
    if (static_cast<int>(fields.size()) != n_fields)
      throw ParseError("cache import: line " + std::to_string(line_no) + ": expected " +
                       std::to_string(n_fields) + " columns, got " +
                       std::to_string(fields.size()));
    std::string key = fields[0] + "|";
    Vec b = Vec::zero(spec_.dim);
    for (int d = 0; d < spec_.dim; ++d) {
      if (d) key += ';';
      key += quantize_component(parse_double(fields[static_cast<size_t>(1 + d)], line_no));
    }
    for (int d = 0; d < spec_.dim; ++d)
      b[d] = parse_double(fields[static_cast<size_t>(1 + spec_.dim + d)], line_no);
    staged.emplace_back(std::move(key), b);
  }
  if (line_no == 0) throw ParseError("cache import: " + path + " is empty (no header)");

  std::lock_guard<std::mutex> lock(mu_);
  std::size_t merged = 0;
  for (auto& [key, b] : staged)
    if (cache_.emplace(std::move(key), b).second) ++merged;
  return merged;
}

PropertyAuditReport HomogenizedMap::audit_properties(int n_xi_pairs, int n_x_pairs,
                                                     uint64_t seed) {
  if (!tables_.empty())
    throw ConfigError("audit requires direct evaluation; clear the table first");
  const int dim = spec_.dim;
  const double r = spec_.beta / spec_.alpha;
  PropertyAuditReport rep;
  rep.continuity_constant = 2.0 * r * r * (1.0 + r * r);
  rep.xi_pairs = n_xi_pairs;
  rep.x_pairs = n_x_pairs;
  rep.seed = seed;
  rep.monotonicity_margin = std::numeric_limits<double>::infinity();
  rep.lipschitz_excess = -std::numeric_limits<double>::infinity();
  rep.x_continuity_excess = -std::numeric_limits<double>::infinity();

  Rng root(seed);
  Rng rxi = root.split(10);
  Rng rx = root.split(11);

  auto draw_xi = [&](Rng& g) {
    Vec v = Vec::zero(dim);
    for (int d = 0; d < dim; ++d) v[d] = g.uniform(-10.0, 10.0);
    return v;
  };
  auto draw_x = [&](Rng& g, const Box& box) {
    Vec v = Vec::zero(dim);
    for (int d = 0; d < dim; ++d) v[d] = g.uniform(box.lo[d], box.hi[d]);
    return v;
  };

  const Vec x0 = spec_.domain.center();
  const double lip = lipschitz();

  for (int i = 0; i < n_xi_pairs; ++i) {
    const Vec xi1 = draw_xi(rxi);
    const Vec xi2 = draw_xi(rxi);
    const Vec dxi = xi1 - xi2;
    const double s2 = dot(dxi, dxi);
    if (s2 < 1e-24) continue;
    const Vec db = eval_direct(x0, xi1) - eval_direct(x0, xi2);
    rep.monotonicity_margin =
        std::min(rep.monotonicity_margin, (dot(db, dxi) - spec_.alpha * s2) / s2);
    rep.lipschitz_excess =
        std::max(rep.lipschitz_excess, (norm(db) - lip * std::sqrt(s2)) / std::sqrt(s2));
  }

  // Point pairs: the continuity hypothesis constrains a within regions where
  // its x-dependence is governed by the modulus, so piecewise structures draw
  // both points of a pair from a common part.
  rep.zero_norm = norm(eval_direct(x0, Vec::zero(dim)));
  for (int i = 0; i < n_x_pairs; ++i) {
    Box region = spec_.domain;
    if (spec_.x_structure == XStructure::piecewise)
      region = spec_.parts[static_cast<size_t>(rx.next_u64() % spec_.parts.size())].box;
    const Vec x1 = draw_x(rx, region);
    const Vec x2 = draw_x(rx, region);
    const Vec xi = draw_xi(rx);
    const double s2 = dot(xi, xi);
    rep.zero_norm = std::max(rep.zero_norm, norm(eval_direct(x1, Vec::zero(dim))));
    if (s2 < 1e-24) continue;
    const Vec db = eval_direct(x1, xi) - eval_direct(x2, xi);
    const double bound = spec_.modulus(norm(x1 - x2)) * rep.continuity_constant * s2;
    rep.x_continuity_excess = std::max(rep.x_continuity_excess, (dot(db, db) - bound) / s2);
  }

  // A field nobody sampled reports neutral zero rather than an infinity.
  if (std::isinf(rep.monotonicity_margin)) rep.monotonicity_margin = 0.0;
  if (std::isinf(rep.lipschitz_excess)) rep.lipschitz_excess = 0.0;
  if (std::isinf(rep.x_continuity_excess)) rep.x_continuity_excess = 0.0;
  audited_ = rep.pass();
  return rep;
}

std::vector<std::string> HomogenizedMap::all_macro_keys() const {
  switch (spec_.x_structure) {
    case XStructure::constant:
      return {"c"};
    case XStructure::piecewise: {
      std::vector<std::string> keys;
      for (size_t i = 0; i < spec_.parts.size(); ++i) keys.push_back("p" + std::to_string(i));
      return keys;
    }
    case XStructure::continuous:
      throw ConfigError("table mode needs finitely many macro keys; this spec varies continuously");
  }
  throw ConfigError("unknown macro structure");
}

Vec HomogenizedMap::representative_point(const std::string& key) const {
  if (key == "c") return spec_.domain.center();
  const size_t idx = static_cast<size_t>(std::stoi(key.substr(1)));
  return spec_.parts[idx].box.center();
}

void HomogenizedMap::build_table(const std::vector<double>& knots, int probe_count,
                                 uint64_t probe_seed) {
  if (knots.size() < 2) throw ConfigError("table needs at least 2 knots per axis");
  for (size_t i = 1; i < knots.size(); ++i)
    if (!(knots[i] > knots[i - 1]))
      throw ConfigError("table knots must be strictly increasing");

  const int dim = spec_.dim;
  const int nk = static_cast<int>(knots.size());
  const int n_nodes = dim == 1 ? nk : nk * nk;
  std::map<std::string, Table> tables;
  for (const std::string& key : all_macro_keys()) {
    const Vec x = representative_point(key);
    Table t;
    t.knots = knots;
    t.values.resize(static_cast<size_t>(n_nodes));
    for (int node = 0; node < n_nodes; ++node) {
      Vec xi = Vec::zero(dim);
      xi[0] = knots[static_cast<size_t>(node % nk)];
      if (dim == 2) xi[1] = knots[static_cast<size_t>(node / nk)];
      t.values[static_cast<size_t>(node)] = eval_direct(x, xi);
    }
    tables[key] = std::move(t);
  }
  tables_ = std::move(tables);

  double worst = 0.0;
  Rng rng(probe_seed);
  for (const auto& [key, t] : tables_) {
    const Vec x = representative_point(key);
    for (int p = 0; p < probe_count; ++p) {
      Vec xi = Vec::zero(dim);
      for (int d = 0; d < dim; ++d) xi[d] = rng.uniform(knots.front(), knots.back());
      worst = std::max(worst, norm(eval_table(x, xi) - eval_direct(x, xi)));
    }
  }
  table_probe_error_ = worst;
}

void HomogenizedMap::clear_table() {
  tables_.clear();
  table_probe_error_ = 0.0;
}

Vec HomogenizedMap::eval_table(const Vec& x, const Vec& xi) {
  const auto it = tables_.find(macro_key(x));
  if (it == tables_.end()) throw ConfigError("no table for macro key " + macro_key(x));
  const Table& t = it->second;
  const int dim = spec_.dim;
  const int nk = static_cast<int>(t.knots.size());
  const double span = t.knots.back() - t.knots.front();

  int cell[2] = {0, 0};
  double frac[2] = {0.0, 0.0};
  for (int d = 0; d < dim; ++d) {
    double v = xi[d];
    if (v < t.knots.front() - 1e-12 * span || v > t.knots.back() + 1e-12 * span)
      throw ExtrapolationError("gradient component " + std::to_string(v) +
                               " lies outside the tabulated range [" +
                               std::to_string(t.knots.front()) + ", " +
                               std::to_string(t.knots.back()) + "]");
    v = std::clamp(v, t.knots.front(), t.knots.back());
    const auto up = std::upper_bound(t.knots.begin(), t.knots.end(), v);
    int i = static_cast<int>(up - t.knots.begin()) - 1;
    i = std::clamp(i, 0, nk - 2);
    cell[d] = i;
    frac[d] = (v - t.knots[static_cast<size_t>(i)]) /
              (t.knots[static_cast<size_t>(i + 1)] - t.knots[static_cast<size_t>(i)]);
  }

  if (dim == 1) {
    const Vec& a = t.values[static_cast<size_t>(cell[0])];
    const Vec& b = t.values[static_cast<size_t>(cell[0] + 1)];
    return (1.0 - frac[0]) * a + frac[0] * b;
  }
  auto at = [&](int i, int j) -> const Vec& {
    return t.values[static_cast<size_t>(j * nk + i)];
  };
  const Vec bottom = (1.0 - frac[0]) * at(cell[0], cell[1]) + frac[0] * at(cell[0] + 1, cell[1]);
  const Vec top =
      (1.0 - frac[0]) * at(cell[0], cell[1] + 1) + frac[0] * at(cell[0] + 1, cell[1] + 1);
  return (1.0 - frac[1]) * bottom + frac[1] * top;
}

}  // namespace monoscale
