#include "monoscale/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "monoscale/errors.hpp"
#include "monoscale/rng.hpp"

namespace monoscale {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kStructureTol = 1e-10;
}  // namespace

double ModulusSpec::operator()(double t) const {
  if (t <= 0.0) return 0.0;
  return form == Form::linear ? scale * t : scale * std::pow(t, exponent);
}

void ModulusSpec::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw ConfigError("modulus scale must be positive and finite");
  if (form == Form::power && !(exponent > 0.0 && exponent <= 1.0))
    throw ConfigError("modulus exponent must lie in (0,1]");
}

double CellProfile::value(const Vec& y) const {
  switch (kind) {
    case Kind::constant:
      return c1;
    case Kind::layered:
      return y[0] < 0.5 ? c1 : c2;
    case Kind::checkerboard: {
      const int p0 = y[0] < 0.5 ? 0 : 1;
      const int p1 = y[1] < 0.5 ? 0 : 1;
      return ((p0 + p1) % 2 == 0) ? c1 : c2;
    }
    case Kind::sine:
      return c1 * (1.0 + c2 * std::sin(2.0 * kPi * y[0]));
  }
  return c1;
}

double CellProfile::min_value() const {
  switch (kind) {
    case Kind::constant:
      return c1;
    case Kind::layered:
    case Kind::checkerboard:
      return std::min(c1, c2);
    case Kind::sine:
      return c1 * (1.0 - std::abs(c2));
  }
  return c1;
}

double CellProfile::max_value() const {
  switch (kind) {
    case Kind::constant:
      return c1;
    case Kind::layered:
    case Kind::checkerboard:
      return std::max(c1, c2);
    case Kind::sine:
      return c1 * (1.0 + std::abs(c2));
  }
  return c1;
}

void CellProfile::validate(int dim) const {
  if (!(min_value() > 0.0)) throw ConfigError("coefficient profile must stay positive");
  if (kind == Kind::checkerboard && dim != 2)
    throw ConfigError("checkerboard profile requires dim = 2");
}

CellProfile constant_profile(double c) { return CellProfile{CellProfile::Kind::constant, c, c}; }
CellProfile layered_profile(double c1, double c2) {
  return CellProfile{CellProfile::Kind::layered, c1, c2};
}
CellProfile checkerboard_profile(double c1, double c2) {
  return CellProfile{CellProfile::Kind::checkerboard, c1, c2};
}
CellProfile sine_profile(double base, double relative_amplitude) {
  return CellProfile{CellProfile::Kind::sine, base, relative_amplitude};
}

void MonotoneMapSpec::validate() const {
  if (dim != 1 && dim != 2) throw ConfigError("spec dim must be 1 or 2");
  if (!(alpha > 0.0)) throw StructuralFailure("declared alpha must be positive");
  if (alpha > beta) throw StructuralFailure("declared alpha exceeds declared beta");
  if (domain.dim() != dim) throw ConfigError("spec domain dimension mismatch");
  if (x_structure == XStructure::piecewise) {
    if (parts.empty()) throw ConfigError("piecewise spec needs at least one part");
    for (const auto& p : parts) {
      p.profile.validate(dim);
      if (!(p.scale > 0.0)) throw ConfigError("part scale must be positive");
    }
  } else {
    profile.validate(dim);
  }
  if (x_structure == XStructure::continuous) {
    modulus.validate();
    if (!(std::abs(modulation_amplitude) < 1.0))
      throw ConfigError("modulation amplitude must satisfy |amp| < 1");
  }
}

int find_part(const MonotoneMapSpec& spec, const Vec& x) {
  for (size_t i = 0; i < spec.parts.size(); ++i)
    if (spec.parts[i].box.contains_half_open(x, spec.domain)) return static_cast<int>(i);
  throw ConfigError("point lies outside every part of the piecewise spec");
}

double coefficient(const MonotoneMapSpec& spec, const Vec& x, const Vec& y) {
  switch (spec.x_structure) {
    case XStructure::constant:
      return spec.profile.value(y);
    case XStructure::piecewise: {
      const SpecPart& p = spec.parts[static_cast<size_t>(find_part(spec, x))];
      return p.scale * p.profile.value(y);
    }
    case XStructure::continuous:
      return spec.profile.value(y) *
             (1.0 + spec.modulation_amplitude * std::sin(2.0 * kPi * x[0]));
  }
  return spec.profile.value(y);
}

Vec scalar_flux(double c, Family family, const Vec& xi) {
  if (family == Family::linear_tensor) return c * xi;
  const double m = 1.0 + 1.0 / (1.0 + norm(xi));
  return (c * m) * xi;
}

Vec evaluate(const MonotoneMapSpec& spec, const Vec& x, const Vec& y, const Vec& xi) {
  if (!finite(x) || !finite(y) || !finite(xi))
    throw ConfigError("flux map rejects non-finite input components");
  return scalar_flux(coefficient(spec, x, wrap_unit(y)), spec.family, xi);
}

std::vector<PartitionCell> uniform_partition(const Box& domain, int per_side) {
  if (per_side < 1) throw ConfigError("partition needs at least one cell per side");
  const int dim = domain.dim();
  std::vector<PartitionCell> cells;
  const int n1 = per_side;
  const int n0 = per_side;
  auto make_cell = [&](int i, int j) {
    Box b;
    b.lo = Vec::zero(dim);
    b.hi = Vec::zero(dim);
    const int idx[2] = {i, j};
    for (int d = 0; d < dim; ++d) {
      const double w = domain.side(d) / per_side;
      b.lo[d] = domain.lo[d] + idx[d] * w;
      b.hi[d] = domain.lo[d] + (idx[d] + 1) * w;
    }
    cells.push_back({b, b.center()});
  };
  if (dim == 1) {
    for (int i = 0; i < n0; ++i) make_cell(i, 0);
  } else {
    for (int j = 0; j < n1; ++j)
      for (int i = 0; i < n0; ++i) make_cell(i, j);
  }
  return cells;
}

MonotoneMapSpec freeze(const MonotoneMapSpec& spec, const std::vector<PartitionCell>& partition) {
  spec.validate();
  if (partition.empty()) throw ConfigError("freeze needs a non-empty partition");
  MonotoneMapSpec out = spec;
  out.name = spec.name.empty() ? "frozen" : spec.name + "_frozen";
  out.x_structure = XStructure::piecewise;
  out.parts.clear();
  out.modulation_amplitude = 0.0;
  for (const auto& cell : partition) {
    if (!cell.box.contains(cell.anchor))
      throw ConfigError("partition anchor lies outside its cell");
    SpecPart part;
    part.box = cell.box;
    switch (spec.x_structure) {
      case XStructure::constant:
        part.profile = spec.profile;
        part.scale = 1.0;
        break;
      case XStructure::continuous:
        part.profile = spec.profile;
        part.scale = 1.0 + spec.modulation_amplitude * std::sin(2.0 * kPi * cell.anchor[0]);
        break;
      case XStructure::piecewise: {
        const SpecPart& src = spec.parts[static_cast<size_t>(find_part(spec, cell.anchor))];
        part.profile = src.profile;
        part.scale = src.scale;
        break;
      }
    }
    out.parts.push_back(part);
  }
  out.validate();
  return out;
}

StructureAuditReport validate_structure(const MonotoneMapSpec& spec, int n_samples, uint64_t seed) {
  spec.validate();
  if (n_samples < 1) throw ConfigError("validate_structure needs n_samples >= 1");

  StructureAuditReport report;
  report.seed = seed;
  report.samples = n_samples;
  report.monotonicity_min = std::numeric_limits<double>::infinity();
  report.lipschitz_max = 0.0;
  report.zero_max = 0.0;
  report.modulus_excess = -std::numeric_limits<double>::infinity();

  Rng rng(seed);
  Rng rx = rng.split(1), ry = rng.split(2), rxi = rng.split(3);
  const int dim = spec.dim;

  auto draw_x = [&]() {
    Vec x = Vec::zero(dim);
    for (int d = 0; d < dim; ++d) x[d] = rx.uniform(spec.domain.lo[d], spec.domain.hi[d]);
    return x;
  };
  auto draw_y = [&]() {
    Vec y = Vec::zero(dim);
    for (int d = 0; d < dim; ++d) y[d] = ry.uniform(0.0, 1.0);
    return y;
  };
  auto draw_xi = [&]() {
    Vec xi = Vec::zero(dim);
    for (int d = 0; d < dim; ++d) xi[d] = rxi.uniform(-10.0, 10.0);
    return xi;
  };

  for (int s = 0; s < n_samples; ++s) {
    const Vec x1 = draw_x(), x2 = draw_x(), y = draw_y();
    const Vec xi1 = draw_xi(), xi2 = draw_xi();
    const Vec dxi = xi1 - xi2;
    const double d2 = dot(dxi, dxi);

    const Vec a1 = evaluate(spec, x1, y, xi1);
    const Vec a2 = evaluate(spec, x1, y, xi2);
    if (d2 > 1e-20) {
      report.monotonicity_min = std::min(report.monotonicity_min, dot(a1 - a2, dxi) / d2);
      report.lipschitz_max = std::max(report.lipschitz_max, norm(a1 - a2) / std::sqrt(d2));
    }
    report.zero_max = std::max(report.zero_max, norm(evaluate(spec, x1, y, Vec::zero(dim))));

    if (spec.x_structure == XStructure::continuous) {
      const Vec b1 = evaluate(spec, x2, y, xi1);
      const double lhs = dot(a1 - b1, a1 - b1);
      const double rhs = spec.modulus(norm(x1 - x2)) * dot(xi1, xi1);
      report.modulus_excess = std::max(report.modulus_excess, lhs - rhs);
    }
  }
  if (spec.x_structure != XStructure::continuous) report.modulus_excess = 0.0;

  if (report.monotonicity_min < spec.alpha - kStructureTol)
    throw StructuralFailure("structure audit: monotonicity below declared alpha");
  if (report.lipschitz_max > spec.beta + kStructureTol)
    throw StructuralFailure("structure audit: Lipschitz quotient above declared beta");
  if (report.zero_max > kStructureTol)
    throw StructuralFailure("structure audit: flux at xi = 0 is not zero");
  if (report.modulus_excess > kStructureTol)
    throw StructuralFailure("structure audit: x-variation exceeds declared modulus");
  return report;
}

namespace {
MonotoneMapSpec make_base(Family family, const CellProfile& profile, int dim, Box domain) {
  MonotoneMapSpec spec;
  spec.dim = dim;
  spec.family = family;
  spec.x_structure = XStructure::constant;
  spec.domain = domain.dim() == dim ? domain : Box::unit(dim);
  spec.profile = profile;
  const double f = family == Family::linear_tensor ? 1.0 : 2.0;
  spec.alpha = profile.min_value();
  spec.beta = f * profile.max_value();
  spec.validate();
  return spec;
}
}  // namespace

MonotoneMapSpec make_linear_spec(const CellProfile& profile, int dim, Box domain) {
  return make_base(Family::linear_tensor, profile, dim, domain);
}

MonotoneMapSpec make_nonlinear_spec(const CellProfile& profile, int dim, Box domain) {
  return make_base(Family::nonlinear_isotropic, profile, dim, domain);
}

MonotoneMapSpec with_sine_modulation(MonotoneMapSpec base, double amplitude) {
  if (base.x_structure != XStructure::constant)
    throw ConfigError("sine modulation applies to x-constant specs");
  if (!(std::abs(amplitude) < 1.0)) throw ConfigError("modulation amplitude must satisfy |amp| < 1");
  base.x_structure = XStructure::continuous;
  base.modulation_amplitude = amplitude;
  base.alpha *= 1.0 - std::abs(amplitude);
  base.beta *= 1.0 + std::abs(amplitude);
  const double f = base.family == Family::linear_tensor ? 1.0 : 2.0;
  const double lip = base.profile.max_value() * f * std::abs(amplitude);
  base.modulus = ModulusSpec{ModulusSpec::Form::linear, 4.0 * kPi * lip * lip, 1.0};
  base.validate();
  return base;
}

MonotoneMapSpec make_piecewise_spec(Family family, std::vector<SpecPart> parts, int dim, Box domain) {
  MonotoneMapSpec spec;
  spec.dim = dim;
  spec.family = family;
  spec.x_structure = XStructure::piecewise;
  spec.domain = domain;
  spec.parts = std::move(parts);
  const double f = family == Family::linear_tensor ? 1.0 : 2.0;
  double cmin = std::numeric_limits<double>::infinity(), cmax = 0.0;
  for (const auto& p : spec.parts) {
    cmin = std::min(cmin, p.scale * p.profile.min_value());
    cmax = std::max(cmax, p.scale * p.profile.max_value());
  }
  spec.alpha = cmin;
  spec.beta = f * cmax;
  spec.validate();
  return spec;
}

}  // namespace monoscale
