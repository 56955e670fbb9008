#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "monoscale/geometry.hpp"

namespace monoscale {

/// Modulus of continuity w(t) declared by specs whose coefficient varies
/// continuously in the macro variable: w(t) = L*t or L*t^p with p in (0,1].
struct ModulusSpec {
  enum class Form { linear, power };
  Form form = Form::linear;
  double scale = 1.0;
  double exponent = 1.0;

  double operator()(double t) const;
  void validate() const;
};

/// Y-periodic scalar coefficient profile. Evaluated on wrapped coordinates so
/// lattice shifts y -> y + e_i are exact identities.
struct CellProfile {
  enum class Kind { constant, layered, checkerboard, sine };
  Kind kind = Kind::constant;
  double c1 = 1.0;
  double c2 = 1.0;  // second phase, or relative amplitude for sine

  double value(const Vec& y_wrapped) const;
  double min_value() const;
  double max_value() const;
  void validate(int dim) const;
};

CellProfile constant_profile(double c);
CellProfile layered_profile(double c1, double c2);        // split at y0 = 1/2
CellProfile checkerboard_profile(double c1, double c2);   // 2x2 tiling, 2D only
CellProfile sine_profile(double base, double relative_amplitude);

enum class Family { linear_tensor, nonlinear_isotropic };
enum class XStructure { constant, piecewise, continuous };

/// One macro part of a piecewise spec: a box with its own periodic profile and
/// a frozen x-modulation factor.
struct SpecPart {
  Box box;
  CellProfile profile;
  double scale = 1.0;
};

/// Full description of a flux map a(x, y, xi): family nonlinearity, periodic
/// profile, macro structure, and the declared monotonicity / Lipschitz
/// constants the solvers and audits consume.
struct MonotoneMapSpec {
  std::string name;
  int dim = 1;
  Family family = Family::linear_tensor;
  XStructure x_structure = XStructure::constant;
  Box domain;                         // macro domain the x-structure lives on
  CellProfile profile;                // constant and continuous structures
  std::vector<SpecPart> parts;        // piecewise structure
  double modulation_amplitude = 0.0;  // continuous: c *= 1 + amp*sin(2*pi*x0)
  ModulusSpec modulus;                // meaningful for continuous structures
  double alpha = 1.0;
  double beta = 1.0;

  bool linear() const { return family == Family::linear_tensor; }
  void validate() const;
};

/// Scalar coefficient c(x, y); y must already be wrapped into [0,1)^dim.
double coefficient(const MonotoneMapSpec& spec, const Vec& x, const Vec& y_wrapped);

/// Index of the part containing x (piecewise structures only).
int find_part(const MonotoneMapSpec& spec, const Vec& x);

/// Family nonlinearity applied to a sampled coefficient.
Vec scalar_flux(double c, Family family, const Vec& xi);

/// The flux map itself. Rejects non-finite input components.
Vec evaluate(const MonotoneMapSpec& spec, const Vec& x, const Vec& y, const Vec& xi);

struct PartitionCell {
  Box box;
  Vec anchor;
};

/// Uniform box partition of a domain with center anchors.
std::vector<PartitionCell> uniform_partition(const Box& domain, int per_side);

/// Freeze the macro variable on a partition: the result is piecewise with
/// a(x, y, xi) = a(anchor_i, y, xi) on each cell. Declared constants carry
/// over; anchors must lie in their cells.
MonotoneMapSpec freeze(const MonotoneMapSpec& spec, const std::vector<PartitionCell>& partition);

struct StructureAuditReport {
  double monotonicity_min = 0.0;  // min of (a1-a2, xi1-xi2)/|xi1-xi2|^2
  double lipschitz_max = 0.0;     // max of |a1-a2|/|xi1-xi2|
  double zero_max = 0.0;          // max of |a(x, y, 0)|
  double modulus_excess = 0.0;    // max of |a(x1,..)-a(x2,..)|^2 - w(|dx|)|xi|^2
  uint64_t seed = 0;
  int samples = 0;
};

/// Empirically checks the declared structure on sampled (x, y, xi) tuples:
/// xi in [-10,10]^dim, y in the unit cell, x in the spec's domain. Throws
/// StructuralFailure naming the condition when a margin is violated beyond
/// 1e-10; otherwise returns the observed extrema.
StructureAuditReport validate_structure(const MonotoneMapSpec& spec, int n_samples, uint64_t seed);

// Built-in spec builders. Declared constants are exact for these families:
// alpha = c_min * (1 - |amp|), beta = f * c_max * (1 + |amp|) with the family
// factor f = 1 (linear) or 2 (nonlinear isotropic).
MonotoneMapSpec make_linear_spec(const CellProfile& profile, int dim, Box domain = {});
MonotoneMapSpec make_nonlinear_spec(const CellProfile& profile, int dim, Box domain = {});

/// Promote an x-constant spec to continuous structure with coefficient factor
/// 1 + amplitude*sin(2*pi*x0), |amplitude| < 1. Declares the honest linear
/// modulus L = 4*pi*(c_max*f*|amplitude|)^2 unless the caller overrides it.
MonotoneMapSpec with_sine_modulation(MonotoneMapSpec base, double amplitude);

/// Piecewise spec from explicit parts (boxes must tile the domain).
MonotoneMapSpec make_piecewise_spec(Family family, std::vector<SpecPart> parts, int dim, Box domain);

}  // namespace monoscale
