#pragma once

#include <array>
#include <cmath>
#include <string>

namespace monoscale {

/// Small dense vector for spatial points, gradients and fluxes. Dimension is
/// runtime (1 or 2) but storage is inline so these live happily in hot loops.
struct Vec {
  int dim = 0;
  std::array<double, 2> data{0.0, 0.0};

  Vec() = default;
  explicit Vec(double x0) : dim(1), data{x0, 0.0} {}
  Vec(double x0, double x1) : dim(2), data{x0, x1} {}

  static Vec zero(int d) {
    Vec v;
    v.dim = d;
    return v;
  }

  double& operator[](int i) { return data[static_cast<size_t>(i)]; }
  double operator[](int i) const { return data[static_cast<size_t>(i)]; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < dim; ++i) data[i] += o.data[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < dim; ++i) data[i] -= o.data[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (int i = 0; i < dim; ++i) data[i] *= s;
    return *this;
  }

  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(double s, Vec a) { return a *= s; }
  friend Vec operator*(Vec a, double s) { return a *= s; }
};

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (int i = 0; i < a.dim; ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline bool finite(const Vec& a) {
  for (int i = 0; i < a.dim; ++i)
    if (!std::isfinite(a[i])) return false;
  return true;
}

/// Axis-aligned box, the only domain and partition shape the engine supports.
struct Box {
  Vec lo, hi;

  Box() = default;
  Box(Vec lo_, Vec hi_) : lo(lo_), hi(hi_) {}

  static Box unit(int dim) {
    Box b;
    b.lo = Vec::zero(dim);
    b.hi = Vec::zero(dim);
    for (int i = 0; i < dim; ++i) b.hi[i] = 1.0;
    return b;
  }

  int dim() const { return lo.dim; }
  double side(int i) const { return hi[i] - lo[i]; }

  double volume() const {
    double v = 1.0;
    for (int i = 0; i < dim(); ++i) v *= side(i);
    return v;
  }

  double diameter() const {
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) s += side(i) * side(i);
    return std::sqrt(s);
  }

  bool contains(const Vec& x, double tol = 0.0) const {
    for (int i = 0; i < dim(); ++i)
      if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
    return true;
  }

  /// Half-open containment used for partition lookup; keeps part selection
  /// unambiguous on shared faces. Points on the global upper face still match.
  bool contains_half_open(const Vec& x, const Box& domain) const {
    for (int i = 0; i < dim(); ++i) {
      if (x[i] < lo[i]) return false;
      const bool at_domain_top = hi[i] >= domain.hi[i];
      if (at_domain_top ? x[i] > hi[i] : x[i] >= hi[i]) return false;
    }
    return true;
  }

  Vec center() const {
    Vec c = Vec::zero(dim());
    for (int i = 0; i < dim(); ++i) c[i] = 0.5 * (lo[i] + hi[i]);
    return c;
  }
};

/// Wrap a point into the unit cell [0,1)^dim. Exact for lattice shifts: for y
/// already in [0,1) and representable y+k, the result is bit-identical to y.
inline double wrap_unit(double y) {
  double f = y - std::floor(y);
  if (f >= 1.0) f = 0.0;  // guards against floor rounding at negative epsilons
  return f;
}

inline Vec wrap_unit(const Vec& y) {
  Vec w = Vec::zero(y.dim);
  for (int i = 0; i < y.dim; ++i) w[i] = wrap_unit(y[i]);
  return w;
}

}  // namespace monoscale
