#pragma once

#include <array>
#include <functional>
#include <vector>

#include "monoscale/geometry.hpp"

namespace monoscale {

enum class SpaceKind { dirichlet_zero, periodic };

/// Uniform structured grid on an axis-aligned box with P1 (1D) or Q1 (2D)
/// nodal elements. Periodic grids store one coefficient per identified node
/// set, so periodic pairs are equal by construction, not by bookkeeping.
class StructuredMesh {
 public:
  StructuredMesh(int dim, Box box, int n_per_side, SpaceKind space);

  int dim() const { return dim_; }
  const Box& box() const { return box_; }
  int per_side() const { return n_; }
  SpaceKind space() const { return space_; }

  double h(int axis) const { return box_.side(axis) / n_; }
  double element_volume() const;
  int n_elements() const;
  int n_nodes() const;
  int nodes_per_element() const { return dim_ == 1 ? 2 : 4; }

  /// Corner order: 1D {left, right}; 2D {(0,0),(1,0),(0,1),(1,1)}.
  int element_node(int e, int corner) const;
  std::array<int, 2> element_index(int e) const;
  int element_id(int i, int j) const { return j * n_ + i; }
  Box element_box(int e) const;

  bool boundary_node(int node) const;  // always false on periodic grids
  Vec node_coord(int node) const;

  /// Element containing x (clamped to the grid) and local coordinates in its
  /// unit reference cell.
  int locate(const Vec& x, Vec& local) const;

 private:
  int dim_;
  Box box_;
  int n_;
  SpaceKind space_;
};

using CellMesh = StructuredMesh;
using MacroMesh = StructuredMesh;

/// Periodic mesh of the unit cell Y = (0,1)^dim; n_per_side >= 2 so the
/// periodic identification does not degenerate.
CellMesh build_cell_mesh(int dim, int n_per_side);

MacroMesh build_macro_mesh(int dim, const Box& domain, int n_per_side);

/// Tensor 2-point Gauss rule on the unit reference element; weights sum to 1.
struct Quadrature {
  int n = 0;
  std::array<Vec, 4> point;
  std::array<double, 4> weight;
};
const Quadrature& quadrature(int dim);

double basis_value(int dim, int corner, const Vec& local);
/// Gradient with respect to reference coordinates; divide by h per axis for
/// the physical gradient.
Vec basis_gradient_ref(int dim, int corner, const Vec& local);

/// Nodal field on a structured mesh.
struct FEField {
  const StructuredMesh* mesh = nullptr;
  std::vector<double> values;

  FEField() = default;
  explicit FEField(const StructuredMesh& m);

  double value(int e, const Vec& local) const;
  Vec gradient(int e, const Vec& local) const;
  double value_at(const Vec& x) const;
  Vec gradient_at(const Vec& x) const;
};

using GradientSampler = std::function<Vec(const Vec&)>;

double field_mean(const FEField& f);
void subtract_mean(FEField& f);

double l2_norm_value_diff(const FEField& f, const FEField& g);
double gradient_l2_norm(const FEField& f);
double gradient_l2_distance(const FEField& f, const FEField& g);
/// ||Df - s||_L2 with the sampler integrated at the grid's Gauss points.
double gradient_l2_distance(const FEField& f, const GradientSampler& s);

}  // namespace monoscale
