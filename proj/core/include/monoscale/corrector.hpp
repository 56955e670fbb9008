#pragma once

#include <vector>

#include "monoscale/cover.hpp"
#include "monoscale/homogenized.hpp"
#include "monoscale/mesh.hpp"

namespace monoscale {

/// Piecewise-constant gradient approximation over the lattice: one averaged
/// vector per interior cell, implicitly zero on the boundary layer.
struct StepField {
  const CellCover* cover = nullptr;
  std::vector<Vec> values;  // one per interior cell slot

  Vec value_at(const Vec& x) const;
};

/// L2 norm of a step field over the covered region (zero elsewhere).
double step_l2_norm(const StepField& s);

/// Cell averages of a gradient sampler; each cell integrates with a 4-per-axis
/// sub-box composite 2-point Gauss rule, exact for cubics.
StepField cell_average(const CellCover& cover, const GradientSampler& g);

/// Cell averages of a nodal field's gradient. Elements are split at the
/// lattice planes first, so each average is exact for the piecewise
/// polynomial regardless of how elements straddle cells.
StepField cell_average(const CellCover& cover, const FEField& u);

/// The anchor step map: sends every point of a lattice cell to the cell's
/// anchor (the cover's rule decides centers versus corners).
struct AnchorStepMap {
  const CellCover* cover = nullptr;
  Vec at(const Vec& x) const { return cover->anchor(cover->locate(x)); }
};

AnchorStepMap build_anchor_map(const CellCover& cover);

/// Which macro point each cell's problem is frozen at: the cell's own anchor,
/// or the centroid of the macro part containing the cell.
enum class AnchorMode { cell_anchor, part_anchor };

/// Fine-scale gradient reconstruction: on interior cell j the field is
/// xi_j + Dv^{xi_j, x_j}(x / epsilon mod 1), zero on the boundary layer. Cell
/// solutions are borrowed from the effective map's pool, which must outlive
/// this object.
struct CorrectorField {
  const CellCover* cover = nullptr;
  double epsilon = 0.0;
  int cell_n = 0;  // cell-mesh resolution, fixes the fine image planes
  AnchorMode mode = AnchorMode::cell_anchor;
  std::vector<Vec> xi;                      // per interior slot
  std::vector<const CellSolution*> cells;   // per interior slot

  Vec value_at(const Vec& x) const;
  GradientSampler sampler() const;
};

/// Solves (or fetches) one cell problem per interior cell at the step field's
/// value and the mode's anchor. part_anchor needs a cover built with macro
/// parts and every interior cell attributed to one.
CorrectorField build_corrector(HomogenizedMap& map, const CellCover& cover, const StepField& step,
                               AnchorMode mode);

struct CorrectorErrorReport {
  double e_plain = 0.0;    // || Du_h - Du ||_L2 over the whole domain
  double e_corr = 0.0;     // || Du_h - P ||_L2, P zero on the boundary layer
  double e_outside = 0.0;  // || Du_h ||_L2 over the boundary layer alone
};

/// Error norms of the reconstruction. Element boxes are split at every
/// lattice plane and every fine image plane (multiples of epsilon / cell_n),
/// which makes the 2-point Gauss rule exact for the piecewise-polynomial
/// integrands whatever the alignment.
CorrectorErrorReport corrector_error(const FEField& u_h, const FEField& u,
                                     const CorrectorField& P);

}  // namespace monoscale
