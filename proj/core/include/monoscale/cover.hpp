#pragma once

#include <array>
#include <vector>

#include "monoscale/geometry.hpp"

namespace monoscale {

enum class AnchorRule { center, corner };

/// The epsilon-lattice over a macro domain: interior cells (closure inside the
/// closed domain) versus boundary-straddling cells, with an optional macro
/// partition so cells can be attributed to parts. Reciprocal-integer epsilon
/// tiles boxes exactly and leaves the boundary list empty.
struct CellCover {
  double epsilon = 0.0;
  Box domain;
  AnchorRule rule = AnchorRule::center;
  std::vector<Box> parts;  // empty means the whole domain is one part

  struct LatticeCell {
    std::array<int, 2> index{0, 0};
    int part = 0;  // containing part; -1 when the cell straddles part faces
  };
  std::vector<LatticeCell> interior;
  std::vector<LatticeCell> boundary;

  int dim() const { return domain.dim(); }
  Box cell_box(const std::array<int, 2>& j) const;
  Vec anchor(const std::array<int, 2>& j) const;

  /// Slot of the interior cell with lattice index j, or -1.
  int interior_slot(const std::array<int, 2>& j) const;
  /// Lattice index of the cell containing x.
  std::array<int, 2> locate(const Vec& x) const;
  /// Slot of the interior cell containing x, or -1 (boundary layer).
  int slot_at(const Vec& x) const { return interior_slot(locate(x)); }

  double cell_measure() const;
  double covered_measure() const { return cell_measure() * static_cast<double>(interior.size()); }
  double boundary_measure() const { return cell_measure() * static_cast<double>(boundary.size()); }

  std::array<int, 2> lattice_base{0, 0};
  std::array<int, 2> lattice_span{0, 0};
  std::vector<int> slot_table;  // dense lattice index -> interior slot or -1
};

CellCover build_cell_cover(const Box& domain, double epsilon, AnchorRule rule = AnchorRule::center,
                           const std::vector<Box>& parts = {});

/// Measure of the overlap of two boxes.
double intersection_volume(const Box& a, const Box& b);

}  // namespace monoscale
