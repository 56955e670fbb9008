#include "monoscale/cover.hpp"

#include <algorithm>
#include <cmath>

#include "monoscale/errors.hpp"

namespace monoscale {

Box CellCover::cell_box(const std::array<int, 2>& j) const {
  Box b;
  b.lo = Vec::zero(dim());
  b.hi = Vec::zero(dim());
  for (int d = 0; d < dim(); ++d) {
    b.lo[d] = epsilon * j[static_cast<size_t>(d)];
    b.hi[d] = epsilon * (j[static_cast<size_t>(d)] + 1);
  }
  return b;
}

Vec CellCover::anchor(const std::array<int, 2>& j) const {
  Vec a = Vec::zero(dim());
  const double shift = rule == AnchorRule::center ? 0.5 : 0.0;
  for (int d = 0; d < dim(); ++d) a[d] = epsilon * (j[static_cast<size_t>(d)] + shift);
  return a;
}

int CellCover::interior_slot(const std::array<int, 2>& j) const {
  int flat = 0, stride = 1;
  for (int d = 0; d < dim(); ++d) {
    const int rel = j[static_cast<size_t>(d)] - lattice_base[static_cast<size_t>(d)];
    if (rel < 0 || rel >= lattice_span[static_cast<size_t>(d)]) return -1;
    flat += rel * stride;
    stride *= lattice_span[static_cast<size_t>(d)];
  }
  return slot_table[static_cast<size_t>(flat)];
}

std::array<int, 2> CellCover::locate(const Vec& x) const {
  std::array<int, 2> j{0, 0};
  for (int d = 0; d < dim(); ++d) j[static_cast<size_t>(d)] = static_cast<int>(std::floor(x[d] / epsilon));
  return j;
}

double CellCover::cell_measure() const {
  double m = 1.0;
  for (int d = 0; d < dim(); ++d) m *= epsilon;
  return m;
}

double intersection_volume(const Box& a, const Box& b) {
  double v = 1.0;
  for (int d = 0; d < a.dim(); ++d) {
    const double w = std::min(a.hi[d], b.hi[d]) - std::max(a.lo[d], b.lo[d]);
    if (w <= 0.0) return 0.0;
    v *= w;
  }
  return v;
}

CellCover build_cell_cover(const Box& domain, double epsilon, AnchorRule rule,
                           const std::vector<Box>& parts) {
  if (!(epsilon > 0.0)) throw ConfigError("cell cover needs epsilon > 0");
  double min_side = domain.side(0);
  for (int d = 1; d < domain.dim(); ++d) min_side = std::min(min_side, domain.side(d));
  if (epsilon > min_side) throw ConfigError("cell cover epsilon exceeds the shortest domain side");

  CellCover cover;
  cover.epsilon = epsilon;
  cover.domain = domain;
  cover.rule = rule;
  cover.parts = parts;

  const int dim = domain.dim();
  const double tol = 1e-9 * epsilon;
  std::array<int, 2> lo{0, 0}, hi{0, 0};
  for (int d = 0; d < dim; ++d) {
    lo[static_cast<size_t>(d)] = static_cast<int>(std::floor(domain.lo[d] / epsilon)) - 1;
    hi[static_cast<size_t>(d)] = static_cast<int>(std::ceil(domain.hi[d] / epsilon)) + 1;
    cover.lattice_base[static_cast<size_t>(d)] = lo[static_cast<size_t>(d)];
    cover.lattice_span[static_cast<size_t>(d)] = hi[static_cast<size_t>(d)] - lo[static_cast<size_t>(d)];
  }
  int table_size = 1;
  for (int d = 0; d < dim; ++d) table_size *= cover.lattice_span[static_cast<size_t>(d)];
  cover.slot_table.assign(static_cast<size_t>(table_size), -1);

  auto classify = [&](const std::array<int, 2>& j) {
    const Box cell = cover.cell_box(j);
    bool inside = true, overlaps = true;
    for (int d = 0; d < dim; ++d) {
      if (cell.lo[d] < domain.lo[d] - tol || cell.hi[d] > domain.hi[d] + tol) inside = false;
      if (cell.hi[d] <= domain.lo[d] + tol || cell.lo[d] >= domain.hi[d] - tol) overlaps = false;
    }
    if (!overlaps) return;
    CellCover::LatticeCell lc;
    lc.index = j;
    lc.part = 0;
    if (!parts.empty()) {
      lc.part = -1;
      for (size_t p = 0; p < parts.size(); ++p) {
        bool in_part = true;
        for (int d = 0; d < dim; ++d)
          if (cell.lo[d] < parts[p].lo[d] - tol || cell.hi[d] > parts[p].hi[d] + tol) in_part = false;
        if (in_part) {
          lc.part = static_cast<int>(p);
          break;
        }
      }
    }
    if (inside) {
      int flat = 0, stride = 1;
      for (int d = 0; d < dim; ++d) {
        flat += (j[static_cast<size_t>(d)] - cover.lattice_base[static_cast<size_t>(d)]) * stride;
        stride *= cover.lattice_span[static_cast<size_t>(d)];
      }
      cover.slot_table[static_cast<size_t>(flat)] = static_cast<int>(cover.interior.size());
      cover.interior.push_back(lc);
    } else {
      cover.boundary.push_back(lc);
    }
  };

  std::array<int, 2> j{0, 0};
  if (dim == 1) {
    for (j[0] = lo[0]; j[0] < hi[0]; ++j[0]) classify(j);
  } else {
    for (j[1] = lo[1]; j[1] < hi[1]; ++j[1])
      for (j[0] = lo[0]; j[0] < hi[0]; ++j[0]) classify(j);
  }
  return cover;
}

}  // namespace monoscale
