#include "monoscale/corrector.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "monoscale/errors.hpp"
#include "monoscale/parallel.hpp"

namespace monoscale {

namespace {

// 2-point Gauss abscissae on the unit interval.
constexpr double kGaussLo = 0.5 - 0.28867513459481287;
constexpr double kGaussHi = 0.5 + 0.28867513459481287;

// Interior multiples of delta strictly between lo and hi, plus the endpoints.
std::vector<double> split_points(double lo, double hi, double delta) {
  std::vector<double> pts{lo};
  const double tol = 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)});
  long k = static_cast<long>(std::floor(lo / delta)) + 1;
  for (; static_cast<double>(k) * delta < hi - tol; ++k) {
    const double p = static_cast<double>(k) * delta;
    if (p > lo + tol) pts.push_back(p);
  }
  pts.push_back(hi);
  return pts;
}

}  // namespace

Vec StepField::value_at(const Vec& x) const {
  const int slot = cover->slot_at(x);
  return slot < 0 ? Vec::zero(cover->dim()) : values[static_cast<size_t>(slot)];
}

double step_l2_norm(const StepField& s) {
  const double vol = s.cover->cell_measure();
  double sum = 0.0;
  for (const Vec& v : s.values) sum += vol * dot(v, v);
  return std::sqrt(sum);
}

StepField cell_average(const CellCover& cover, const GradientSampler& g) {
  const int dim = cover.dim();
  const int sub = 4;  // composite rule per axis; exact for cubics, tight for smooth
  StepField s;
  s.cover = &cover;
  s.values.resize(cover.interior.size());
  for (size_t j = 0; j < cover.interior.size(); ++j) {
    const Box cell = cover.cell_box(cover.interior[j].index);
    Vec acc = Vec::zero(dim);
    const int n_boxes = dim == 1 ? sub : sub * sub;
    for (int b = 0; b < n_boxes; ++b) {
      Box sb = cell;
      const int bi[2] = {b % sub, b / sub};
      for (int d = 0; d < dim; ++d) {
        const double w = cell.side(d) / sub;
        sb.lo[d] = cell.lo[d] + bi[d] * w;
        sb.hi[d] = sb.lo[d] + w;
      }
      const int nq = dim == 1 ? 2 : 4;
      for (int k = 0; k < nq; ++k) {
        Vec x = Vec::zero(dim);
        double weight = 1.0;
        const int ki[2] = {k % 2, k / 2};
        for (int d = 0; d < dim; ++d) {
          const double t = ki[d] == 0 ? kGaussLo : kGaussHi;
          x[d] = sb.lo[d] + t * sb.side(d);
          weight *= 0.5 * sb.side(d);
        }
        acc += weight * g(x);
      }
    }
    s.values[j] = (1.0 / cell.volume()) * acc;
  }
  return s;
}

StepField cell_average(const CellCover& cover, const FEField& u) {
  const StructuredMesh& mesh = *u.mesh;
  const int dim = mesh.dim();
  if (dim != cover.dim()) throw ConfigError("cell_average: field/cover dimension mismatch");
  StepField s;
  s.cover = &cover;
  s.values.assign(cover.interior.size(), Vec::zero(dim));

  for (int e = 0; e < mesh.n_elements(); ++e) {
    const Box eb = mesh.element_box(e);
    std::vector<double> cuts[2];
    for (int d = 0; d < dim; ++d) cuts[d] = split_points(eb.lo[d], eb.hi[d], cover.epsilon);
    const int nx = static_cast<int>(cuts[0].size()) - 1;
    const int ny = dim == 1 ? 1 : static_cast<int>(cuts[1].size()) - 1;
    for (int bj = 0; bj < ny; ++bj) {
      for (int bi = 0; bi < nx; ++bi) {
        Box sb = eb;
        sb.lo[0] = cuts[0][static_cast<size_t>(bi)];
        sb.hi[0] = cuts[0][static_cast<size_t>(bi) + 1];
        if (dim == 2) {
          sb.lo[1] = cuts[1][static_cast<size_t>(bj)];
          sb.hi[1] = cuts[1][static_cast<size_t>(bj) + 1];
        }
        const int slot = cover.slot_at(sb.center());
        if (slot < 0) continue;
        const int nq = dim == 1 ? 2 : 4;
        Vec acc = Vec::zero(dim);
        for (int k = 0; k < nq; ++k) {
          Vec x = Vec::zero(dim);
          double weight = 1.0;
          const int ki[2] = {k % 2, k / 2};
          for (int d = 0; d < dim; ++d) {
            const double t = ki[d] == 0 ? kGaussLo : kGaussHi;
            x[d] = sb.lo[d] + t * sb.side(d);
            weight *= 0.5 * sb.side(d);
          }
          Vec local = Vec::zero(dim);
          for (int d = 0; d < dim; ++d) local[d] = (x[d] - eb.lo[d]) / mesh.h(d);
          acc += weight * u.gradient(e, local);
        }
        s.values[static_cast<size_t>(slot)] += acc;
      }
    }
  }
  const double vol = cover.cell_measure();
  for (Vec& v : s.values) v *= 1.0 / vol;
  return s;
}

AnchorStepMap build_anchor_map(const CellCover& cover) { return AnchorStepMap{&cover}; }

CorrectorField build_corrector(HomogenizedMap& map, const CellCover& cover, const StepField& step,
                               AnchorMode mode) {
  if (step.cover != &cover) throw ConfigError("build_corrector: step field built on another cover");
  if (map.spec().dim != cover.dim())
    throw ConfigError("build_corrector: map/cover dimension mismatch");

  CorrectorField P;
  P.cover = &cover;
  P.epsilon = cover.epsilon;
  P.cell_n = map.cell_mesh().per_side();
  P.mode = mode;
  P.xi = step.values;
  P.cells.assign(cover.interior.size(), nullptr);

  std::vector<Vec> anchors(cover.interior.size());
  for (size_t j = 0; j < cover.interior.size(); ++j) {
    const CellCover::LatticeCell& cell = cover.interior[j];
    if (mode == AnchorMode::cell_anchor) {
      anchors[j] = cover.anchor(cell.index);
    } else {
      if (cover.parts.empty())
        throw ConfigError("part_anchor mode needs a cover built with macro parts");
      if (cell.part < 0)
        throw ConfigError("part_anchor mode: lattice cell straddles a part face; align the "
                          "partition with epsilon");
      anchors[j] = cover.parts[static_cast<size_t>(cell.part)].center();
    }
  }

  parallel_for(static_cast<int>(cover.interior.size()), [&](int j) {
    const size_t sj = static_cast<size_t>(j);
    P.cells[sj] = &map.cell_solution(anchors[sj], P.xi[sj]);
  });
  return P;
}

Vec CorrectorField::value_at(const Vec& x) const {
  const int slot = cover->slot_at(x);
  if (slot < 0) return Vec::zero(cover->dim());
  const Vec y = wrap_unit((1.0 / epsilon) * x);
  const size_t sj = static_cast<size_t>(slot);
  return xi[sj] + cells[sj]->corrector.gradient_at(y);
}

GradientSampler CorrectorField::sampler() const {
  CorrectorField copy = *this;
  return [copy](const Vec& x) { return copy.value_at(x); };
}

CorrectorErrorReport corrector_error(const FEField& u_h, const FEField& u,
                                     const CorrectorField& P) {
  const StructuredMesh& mesh = *u_h.mesh;
  if (u.mesh != &mesh) throw ConfigError("corrector_error: fields live on different meshes");
  const int dim = mesh.dim();
  if (dim != P.cover->dim()) throw ConfigError("corrector_error: field/corrector dimension mismatch");

  // Splitting at multiples of epsilon / cell_n covers both the lattice planes
  // and the image planes of the cell mesh, so every sub-box meets one lattice
  // cell and one cell-mesh element: the integrands are polynomial there.
  const double delta = P.epsilon / std::max(1, P.cell_n);

  double plain2 = 0.0, corr2 = 0.0, outside2 = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const Box eb = mesh.element_box(e);
    std::vector<double> cuts[2];
    for (int d = 0; d < dim; ++d) cuts[d] = split_points(eb.lo[d], eb.hi[d], delta);
    const int nx = static_cast<int>(cuts[0].size()) - 1;
    const int ny = dim == 1 ? 1 : static_cast<int>(cuts[1].size()) - 1;
    for (int bj = 0; bj < ny; ++bj) {
      for (int bi = 0; bi < nx; ++bi) {
        Box sb = eb;
        sb.lo[0] = cuts[0][static_cast<size_t>(bi)];
        sb.hi[0] = cuts[0][static_cast<size_t>(bi) + 1];
        if (dim == 2) {
          sb.lo[1] = cuts[1][static_cast<size_t>(bj)];
          sb.hi[1] = cuts[1][static_cast<size_t>(bj) + 1];
        }
        const int nq = dim == 1 ? 2 : 4;
        for (int k = 0; k < nq; ++k) {
          Vec x = Vec::zero(dim);
          double weight = 1.0;
          const int ki[2] = {k % 2, k / 2};
          for (int d = 0; d < dim; ++d) {
            const double t = ki[d] == 0 ? kGaussLo : kGaussHi;
            x[d] = sb.lo[d] + t * sb.side(d);
            weight *= 0.5 * sb.side(d);
          }
          Vec local = Vec::zero(dim);
          for (int d = 0; d < dim; ++d) local[d] = (x[d] - eb.lo[d]) / mesh.h(d);
          const Vec gh = u_h.gradient(e, local);
          const Vec g = u.gradient(e, local);
          const Vec dp = gh - g;
          plain2 += weight * dot(dp, dp);
          const int slot = P.cover->slot_at(x);
          if (slot < 0) {
            corr2 += weight * dot(gh, gh);
            outside2 += weight * dot(gh, gh);
          } else {
            const size_t sj = static_cast<size_t>(slot);
            const Vec y = wrap_unit((1.0 / P.epsilon) * x);
            const Vec dc = gh - (P.xi[sj] + P.cells[sj]->corrector.gradient_at(y));
            corr2 += weight * dot(dc, dc);
          }
        }
      }
    }
  }
  CorrectorErrorReport r;
  r.e_plain = std::sqrt(plain2);
  r.e_corr = std::sqrt(corr2);
  r.e_outside = std::sqrt(outside2);
  return r;
}

}  // namespace monoscale
