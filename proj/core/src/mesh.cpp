#include "monoscale/mesh.hpp"

#include <algorithm>
#include <cmath>

#include "monoscale/errors.hpp"

namespace monoscale {

StructuredMesh::StructuredMesh(int dim, Box box, int n_per_side, SpaceKind space)
    : dim_(dim), box_(box), n_(n_per_side), space_(space) {
  if (dim != 1 && dim != 2) throw ConfigError("mesh dim must be 1 or 2");
  if (box.dim() != dim) throw ConfigError("mesh box dimension mismatch");
  for (int d = 0; d < dim; ++d)
    if (!(box.side(d) > 0.0)) throw ConfigError("mesh box must have positive sides");
  if (n_per_side < 1) throw ConfigError("mesh needs at least one element per side");
}

double StructuredMesh::element_volume() const {
  double v = 1.0;
  for (int d = 0; d < dim_; ++d) v *= h(d);
  return v;
}

int StructuredMesh::n_elements() const { return dim_ == 1 ? n_ : n_ * n_; }

int StructuredMesh::n_nodes() const {
  const int per_axis = space_ == SpaceKind::periodic ? n_ : n_ + 1;
  return dim_ == 1 ? per_axis : per_axis * per_axis;
}

std::array<int, 2> StructuredMesh::element_index(int e) const {
  if (dim_ == 1) return {e, 0};
  return {e % n_, e / n_};
}

int StructuredMesh::element_node(int e, int corner) const {
  const auto [ei, ej] = element_index(e);
  const int di = corner & 1;
  const int dj = corner >> 1;
  if (space_ == SpaceKind::periodic) {
    const int i = (ei + di) % n_;
    if (dim_ == 1) return i;
    const int j = (ej + dj) % n_;
    return j * n_ + i;
  }
  const int i = ei + di;
  if (dim_ == 1) return i;
  const int j = ej + dj;
  return j * (n_ + 1) + i;
}

Box StructuredMesh::element_box(int e) const {
  const auto [ei, ej] = element_index(e);
  Box b;
  b.lo = Vec::zero(dim_);
  b.hi = Vec::zero(dim_);
  const int idx[2] = {ei, ej};
  for (int d = 0; d < dim_; ++d) {
    b.lo[d] = box_.lo[d] + idx[d] * h(d);
    b.hi[d] = box_.lo[d] + (idx[d] + 1) * h(d);
  }
  return b;
}

bool StructuredMesh::boundary_node(int node) const {
  if (space_ == SpaceKind::periodic) return false;
  const int per_axis = n_ + 1;
  if (dim_ == 1) return node == 0 || node == n_;
  const int i = node % per_axis;
  const int j = node / per_axis;
  return i == 0 || i == n_ || j == 0 || j == n_;
}

Vec StructuredMesh::node_coord(int node) const {
  const int per_axis = space_ == SpaceKind::periodic ? n_ : n_ + 1;
  Vec x = Vec::zero(dim_);
  const int i = dim_ == 1 ? node : node % per_axis;
  const int j = dim_ == 1 ? 0 : node / per_axis;
  const int idx[2] = {i, j};
  for (int d = 0; d < dim_; ++d) x[d] = box_.lo[d] + idx[d] * h(d);
  return x;
}

int StructuredMesh::locate(const Vec& x, Vec& local) const {
  local = Vec::zero(dim_);
  int idx[2] = {0, 0};
  for (int d = 0; d < dim_; ++d) {
    const double t = (x[d] - box_.lo[d]) / h(d);
    int i = static_cast<int>(std::floor(t));
    i = std::clamp(i, 0, n_ - 1);
    idx[d] = i;
    local[d] = std::clamp(t - i, 0.0, 1.0);
  }
  return dim_ == 1 ? idx[0] : element_id(idx[0], idx[1]);
}

CellMesh build_cell_mesh(int dim, int n_per_side) {
  if (n_per_side < 2)
    throw ConfigError("cell mesh needs n_per_side >= 2: periodic identification degenerates");
  return StructuredMesh(dim, Box::unit(dim), n_per_side, SpaceKind::periodic);
}

MacroMesh build_macro_mesh(int dim, const Box& domain, int n_per_side) {
  return StructuredMesh(dim, domain, n_per_side, SpaceKind::dirichlet_zero);
}

const Quadrature& quadrature(int dim) {
  static const Quadrature q1 = [] {
    Quadrature q;
    q.n = 2;
    const double g = 0.5 / std::sqrt(3.0);
    q.point[0] = Vec(0.5 - g);
    q.point[1] = Vec(0.5 + g);
    q.weight[0] = q.weight[1] = 0.5;
    return q;
  }();
  static const Quadrature q2 = [] {
    Quadrature q;
    q.n = 4;
    const double g = 0.5 / std::sqrt(3.0);
    const double p[2] = {0.5 - g, 0.5 + g};
    int k = 0;
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 2; ++i, ++k) {
        q.point[k] = Vec(p[i], p[j]);
        q.weight[k] = 0.25;
      }
    return q;
  }();
  return dim == 1 ? q1 : q2;
}

double basis_value(int dim, int corner, const Vec& local) {
  const double s = local[0];
  if (dim == 1) return corner == 0 ? 1.0 - s : s;
  const double t = local[1];
  const double fs = (corner & 1) ? s : 1.0 - s;
  const double ft = (corner >> 1) ? t : 1.0 - t;
  return fs * ft;
}

Vec basis_gradient_ref(int dim, int corner, const Vec& local) {
  if (dim == 1) return Vec(corner == 0 ? -1.0 : 1.0);
  const double s = local[0];
  const double t = local[1];
  const double fs = (corner & 1) ? s : 1.0 - s;
  const double ft = (corner >> 1) ? t : 1.0 - t;
  const double ds = (corner & 1) ? 1.0 : -1.0;
  const double dt = (corner >> 1) ? 1.0 : -1.0;
  return Vec(ds * ft, fs * dt);
}

FEField::FEField(const StructuredMesh& m) : mesh(&m), values(static_cast<size_t>(m.n_nodes()), 0.0) {}

double FEField::value(int e, const Vec& local) const {
  double v = 0.0;
  for (int c = 0; c < mesh->nodes_per_element(); ++c)
    v += values[static_cast<size_t>(mesh->element_node(e, c))] * basis_value(mesh->dim(), c, local);
  return v;
}

Vec FEField::gradient(int e, const Vec& local) const {
  const int dim = mesh->dim();
  Vec g = Vec::zero(dim);
  for (int c = 0; c < mesh->nodes_per_element(); ++c) {
    const double u = values[static_cast<size_t>(mesh->element_node(e, c))];
    const Vec gr = basis_gradient_ref(dim, c, local);
    for (int d = 0; d < dim; ++d) g[d] += u * gr[d] / mesh->h(d);
  }
  return g;
}

double FEField::value_at(const Vec& x) const {
  Vec local;
  const int e = mesh->locate(x, local);
  return value(e, local);
}

Vec FEField::gradient_at(const Vec& x) const {
  Vec local;
  const int e = mesh->locate(x, local);
  return gradient(e, local);
}

double field_mean(const FEField& f) {
  const StructuredMesh& m = *f.mesh;
  const Quadrature& q = quadrature(m.dim());
  const double vol = m.element_volume();
  double acc = 0.0;
  for (int e = 0; e < m.n_elements(); ++e)
    for (int k = 0; k < q.n; ++k) acc += q.weight[k] * vol * f.value(e, q.point[k]);
  return acc / m.box().volume();
}

void subtract_mean(FEField& f) {
  const double mean = field_mean(f);
  for (double& v : f.values) v -= mean;
}

namespace {
template <class Fn>
double quadrature_l2(const StructuredMesh& m, Fn&& integrand) {
  const Quadrature& q = quadrature(m.dim());
  const double vol = m.element_volume();
  double acc = 0.0;
  for (int e = 0; e < m.n_elements(); ++e) {
    const Box eb = m.element_box(e);
    for (int k = 0; k < q.n; ++k) {
      Vec x = eb.lo;
      for (int d = 0; d < m.dim(); ++d) x[d] += q.point[k][d] * m.h(d);
      acc += q.weight[k] * vol * integrand(e, q.point[k], x);
    }
  }
  return std::sqrt(std::max(0.0, acc));
}

void require_same_mesh(const FEField& f, const FEField& g) {
  if (f.mesh != g.mesh) throw ConfigError("fields live on different meshes");
}
}  // namespace

double l2_norm_value_diff(const FEField& f, const FEField& g) {
  require_same_mesh(f, g);
  return quadrature_l2(*f.mesh, [&](int e, const Vec& local, const Vec&) {
    const double d = f.value(e, local) - g.value(e, local);
    return d * d;
  });
}

double gradient_l2_norm(const FEField& f) {
  return quadrature_l2(*f.mesh, [&](int e, const Vec& local, const Vec&) {
    const Vec g = f.gradient(e, local);
    return dot(g, g);
  });
}

double gradient_l2_distance(const FEField& f, const FEField& g) {
  require_same_mesh(f, g);
  return quadrature_l2(*f.mesh, [&](int e, const Vec& local, const Vec&) {
    const Vec d = f.gradient(e, local) - g.gradient(e, local);
    return dot(d, d);
  });
}

double gradient_l2_distance(const FEField& f, const GradientSampler& s) {
  return quadrature_l2(*f.mesh, [&](int e, const Vec& local, const Vec& x) {
    const Vec d = f.gradient(e, local) - s(x);
    return dot(d, d);
  });
}

}  // namespace monoscale
