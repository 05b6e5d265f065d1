#include "eitws/fem.hpp"

#include <algorithm>
#include <cmath>

namespace eitws {

namespace {
const double kQa = (5.0 + 3.0 * std::sqrt(5.0)) / 20.0;
const double kQb = (5.0 - std::sqrt(5.0)) / 20.0;
}  // namespace

const double TetQuadrature::coord[TetQuadrature::num_points][4] = {
    {kQa, kQb, kQb, kQb}, {kQb, kQa, kQb, kQb}, {kQb, kQb, kQa, kQb}, {kQb, kQb, kQb, kQa}};

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k] * x[col[k]];
    y[i] = s;
  }
}

std::vector<double> CsrMatrix::diagonal() const {
  std::vector<double> d(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
      if (col[k] == i) d[i] = val[k];
  return d;
}

double CsrMatrix::at(int i, int j) const {
  const auto begin = col.begin() + row_ptr[i];
  const auto end = col.begin() + row_ptr[i + 1];
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return 0.0;
  return val[it - col.begin()];
}

SparsityPattern::SparsityPattern(const TetMesh& mesh) : n_(mesh.num_vertices()) {
  std::vector<std::vector<int>> adj(n_);
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const auto& k = mesh.tet(t);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) adj[k[a]].push_back(k[b]);
  }
  row_ptr_.assign(n_ + 1, 0);
  for (int i = 0; i < n_; ++i) {
    auto& row = adj[i];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    row_ptr_[i + 1] = row_ptr_[i] + static_cast<int>(row.size());
  }
  col_.reserve(row_ptr_[n_]);
  for (int i = 0; i < n_; ++i) col_.insert(col_.end(), adj[i].begin(), adj[i].end());
}

CsrMatrix SparsityPattern::zero_matrix() const {
  CsrMatrix m;
  m.n = n_;
  m.row_ptr = row_ptr_;
  m.col = col_;
  m.val.assign(col_.size(), 0.0);
  return m;
}

int SparsityPattern::index_of(int i, int j) const {
  const auto begin = col_.begin() + row_ptr_[i];
  const auto end = col_.begin() + row_ptr_[i + 1];
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return -1;
  return static_cast<int>(it - col_.begin());
}

ElementGeometry element_geometry(const TetMesh& mesh, int t) {
  const auto& k = mesh.tet(t);
  const Vec3 x0 = mesh.vertex(k[0]);
  const Vec3 e1 = mesh.vertex(k[1]) - x0;
  const Vec3 e2 = mesh.vertex(k[2]) - x0;
  const Vec3 e3 = mesh.vertex(k[3]) - x0;
  const double det = dot(e1, cross(e2, e3));
  ElementGeometry g;
  g.volume = det / 6.0;
  // Rows of the inverse edge matrix are the gradients of barycentric 1..3.
  g.grad[1] = cross(e2, e3) / det;
  g.grad[2] = cross(e3, e1) / det;
  g.grad[3] = cross(e1, e2) / det;
  g.grad[0] = (g.grad[1] + g.grad[2] + g.grad[3]) * -1.0;
  return g;
}

CsrMatrix assemble_stiffness(const TetMesh& mesh, const SparsityPattern& pattern,
                             const SpdTensor3& gamma_outside, const SpdTensor3& gamma_inside) {
  CsrMatrix m = pattern.zero_matrix();
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const ElementGeometry g = element_geometry(mesh, t);
    const SpdTensor3& gamma =
        mesh.region(t) == Region::InsideD ? gamma_inside : gamma_outside;
    Vec3 flux[4];
    for (int a = 0; a < 4; ++a) flux[a] = gamma.apply(g.grad[a]);
    const auto& k = mesh.tet(t);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        m.val[pattern.index_of(k[a], k[b])] += g.volume * dot(flux[a], g.grad[b]);
  }
  return m;
}

CsrMatrix assemble_mass(const TetMesh& mesh, const SparsityPattern& pattern) {
  CsrMatrix m = pattern.zero_matrix();
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const double vol = mesh.tet_volume(t);
    const auto& k = mesh.tet(t);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        m.val[pattern.index_of(k[a], k[b])] += vol * (a == b ? 0.1 : 0.05);
  }
  return m;
}

CsrMatrix assemble_weighted_mass(const TetMesh& mesh, const SparsityPattern& pattern,
                                 std::span<const double> q) {
  CsrMatrix m = pattern.zero_matrix();
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const double vol = mesh.tet_volume(t);
    const auto& k = mesh.tet(t);
    for (int p = 0; p < TetQuadrature::num_points; ++p) {
      const double* bc = TetQuadrature::coord[p];
      double qv = 0.0;
      for (int a = 0; a < 4; ++a) qv += bc[a] * q[k[a]];
      const double w = vol * TetQuadrature::weight * qv;
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
          m.val[pattern.index_of(k[a], k[b])] += w * bc[a] * bc[b];
    }
  }
  return m;
}

void add_reaction_jacobian(const TetMesh& mesh, const SparsityPattern& pattern,
                           std::span<const double> alpha_per_tet, std::span<const double> u,
                           CsrMatrix& into) {
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const double vol = mesh.tet_volume(t);
    const double alpha = alpha_per_tet[t];
    const auto& k = mesh.tet(t);
    for (int p = 0; p < TetQuadrature::num_points; ++p) {
      const double* bc = TetQuadrature::coord[p];
      double uq = 0.0;
      for (int a = 0; a < 4; ++a) uq += bc[a] * u[k[a]];
      const double w = vol * TetQuadrature::weight * 3.0 * alpha * uq * uq;
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
          into.val[pattern.index_of(k[a], k[b])] += w * bc[a] * bc[b];
    }
  }
}

void add_reaction_residual(const TetMesh& mesh, std::span<const double> alpha_per_tet,
                           std::span<const double> u, std::span<double> out) {
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const double vol = mesh.tet_volume(t);
    const double alpha = alpha_per_tet[t];
    const auto& k = mesh.tet(t);
    for (int p = 0; p < TetQuadrature::num_points; ++p) {
      const double* bc = TetQuadrature::coord[p];
      double uq = 0.0;
      for (int a = 0; a < 4; ++a) uq += bc[a] * u[k[a]];
      const double w = vol * TetQuadrature::weight * alpha * uq * uq * uq;
      for (int a = 0; a < 4; ++a) out[k[a]] += w * bc[a];
    }
  }
}

double quartic_integral(const TetMesh& mesh, std::span<const double> alpha_per_tet,
                        std::span<const double> u) {
  double s = 0.0;
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const double vol = mesh.tet_volume(t);
    const auto& k = mesh.tet(t);
    for (int p = 0; p < TetQuadrature::num_points; ++p) {
      const double* bc = TetQuadrature::coord[p];
      double uq = 0.0;
      for (int a = 0; a < 4; ++a) uq += bc[a] * u[k[a]];
      s += vol * TetQuadrature::weight * alpha_per_tet[t] * uq * uq * uq * uq;
    }
  }
  return s;
}

CsrMatrix assemble_boundary_mass(const TetMesh& mesh) {
  const int nb = mesh.num_boundary_vertices();
  std::vector<std::vector<int>> adj(nb);
  for (const auto& f : mesh.boundary_facets()) {
    int b[3];
    for (int i = 0; i < 3; ++i) b[i] = mesh.boundary_index(f.v[i]);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) adj[b[i]].push_back(b[j]);
  }
  CsrMatrix m;
  m.n = nb;
  m.row_ptr.assign(nb + 1, 0);
  for (int i = 0; i < nb; ++i) {
    auto& row = adj[i];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    m.row_ptr[i + 1] = m.row_ptr[i] + static_cast<int>(row.size());
  }
  for (int i = 0; i < nb; ++i) m.col.insert(m.col.end(), adj[i].begin(), adj[i].end());
  m.val.assign(m.col.size(), 0.0);

  auto pos = [&m](int i, int j) {
    const auto begin = m.col.begin() + m.row_ptr[i];
    const auto end = m.col.begin() + m.row_ptr[i + 1];
    return static_cast<int>(std::lower_bound(begin, end, j) - m.col.begin());
  };
  for (int f = 0; f < mesh.num_boundary_facets(); ++f) {
    const auto& bf = mesh.boundary_facets()[f];
    const double area = mesh.facet_area(f);
    int b[3];
    for (int i = 0; i < 3; ++i) b[i] = mesh.boundary_index(bf.v[i]);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m.val[pos(b[i], b[j])] += area * (i == j ? 2.0 : 1.0) / 12.0;
  }
  return m;
}

double boundary_pairing(const TetMesh& mesh, const CsrMatrix& boundary_mass,
                        std::span<const double> g_boundary, std::span<const double> u_full) {
  std::vector<double> u_b(mesh.num_boundary_vertices());
  for (int b = 0; b < mesh.num_boundary_vertices(); ++b)
    u_b[b] = u_full[mesh.boundary_vertices()[b]];
  std::vector<double> mg(u_b.size());
  boundary_mass.multiply(g_boundary, mg);
  return dot(std::span<const double>(mg), std::span<const double>(u_b));
}

std::vector<double> boundary_load(const TetMesh& mesh, const CsrMatrix& boundary_mass,
                                  std::span<const double> g_boundary) {
  std::vector<double> mg(mesh.num_boundary_vertices());
  boundary_mass.multiply(g_boundary, mg);
  std::vector<double> load(mesh.num_vertices(), 0.0);
  for (int b = 0; b < mesh.num_boundary_vertices(); ++b)
    load[mesh.boundary_vertices()[b]] = mg[b];
  return load;
}

NodalNorms compute_norms(const TetMesh& mesh, std::span<const double> u) {
  NodalNorms n;
  double l2sq = 0.0, semisq = 0.0, l4sum = 0.0;
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const ElementGeometry g = element_geometry(mesh, t);
    const auto& k = mesh.tet(t);
    // exact element mass: vol/20 * (1 + delta_ij)
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) l2sq += g.volume * (a == b ? 0.1 : 0.05) * u[k[a]] * u[k[b]];
    Vec3 grad{0, 0, 0};
    for (int a = 0; a < 4; ++a) grad += g.grad[a] * u[k[a]];
    semisq += g.volume * dot(grad, grad);
    for (int p = 0; p < TetQuadrature::num_points; ++p) {
      const double* bc = TetQuadrature::coord[p];
      double uq = 0.0;
      for (int a = 0; a < 4; ++a) uq += bc[a] * u[k[a]];
      l4sum += g.volume * TetQuadrature::weight * uq * uq * uq * uq;
    }
  }
  n.l2 = std::sqrt(l2sq);
  n.h1_semi = std::sqrt(semisq);
  n.h1 = std::sqrt(l2sq + semisq);
  n.l4 = std::pow(l4sum, 0.25);
  n.linf = 0.0;
  n.min_value = u.empty() ? 0.0 : u[0];
  for (double v : u) {
    n.linf = std::max(n.linf, std::abs(v));
    n.min_value = std::min(n.min_value, v);
  }
  return n;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

int conjugate_gradient(const CsrMatrix& a, std::span<const double> b, std::span<double> x,
                       double rel_tol, int max_iter) {
  const int n = a.n;
  std::vector<double> r(n), z(n), p(n), ap(n);
  std::vector<double> inv_diag = a.diagonal();
  for (double& d : inv_diag) d = (d != 0.0) ? 1.0 / d : 1.0;

  a.multiply(x, r);
  for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
  const double bnorm = std::max(norm2(b), 1e-300);
  if (norm2(r) <= rel_tol * bnorm) return 0;

  for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = dot(std::span<const double>(r), std::span<const double>(z));
  for (int it = 1; it <= max_iter; ++it) {
    a.multiply(p, ap);
    const double pap = dot(std::span<const double>(p), std::span<const double>(ap));
    if (pap <= 0.0)
      throw SolverError("solver", "conjugate gradients hit a non-positive curvature direction");
    const double alpha = rz / pap;
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    if (norm2(r) <= rel_tol * bnorm) return it;
    for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    const double rz_new = dot(std::span<const double>(r), std::span<const double>(z));
    const double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw SolverError("solver", "conjugate gradients did not converge within the iteration cap");
}

}  // namespace eitws
