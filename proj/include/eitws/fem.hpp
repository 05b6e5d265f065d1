#pragma once

// P1 finite-element infrastructure: CSR matrices, element assembly for the
// anisotropic stiffness / weighted mass forms, the degree-2 tet quadrature
// used for the cubic terms, boundary surface mass, and nodal norms.

#include <span>
#include <vector>

#include "eitws/mesh.hpp"

namespace eitws {

struct CsrMatrix {
  int n = 0;
  std::vector<int> row_ptr;  // size n+1
  std::vector<int> col;
  std::vector<double> val;

  void multiply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> diagonal() const;

  // Entry lookup by binary search; zero when the position is not stored.
  double at(int i, int j) const;
};

// Vertex-adjacency sparsity shared by every volume form on a mesh.
class SparsityPattern {
 public:
  explicit SparsityPattern(const TetMesh& mesh);

  CsrMatrix zero_matrix() const;
  int index_of(int i, int j) const;  // position in val, -1 if absent

 private:
  int n_ = 0;
  std::vector<int> row_ptr_;
  std::vector<int> col_;
};

// 4-point, degree-2-exact tet rule in barycentric coordinates.
struct TetQuadrature {
  static constexpr int num_points = 4;
  // barycentric coordinates of point q against vertex i
  static const double coord[num_points][4];
  // weights sum to 1; multiply by element volume
  static constexpr double weight = 0.25;
};

// P1 gradient data of one tet: constant gradients of the four hat functions.
struct ElementGeometry {
  double volume = 0.0;
  Vec3 grad[4];
};
ElementGeometry element_geometry(const TetMesh& mesh, int t);

// Sparse symmetric stiffness for the form  u, v -> int gamma grad u . grad v,
// with gamma constant per region.
CsrMatrix assemble_stiffness(const TetMesh& mesh, const SparsityPattern& pattern,
                             const SpdTensor3& gamma_outside, const SpdTensor3& gamma_inside);

// Exact P1 mass matrix: int u v.
CsrMatrix assemble_mass(const TetMesh& mesh, const SparsityPattern& pattern);

// Weighted mass  int q u v  with q a P1 nodal field, via the degree-2 rule.
CsrMatrix assemble_weighted_mass(const TetMesh& mesh, const SparsityPattern& pattern,
                                 std::span<const double> q);

// In-place add of the reaction Jacobian  int 3 alpha u^2 v w  into an existing
// matrix with the shared sparsity (alpha constant per tet).
void add_reaction_jacobian(const TetMesh& mesh, const SparsityPattern& pattern,
                           std::span<const double> alpha_per_tet, std::span<const double> u,
                           CsrMatrix& into);

// Residual contribution  int alpha u^3 phi_i  accumulated into out.
void add_reaction_residual(const TetMesh& mesh, std::span<const double> alpha_per_tet,
                           std::span<const double> u, std::span<double> out);

// int alpha u^4 over the mesh, degree-2 rule on the interpolant.
double quartic_integral(const TetMesh& mesh, std::span<const double> alpha_per_tet,
                        std::span<const double> u);

// Surface P1 mass matrix over boundary vertices (boundary indexing).
CsrMatrix assemble_boundary_mass(const TetMesh& mesh);

// Boundary pairing <g, u> = g^T M_b u for per-boundary-vertex fields.
double boundary_pairing(const TetMesh& mesh, const CsrMatrix& boundary_mass,
                        std::span<const double> g_boundary, std::span<const double> u_full);

// Full-length load vector with (M_b g) scattered onto boundary vertices.
std::vector<double> boundary_load(const TetMesh& mesh, const CsrMatrix& boundary_mass,
                                  std::span<const double> g_boundary);

struct NodalNorms {
  double l2 = 0.0;
  double h1_semi = 0.0;
  double h1 = 0.0;
  double l4 = 0.0;
  double linf = 0.0;
  double min_value = 0.0;
};

// L2 and the H1 seminorm are exact for P1; L4 uses the degree-2 rule;
// Linf and min scan nodal values.
NodalNorms compute_norms(const TetMesh& mesh, std::span<const double> u);

// Conjugate gradients with Jacobi preconditioning. Returns iterations used.
// Throws SolverError if the residual target is not met within max_iter.
int conjugate_gradient(const CsrMatrix& a, std::span<const double> b, std::span<double> x,
                       double rel_tol, int max_iter);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace eitws
