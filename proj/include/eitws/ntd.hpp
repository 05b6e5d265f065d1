#pragma once

// Discrete Neumann-to-Dirichlet operators, the linearization (Frechet
// derivative) verification harness, and Neumann-kernel probing via mollified
// boundary deltas.

#include <span>
#include <vector>

#include "eitws/solver.hpp"

namespace eitws {

// Dense linear NtD operator in the boundary nodal basis: column j is the
// boundary trace of the solve whose Neumann datum is the j-th boundary hat
// function. Application to nodal data g is matrix * g by superposition.
struct NtdMatrix {
  std::vector<int> boundary_vertex_index;  // row/col -> mesh vertex
  int dim = 0;
  std::vector<double> values;  // row major, dim x dim
  CsrMatrix boundary_mass;

  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * dim + j]; }
  std::vector<double> apply(std::span<const double> g) const;
};

// Boundary trace of a full nodal field.
std::vector<double> boundary_trace(const TetMesh& mesh, std::span<const double> full);

// Trace of the nonlinear solve: N_NL(g) = u(., g)|_boundary.
std::vector<double> ntd_nonlinear_apply(const TetMesh& mesh, const Coefficients& coeffs,
                                        const NeumannData& g, const SolverOptions& opts = {});

// Column-by-column linear NtD matrix for -div(gamma grad .) + q. Columns are
// independent solves and may run on `threads` workers; the result does not
// depend on the thread count.
NtdMatrix ntd_linear_matrix(const TetMesh& mesh, const Coefficients& coeffs,
                            std::span<const double> q, const SolverOptions& opts = {},
                            int threads = 1);

// || M L - L^T M ||_F / || M L ||_F  — the discrete self-adjointness defect.
double weighted_symmetry_residual(const NtdMatrix& ntd);

// Boundary L2 norm sqrt(v^T M v) of per-boundary-vertex data.
double boundary_l2_norm(const CsrMatrix& boundary_mass, std::span<const double> v);

struct FrechetReport {
  std::vector<double> taus;
  std::vector<double> errors;  // e(tau) = |(u_tau - u0)/tau - v0|_H1
  std::vector<double> ratios;  // e(tau_{i+1}) / e(tau_i)
  double fitted_order = 0.0;   // least-squares slope of log e against log tau
  double noise_floor = 0.0;
  bool monotone = true;        // decreasing until the noise floor
};

// Difference-quotient convergence of the nonlinear NtD map at g0 in direction
// gstar against the solution v0 of the linearized problem with q = 3 alpha u0^2.
FrechetReport frechet_check(const TetMesh& mesh, const Coefficients& coeffs,
                            const NeumannData& g0, const NeumannData& gstar,
                            std::span<const double> taus, const SolverOptions& opts = {});

// Nodal field 3 alpha u^2 (alpha averaged onto vertices when per-tet).
std::vector<double> linearized_potential(const TetMesh& mesh, const Coefficients& coeffs,
                                         std::span<const double> u0);

// Normalized bump (1 - (d/eps)^2)_+ around `center` on the boundary, with
// int_boundary delta = 1 against the surface mass. `patch_tag` < 0 means no
// patch restriction. Throws when eps is under-resolved by the local mesh.
NeumannData mollified_delta(const TetMesh& mesh, int patch_tag, const Vec3& center, double eps);

struct KernelProbe {
  Vec3 source_point;
  double epsilon = 0.0;
  std::vector<Vec3> points;
  std::vector<double> values;
};

// Kernel samples N(x, y) for x in xs: one linearized solve with a mollified
// delta at y, traced at the sample points. Each x must keep |x - y| >= 4 eps.
KernelProbe probe_kernel(const TetMesh& mesh, const Coefficients& coeffs,
                         std::span<const double> q, const Vec3& y, std::span<const Vec3> xs,
                         double eps, const SolverOptions& opts = {});

// Evaluate the P1 boundary trace of a full nodal field at (the boundary
// projection of) an arbitrary point.
double evaluate_trace(const TetMesh& mesh, std::span<const double> full, const Vec3& p);

// Closed-form half-space Neumann kernel
//   N(x, y') = (1/2pi) (g0 (x-y') . (x-y'))^{-1/2},  g0 = (det gamma0) gamma0^{-1},
// for y' in the plane {x3 = 0} and x in the closed upper half space.
double half_space_kernel(const SpdTensor3& gamma0, const Vec3& x, const Vec3& y_prime);

// The same quadratic-form evaluation without the half-space coordinate
// checks, for synthetic sampling in arbitrary frames.
double half_space_kernel_form(const SpdTensor3& metric, const Vec3& dx);

}  // namespace eitws
