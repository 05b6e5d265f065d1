#pragma once

// Solvers for the semilinear Neumann problem
//   -div(gamma grad u) + alpha u^3 = f,   gamma grad u . nu = g
// and the linear Schroedinger-type problem
//   -div(gamma grad v) + q v = f,         gamma grad v . nu = g
// with damped Newton, energy tracking, and a-priori-bound checks.

#include <optional>
#include <vector>

#include "eitws/fem.hpp"
#include "eitws/mesh.hpp"

namespace eitws {

// Piecewise-constant conductivity, ionic coefficient, optional manufactured
// source (per vertex; testing only — the model itself has none).
struct Coefficients {
  SpdTensor3 gamma_outside;                 // gamma_0
  std::optional<SpdTensor3> gamma_inside;   // gamma_1, used on InsideD tets
  double alpha = 1.0;                       // constant unless alpha_per_tet set
  std::vector<double> alpha_per_tet;
  std::vector<double> source;               // per-vertex f, empty = absent
  double lambda0 = 0.5;                     // ellipticity constant
  double alpha0 = 0.5;                      // bound constant for alpha

  // Ellipticity of both tensors and the alpha bounds; throws DomainError.
  void validate(const TetMesh& mesh) const;

  const SpdTensor3& gamma_for(Region r) const {
    return (r == Region::InsideD && gamma_inside) ? *gamma_inside : gamma_outside;
  }
  std::vector<double> alpha_field(const TetMesh& mesh) const;
};

// Applied current density, one value per boundary vertex.
struct NeumannData {
  std::vector<double> values;

  static NeumannData zero(const TetMesh& mesh);
  static NeumannData constant(const TetMesh& mesh, double value);
  static NeumannData on_patch(const TetMesh& mesh, int patch_tag, double value);

  bool nonnegative() const;
  bool trivial() const;  // identically zero
  NeumannData& axpy(double s, const NeumannData& other);  // values += s * other
};

struct SolverOptions {
  double newton_tol = 1e-9;    // on the discrete residual, scaled by the load
  int newton_max_iter = 30;
  double linear_tol = 1e-10;   // relative CG tolerance
  int linear_max_iter = 50000;
  bool damping = true;
  std::optional<std::vector<double>> initial_guess;
};

struct SolverStats {
  int newton_iterations = 0;
  int picard_iterations = 0;
  int linear_iterations = 0;  // summed over all inner solves
  double final_residual = 0.0;
  std::vector<double> residual_history;
  std::vector<double> energy_history;  // energies of accepted iterates
};

struct FemSolution {
  std::vector<double> nodal_values;
  NodalNorms norms;
  SolverStats stats;
};

// Unique solution of the discrete semilinear problem. Newton with step
// halving on energy increase; falls back to Picard sweeps if the first
// Newton step diverges. Throws SolverError (with the residual history) on
// stagnation.
FemSolution solve_nonlinear(const TetMesh& mesh, const Coefficients& coeffs,
                            const NeumannData& g, const SolverOptions& opts = {});

// Linear solve with nodal potential q >= 0, q not identically 0 (else the
// system is singular and a SolverError is thrown). Optional source is a
// per-vertex field like Coefficients::source.
FemSolution solve_linear_schrodinger(const TetMesh& mesh, const Coefficients& coeffs,
                                     std::span<const double> q, const NeumannData& g,
                                     const SolverOptions& opts = {},
                                     std::span<const double> source = {});

// E(u) = 1/2 int gamma grad u . grad u + 1/4 int alpha u^4 - <g,u> - int f u.
double energy(const TetMesh& mesh, const Coefficients& coeffs, const NeumannData& g,
              std::span<const double> u);

struct EnergyInequalityReport {
  double lhs = 0.0;    // lambda0 |grad u|^2 + alpha0 |u|_L4^4
  double rhs = 0.0;    // <g,u> (+ int f u when a source is present)
  double slack = 0.0;  // 10 newton_tol (1 + |u|_H1)
  bool holds = false;
};

// Tests the choose-phi=u consequence of the weak form on a converged run.
EnergyInequalityReport check_energy_inequality(const TetMesh& mesh, const Coefficients& coeffs,
                                               const NeumannData& g, std::span<const double> u,
                                               double lambda0, double alpha0,
                                               double newton_tol = 1e-9);

}  // namespace eitws
