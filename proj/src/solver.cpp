#include "eitws/solver.hpp"

#include <algorithm>
#include <cmath>

namespace eitws {

void Coefficients::validate(const TetMesh& mesh) const {
  if (!ellipticity_check(gamma_outside, lambda0))
    throw DomainError("solver", "gamma_outside violates the ellipticity bounds");
  if (gamma_inside && !ellipticity_check(*gamma_inside, lambda0))
    throw DomainError("solver", "gamma_inside violates the ellipticity bounds");
  if (!(alpha0 > 0.0 && alpha0 < 1.0))
    throw DomainError("solver", "alpha0 must lie in (0, 1)");
  auto check_alpha = [this](double a) {
    if (!(a >= alpha0 && a <= 1.0 / alpha0))
      throw DomainError("solver", "alpha outside [alpha0, 1/alpha0]");
  };
  if (alpha_per_tet.empty()) {
    check_alpha(alpha);
  } else {
    if (static_cast<int>(alpha_per_tet.size()) != mesh.num_tets())
      throw DomainError("solver", "alpha_per_tet size does not match tet count");
    for (double a : alpha_per_tet) check_alpha(a);
  }
  if (!source.empty() && static_cast<int>(source.size()) != mesh.num_vertices())
    throw DomainError("solver", "source size does not match vertex count");
}

std::vector<double> Coefficients::alpha_field(const TetMesh& mesh) const {
  if (!alpha_per_tet.empty()) return alpha_per_tet;
  return std::vector<double>(mesh.num_tets(), alpha);
}

NeumannData NeumannData::zero(const TetMesh& mesh) {
  return {std::vector<double>(mesh.num_boundary_vertices(), 0.0)};
}

NeumannData NeumannData::constant(const TetMesh& mesh, double value) {
  return {std::vector<double>(mesh.num_boundary_vertices(), value)};
}

NeumannData NeumannData::on_patch(const TetMesh& mesh, int patch_tag, double value) {
  NeumannData g = zero(mesh);
  for (const auto& f : mesh.boundary_facets()) {
    if (f.patch != patch_tag) continue;
    for (int v : f.v) g.values[mesh.boundary_index(v)] = value;
  }
  return g;
}

bool NeumannData::nonnegative() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return v >= 0.0; });
}

bool NeumannData::trivial() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

NeumannData& NeumannData::axpy(double s, const NeumannData& other) {
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += s * other.values[i];
  return *this;
}

namespace {

std::vector<double> assemble_load(const TetMesh& mesh, const SparsityPattern& pattern,
                                  const CsrMatrix& boundary_mass, const NeumannData& g,
                                  std::span<const double> source) {
  std::vector<double> b = boundary_load(mesh, boundary_mass, g.values);
  if (!source.empty()) {
    const CsrMatrix mass = assemble_mass(mesh, pattern);
    std::vector<double> mf(mesh.num_vertices());
    mass.multiply(source, mf);
    for (int i = 0; i < mesh.num_vertices(); ++i) b[i] += mf[i];
  }
  return b;
}

double energy_of(const TetMesh& mesh, const CsrMatrix& stiffness,
                 std::span<const double> alpha_per_tet, std::span<const double> load,
                 std::span<const double> u) {
  std::vector<double> ku(u.size());
  stiffness.multiply(u, ku);
  return 0.5 * dot(std::span<const double>(ku), u) +
         0.25 * quartic_integral(mesh, alpha_per_tet, u) - dot(load, u);
}

}  // namespace

FemSolution solve_nonlinear(const TetMesh& mesh, const Coefficients& coeffs,
                            const NeumannData& g, const SolverOptions& opts) {
  coeffs.validate(mesh);
  if (static_cast<int>(g.values.size()) != mesh.num_boundary_vertices())
    throw DomainError("solver", "Neumann data size does not match boundary vertex count");

  const int n = mesh.num_vertices();
  const SparsityPattern pattern(mesh);
  const CsrMatrix boundary_mass = assemble_boundary_mass(mesh);
  const CsrMatrix stiffness = assemble_stiffness(mesh, pattern, coeffs.gamma_outside,
                                                 coeffs.gamma_for(Region::InsideD));
  const std::vector<double> alpha = coeffs.alpha_field(mesh);
  const std::vector<double> load = assemble_load(mesh, pattern, boundary_mass, g, coeffs.source);

  const double load_scale = 1.0 + norm2(load);
  const double tol = opts.newton_tol * load_scale;

  FemSolution sol;
  sol.nodal_values.assign(n, 0.0);
  std::vector<double>& u = sol.nodal_values;

  if (opts.initial_guess) {
    if (static_cast<int>(opts.initial_guess->size()) != n)
      throw DomainError("solver", "initial guess size does not match vertex count");
    u = *opts.initial_guess;
  } else {
    // Constant-mode start: alpha c^3 |Omega|_alpha = <load, 1>. Keeps the
    // first Jacobian away from the singular pure-Neumann stiffness.
    double total_load = 0.0;
    for (double v : load) total_load += v;
    double alpha_volume = 0.0;
    for (int t = 0; t < mesh.num_tets(); ++t) alpha_volume += alpha[t] * mesh.tet_volume(t);
    const double c = std::cbrt(total_load / alpha_volume);
    if (std::abs(c) > 1e-12) {
      std::fill(u.begin(), u.end(), c);
    } else if (norm2(load) > 0.0) {
      // Zero-mean load: start from the q=alpha proxy solve instead.
      CsrMatrix a = stiffness;
      std::vector<double> q(n, 1.0);
      const CsrMatrix mq = assemble_weighted_mass(mesh, pattern, q);
      for (std::size_t k = 0; k < a.val.size(); ++k) a.val[k] += alpha[0] * mq.val[k];
      sol.stats.linear_iterations +=
          conjugate_gradient(a, load, u, opts.linear_tol, opts.linear_max_iter);
    }
  }

  auto residual = [&](std::span<const double> v, std::vector<double>& out) {
    out.assign(n, 0.0);
    stiffness.multiply(v, out);
    add_reaction_residual(mesh, alpha, v, out);
    for (int i = 0; i < n; ++i) out[i] -= load[i];
  };

  std::vector<double> f(n), delta(n), trial(n);
  double current_energy = energy_of(mesh, stiffness, alpha, load, u);
  sol.stats.energy_history.push_back(current_energy);
  bool picard_done = false;

  for (int it = 0; it <= opts.newton_max_iter; ++it) {
    residual(u, f);
    const double rnorm = norm2(f);
    sol.stats.residual_history.push_back(rnorm);
    sol.stats.final_residual = rnorm;
    if (rnorm <= tol) {
      sol.norms = compute_norms(mesh, u);
      sol.stats.newton_iterations = it;
      return sol;
    }
    if (it == opts.newton_max_iter) break;

    CsrMatrix jac = stiffness;
    add_reaction_jacobian(mesh, pattern, alpha, u, jac);
    std::vector<double> rhs(n);
    for (int i = 0; i < n; ++i) rhs[i] = -f[i];
    delta.assign(n, 0.0);
    sol.stats.linear_iterations +=
        conjugate_gradient(jac, rhs, delta, opts.linear_tol, opts.linear_max_iter);

    double step = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= 20; ++halving) {
      for (int i = 0; i < n; ++i) trial[i] = u[i] + step * delta[i];
      const double trial_energy = energy_of(mesh, stiffness, alpha, load, trial);
      if (!opts.damping || trial_energy <= current_energy + 1e-14 * (1.0 + std::abs(current_energy))) {
        u = trial;
        current_energy = trial_energy;
        sol.stats.energy_history.push_back(current_energy);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!picard_done) {
        // First Newton step diverged: a few Picard sweeps to get into the
        // basin. The Picard matrix is K + int alpha u^2 v w = K + J_react/3.
        picard_done = true;
        for (int sweep = 0; sweep < 5; ++sweep) {
          CsrMatrix a = stiffness;
          CsrMatrix react = pattern.zero_matrix();
          add_reaction_jacobian(mesh, pattern, alpha, u, react);
          for (std::size_t k = 0; k < a.val.size(); ++k) a.val[k] += react.val[k] / 3.0;
          std::vector<double> next(n, 0.0);
          sol.stats.linear_iterations +=
              conjugate_gradient(a, load, next, opts.linear_tol, opts.linear_max_iter);
          u = next;
          ++sol.stats.picard_iterations;
        }
        current_energy = energy_of(mesh, stiffness, alpha, load, u);
        sol.stats.energy_history.push_back(current_energy);
        continue;
      }
      throw SolverError("solver", "Newton stagnated: no energy-decreasing step found",
                        sol.stats.residual_history);
    }
  }
  throw SolverError("solver", "Newton did not reach the residual tolerance",
                    sol.stats.residual_history);
}

FemSolution solve_linear_schrodinger(const TetMesh& mesh, const Coefficients& coeffs,
                                     std::span<const double> q, const NeumannData& g,
                                     const SolverOptions& opts, std::span<const double> source) {
  if (static_cast<int>(q.size()) != mesh.num_vertices())
    throw DomainError("solver", "q size does not match vertex count");
  double qmax = 0.0;
  for (double v : q) {
    if (v < -1e-14) throw DomainError("solver", "q must be nonnegative");
    qmax = std::max(qmax, v);
  }
  if (qmax == 0.0)
    throw SolverError("solver", "singular problem: q vanishes identically (constants in kernel)");
  if (static_cast<int>(g.values.size()) != mesh.num_boundary_vertices())
    throw DomainError("solver", "Neumann data size does not match boundary vertex count");

  const int n = mesh.num_vertices();
  const SparsityPattern pattern(mesh);
  const CsrMatrix boundary_mass = assemble_boundary_mass(mesh);
  CsrMatrix a = assemble_stiffness(mesh, pattern, coeffs.gamma_outside,
                                   coeffs.gamma_for(Region::InsideD));
  const CsrMatrix mq = assemble_weighted_mass(mesh, pattern, q);
  for (std::size_t k = 0; k < a.val.size(); ++k) a.val[k] += mq.val[k];

  const std::vector<double> b = assemble_load(mesh, pattern, boundary_mass, g, source);

  FemSolution sol;
  sol.nodal_values.assign(n, 0.0);
  if (opts.initial_guess && static_cast<int>(opts.initial_guess->size()) == n)
    sol.nodal_values = *opts.initial_guess;
  sol.stats.linear_iterations = conjugate_gradient(a, b, sol.nodal_values, opts.linear_tol,
                                                   opts.linear_max_iter);
  std::vector<double> r(n);
  a.multiply(sol.nodal_values, r);
  for (int i = 0; i < n; ++i) r[i] -= b[i];
  sol.stats.final_residual = norm2(r);
  sol.norms = compute_norms(mesh, sol.nodal_values);
  return sol;
}

double energy(const TetMesh& mesh, const Coefficients& coeffs, const NeumannData& g,
              std::span<const double> u) {
  const SparsityPattern pattern(mesh);
  const CsrMatrix boundary_mass = assemble_boundary_mass(mesh);
  const CsrMatrix stiffness = assemble_stiffness(mesh, pattern, coeffs.gamma_outside,
                                                 coeffs.gamma_for(Region::InsideD));
  const std::vector<double> alpha = coeffs.alpha_field(mesh);
  const std::vector<double> load = assemble_load(mesh, pattern, boundary_mass, g, coeffs.source);
  return energy_of(mesh, stiffness, alpha, load, u);
}

EnergyInequalityReport check_energy_inequality(const TetMesh& mesh, const Coefficients& coeffs,
                                               const NeumannData& g, std::span<const double> u,
                                               double lambda0, double alpha0, double newton_tol) {
  const NodalNorms norms = compute_norms(mesh, u);
  const CsrMatrix boundary_mass = assemble_boundary_mass(mesh);

  EnergyInequalityReport rep;
  rep.lhs = lambda0 * norms.h1_semi * norms.h1_semi + alpha0 * std::pow(norms.l4, 4.0);
  rep.rhs = boundary_pairing(mesh, boundary_mass, g.values, u);
  if (!coeffs.source.empty()) {
    const SparsityPattern pattern(mesh);
    const CsrMatrix mass = assemble_mass(mesh, pattern);
    std::vector<double> mf(mesh.num_vertices());
    mass.multiply(coeffs.source, mf);
    rep.rhs += dot(std::span<const double>(mf), u);
  }
  rep.slack = 10.0 * newton_tol * (1.0 + norms.h1);
  rep.holds = rep.lhs <= rep.rhs + rep.slack;
  return rep;
}

}  // namespace eitws
