#include "eitws/ntd.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace eitws {

std::vector<double> NtdMatrix::apply(std::span<const double> g) const {
  std::vector<double> out(dim, 0.0);
  for (int i = 0; i < dim; ++i) {
    double s = 0.0;
    const double* row = values.data() + static_cast<std::size_t>(i) * dim;
    for (int j = 0; j < dim; ++j) s += row[j] * g[j];
    out[i] = s;
  }
  return out;
}

std::vector<double> boundary_trace(const TetMesh& mesh, std::span<const double> full) {
  std::vector<double> tr(mesh.num_boundary_vertices());
  for (int b = 0; b < mesh.num_boundary_vertices(); ++b) tr[b] = full[mesh.boundary_vertices()[b]];
  return tr;
}

std::vector<double> ntd_nonlinear_apply(const TetMesh& mesh, const Coefficients& coeffs,
                                        const NeumannData& g, const SolverOptions& opts) {
  const FemSolution sol = solve_nonlinear(mesh, coeffs, g, opts);
  return boundary_trace(mesh, sol.nodal_values);
}

NtdMatrix ntd_linear_matrix(const TetMesh& mesh, const Coefficients& coeffs,
                            std::span<const double> q, const SolverOptions& opts, int threads) {
  double qmax = 0.0;
  for (double v : q) {
    if (v < -1e-14) throw DomainError("ntd", "q must be nonnegative");
    qmax = std::max(qmax, v);
  }
  if (qmax == 0.0) throw SolverError("ntd", "singular problem: q vanishes identically");

  const int n = mesh.num_vertices();
  const int nb = mesh.num_boundary_vertices();
  const SparsityPattern pattern(mesh);
  CsrMatrix a = assemble_stiffness(mesh, pattern, coeffs.gamma_outside,
                                   coeffs.gamma_for(Region::InsideD));
  const CsrMatrix mq = assemble_weighted_mass(mesh, pattern, q);
  for (std::size_t k = 0; k < a.val.size(); ++k) a.val[k] += mq.val[k];

  NtdMatrix ntd;
  ntd.boundary_vertex_index = mesh.boundary_vertices();
  ntd.dim = nb;
  ntd.values.assign(static_cast<std::size_t>(nb) * nb, 0.0);
  ntd.boundary_mass = assemble_boundary_mass(mesh);

  auto run_columns = [&](int begin, int end) {
    std::vector<double> gb(nb), load(n), x(n);
    for (int j = begin; j < end; ++j) {
      std::fill(gb.begin(), gb.end(), 0.0);
      gb[j] = 1.0;
      load = boundary_load(mesh, ntd.boundary_mass, gb);
      std::fill(x.begin(), x.end(), 0.0);
      conjugate_gradient(a, load, x, opts.linear_tol, opts.linear_max_iter);
      for (int i = 0; i < nb; ++i)
        ntd.values[static_cast<std::size_t>(i) * nb + j] = x[mesh.boundary_vertices()[i]];
    }
  };

  const int workers = std::max(1, std::min(threads, nb));
  if (workers == 1) {
    run_columns(0, nb);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (nb + workers - 1) / workers;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back(run_columns, w * chunk, std::min(nb, (w + 1) * chunk));
    for (auto& t : pool) t.join();
  }
  return ntd;
}

double weighted_symmetry_residual(const NtdMatrix& ntd) {
  const int nb = ntd.dim;
  // Column c of M L and of L^T M, built from sparse M applied to dense L.
  std::vector<double> ml(static_cast<std::size_t>(nb) * nb, 0.0);
  const CsrMatrix& m = ntd.boundary_mass;
  for (int i = 0; i < nb; ++i)
    for (int k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) {
      const double w = m.val[k];
      const int r = m.col[k];
      const double* lrow = ntd.values.data() + static_cast<std::size_t>(r) * nb;
      double* out = ml.data() + static_cast<std::size_t>(i) * nb;
      for (int j = 0; j < nb; ++j) out[j] += w * lrow[j];
    }
  double num = 0.0, den = 0.0;
  for (int i = 0; i < nb; ++i)
    for (int j = 0; j < nb; ++j) {
      const double s = ml[static_cast<std::size_t>(i) * nb + j];
      const double t = ml[static_cast<std::size_t>(j) * nb + i];
      num += (s - t) * (s - t);
      den += s * s;
    }
  return std::sqrt(num / den);
}

double boundary_l2_norm(const CsrMatrix& boundary_mass, std::span<const double> v) {
  std::vector<double> mv(v.size());
  boundary_mass.multiply(v, mv);
  return std::sqrt(std::max(0.0, dot(std::span<const double>(mv), v)));
}

std::vector<double> linearized_potential(const TetMesh& mesh, const Coefficients& coeffs,
                                         std::span<const double> u0) {
  std::vector<double> q(mesh.num_vertices(), 0.0);
  if (coeffs.alpha_per_tet.empty()) {
    for (int i = 0; i < mesh.num_vertices(); ++i) q[i] = 3.0 * coeffs.alpha * u0[i] * u0[i];
    return q;
  }
  // Volume-weighted average of per-tet alpha onto vertices.
  std::vector<double> weight(mesh.num_vertices(), 0.0);
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const double w = mesh.tet_volume(t);
    for (int v : mesh.tet(t)) {
      q[v] += w * coeffs.alpha_per_tet[t];
      weight[v] += w;
    }
  }
  for (int i = 0; i < mesh.num_vertices(); ++i) q[i] = 3.0 * (q[i] / weight[i]) * u0[i] * u0[i];
  return q;
}

FrechetReport frechet_check(const TetMesh& mesh, const Coefficients& coeffs,
                            const NeumannData& g0, const NeumannData& gstar,
                            std::span<const double> taus, const SolverOptions& opts) {
  if (!g0.nonnegative() || g0.trivial())
    throw DomainError("ntd", "g0 must be nonnegative and nontrivial");
  for (std::size_t i = 0; i + 1 < taus.size(); ++i)
    if (!(taus[i] > taus[i + 1] && taus[i + 1] > 0.0))
      throw DomainError("ntd", "taus must be positive and decreasing");

  const FemSolution base = solve_nonlinear(mesh, coeffs, g0, opts);
  const std::vector<double> q = linearized_potential(mesh, coeffs, base.nodal_values);
  const FemSolution lin = solve_linear_schrodinger(mesh, coeffs, q, gstar, opts);

  FrechetReport rep;
  rep.noise_floor = 0.0;
  SolverOptions warm = opts;
  warm.initial_guess = base.nodal_values;
  const int n = mesh.num_vertices();
  std::vector<double> w(n);
  for (double tau : taus) {
    NeumannData g = g0;
    g.axpy(tau, gstar);
    const FemSolution pert = solve_nonlinear(mesh, coeffs, g, warm);
    for (int i = 0; i < n; ++i)
      w[i] = (pert.nodal_values[i] - base.nodal_values[i]) / tau - lin.nodal_values[i];
    rep.taus.push_back(tau);
    rep.errors.push_back(compute_norms(mesh, w).h1);
    rep.noise_floor = std::max(
        rep.noise_floor, 50.0 * opts.newton_tol * (1.0 + base.norms.h1) / tau);
  }
  for (std::size_t i = 0; i + 1 < rep.errors.size(); ++i) {
    rep.ratios.push_back(rep.errors[i + 1] / rep.errors[i]);
    const bool above_floor =
        rep.errors[i] > rep.noise_floor && rep.errors[i + 1] > rep.noise_floor;
    if (above_floor && rep.errors[i + 1] > 1.05 * rep.errors[i]) rep.monotone = false;
  }
  // log-log least squares for the decay order
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const auto m = static_cast<double>(rep.taus.size());
  for (std::size_t i = 0; i < rep.taus.size(); ++i) {
    const double lx = std::log(rep.taus[i]);
    const double ly = std::log(std::max(rep.errors[i], 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  rep.fitted_order = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return rep;
}

NeumannData mollified_delta(const TetMesh& mesh, int patch_tag, const Vec3& center, double eps) {
  if (!(eps > 0.0)) throw DomainError("ntd", "mollifier radius must be positive");
  const double h_local = mesh.local_boundary_spacing(center, 2.0 * eps);
  if (eps < 1.5 * h_local)
    throw DomainError("ntd", "mollifier under-resolved: eps below 1.5 x local boundary spacing");

  std::vector<bool> allowed(mesh.num_boundary_vertices(), patch_tag < 0);
  if (patch_tag >= 0) {
    for (const auto& f : mesh.boundary_facets())
      if (f.patch == patch_tag)
        for (int v : f.v) allowed[mesh.boundary_index(v)] = true;
  }

  NeumannData delta = NeumannData::zero(mesh);
  for (int b = 0; b < mesh.num_boundary_vertices(); ++b) {
    if (!allowed[b]) continue;
    const double d = norm(mesh.vertex(mesh.boundary_vertices()[b]) - center);
    if (d < eps) delta.values[b] = 1.0 - (d / eps) * (d / eps);
  }
  const CsrMatrix bm = assemble_boundary_mass(mesh);
  std::vector<double> mv(delta.values.size());
  bm.multiply(delta.values, mv);
  double integral = 0.0;
  for (double v : mv) integral += v;
  if (!(integral > 0.0))
    throw DomainError("ntd", "mollifier support contains no boundary vertex");
  for (double& v : delta.values) v /= integral;
  return delta;
}

double evaluate_trace(const TetMesh& mesh, std::span<const double> full, const Vec3& p) {
  const SurfacePoint sp = project_to_boundary(mesh, p);
  const auto& f = mesh.boundary_facets()[sp.facet];
  return sp.bary[0] * full[f.v[0]] + sp.bary[1] * full[f.v[1]] + sp.bary[2] * full[f.v[2]];
}

KernelProbe probe_kernel(const TetMesh& mesh, const Coefficients& coeffs,
                         std::span<const double> q, const Vec3& y, std::span<const Vec3> xs,
                         double eps, const SolverOptions& opts) {
  for (const Vec3& x : xs)
    if (norm(x - y) < 4.0 * eps)
      throw DomainError("ntd", "kernel sample closer than 4 eps to the source point");

  const NeumannData delta = mollified_delta(mesh, -1, y, eps);
  const FemSolution sol = solve_linear_schrodinger(mesh, coeffs, q, delta, opts);

  KernelProbe probe;
  probe.source_point = y;
  probe.epsilon = eps;
  for (const Vec3& x : xs) {
    probe.points.push_back(x);
    probe.values.push_back(evaluate_trace(mesh, sol.nodal_values, x));
  }
  return probe;
}

double half_space_kernel_form(const SpdTensor3& metric, const Vec3& dx) {
  const double quad = metric.quad(dx);
  if (!(quad > 0.0)) throw DomainError("ntd", "kernel evaluated at its singularity");
  return 1.0 / (2.0 * M_PI * std::sqrt(quad));
}

double half_space_kernel(const SpdTensor3& gamma0, const Vec3& x, const Vec3& y_prime) {
  if (std::abs(y_prime.z) > 1e-12)
    throw DomainError("ntd", "half-space kernel source must lie in the plane {x3 = 0}");
  if (x.z < -1e-12) throw DomainError("ntd", "half-space kernel point must have x3 >= 0");
  const Vec3 dx = x - y_prime;
  if (norm(dx) == 0.0) throw DomainError("ntd", "kernel evaluated at its singularity");
  return half_space_kernel_form(metric_from_conductivity(gamma0), dx);
}

}  // namespace eitws
