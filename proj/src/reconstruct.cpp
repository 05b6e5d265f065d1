#include "eitws/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace eitws {

void HalfSpaceKernelSource::set_log_contamination(double amplitude, unsigned seed) {
  contamination_ = amplitude;
  contamination_seed_ = seed;
}

RaySamples HalfSpaceKernelSource::sample_ray(const Vec3& y, const Vec3& /*nu*/,
                                             const Vec3& direction,
                                             std::span<const double> radii) {
  RaySamples out;
  std::mt19937_64 rng(contamination_seed_ ^ std::hash<double>{}(direction.x + 3.0 * direction.y));
  std::uniform_real_distribution<double> unit(0.5, 1.0);
  std::bernoulli_distribution sign(0.5);
  for (double r : radii) {
    const Vec3 x = y + direction * r;
    double value = half_space_kernel_form(metric_, x - y);
    if (contamination_ != 0.0)
      value += (sign(rng) ? 1.0 : -1.0) * contamination_ * unit(rng) * std::abs(std::log(r));
    out.radii.push_back(r);
    out.values.push_back(value);
    out.points.push_back(x);
  }
  return out;
}

FemKernelSource::FemKernelSource(const TetMesh& mesh, Coefficients coeffs, std::vector<double> q,
                                 double eps, SolverOptions opts)
    : mesh_(mesh), coeffs_(std::move(coeffs)), q_(std::move(q)), eps_(eps), opts_(std::move(opts)) {}

const std::vector<double>& FemKernelSource::solve_for(const Vec3& y) {
  for (const auto& [p, field] : cache_)
    if (norm(p - y) == 0.0) return field;
  const NeumannData delta = mollified_delta(mesh_, -1, y, eps_);
  FemSolution sol = solve_linear_schrodinger(mesh_, coeffs_, q_, delta, opts_);
  cache_.emplace_back(y, std::move(sol.nodal_values));
  return cache_.back().second;
}

RaySamples FemKernelSource::sample_ray(const Vec3& y, const Vec3& nu, const Vec3& direction,
                                       std::span<const double> radii) {
  const std::vector<double>& field = solve_for(y);
  RaySamples out;
  for (double r : radii) {
    const SurfacePoint sp = project_to_boundary(mesh_, y + direction * r);
    const Vec3 offset = sp.point - y;
    if (norm(offset) < 3.8 * eps_)
      throw DomainError("reconstruct",
                        "probe sample snapped inside the mollifier exclusion zone");
    const Vec3 tangential = offset - nu * dot(offset, nu);
    const auto& f = mesh_.boundary_facets()[sp.facet];
    out.radii.push_back(norm(tangential));
    out.values.push_back(sp.bary[0] * field[f.v[0]] + sp.bary[1] * field[f.v[1]] +
                         sp.bary[2] * field[f.v[2]]);
    out.points.push_back(sp.point);
  }
  return out;
}

namespace {

// Solve the 3x3 normal equations by Gaussian elimination with pivoting.
std::array<double, 3> solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3> b) {
  for (int k = 0; k < 3; ++k) {
    int piv = k;
    for (int i = k + 1; i < 3; ++i)
      if (std::abs(a[i][k]) > std::abs(a[piv][k])) piv = i;
    std::swap(a[k], a[piv]);
    std::swap(b[k], b[piv]);
    if (a[k][k] == 0.0) throw ReconstructError("reconstruct", "singular fit system");
    for (int i = k + 1; i < 3; ++i) {
      const double f = a[i][k] / a[k][k];
      for (int j = k; j < 3; ++j) a[i][j] -= f * a[k][j];
      b[i] -= f * b[k];
    }
  }
  std::array<double, 3> x{};
  for (int i = 2; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < 3; ++j) s -= a[i][j] * x[j];
    x[i] = s / a[i][i];
  }
  return x;
}

}  // namespace

FitResult fit_inverse_radius(std::span<const double> radii, std::span<const double> values,
                             const ExtractionOptions& opts) {
  const std::size_t m = radii.size();
  if (m < 2 || values.size() != m)
    throw ReconstructError("reconstruct", "need at least two kernel samples per direction");

  FitResult fit;
  {  // pure c/r by least squares in the variable 1/r
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double inv = 1.0 / radii[i];
      num += values[i] * inv;
      den += inv * inv;
    }
    fit.c_plain = num / den;
  }
  if (!opts.log_nuisance || m < 3) {
    fit.c = fit.c_plain;
  } else {
    // c/r + b ln(1/r) + a
    std::array<std::array<double, 3>, 3> ata{};
    std::array<double, 3> atb{};
    for (std::size_t i = 0; i < m; ++i) {
      const double row[3] = {1.0 / radii[i], std::log(1.0 / radii[i]), 1.0};
      for (int p = 0; p < 3; ++p) {
        atb[p] += row[p] * values[i];
        for (int s = 0; s < 3; ++s) ata[p][s] += row[p] * row[s];
      }
    }
    const auto x = solve3(ata, atb);
    fit.c = x[0];
    fit.log_coeff = x[1];
    fit.intercept = x[2];
  }

  double ss = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double model = opts.log_nuisance && m >= 3
                             ? fit.c / radii[i] + fit.log_coeff * std::log(1.0 / radii[i]) +
                                   fit.intercept
                             : fit.c / radii[i];
    ss += (values[i] - model) * (values[i] - model);
    scale += values[i] * values[i];
  }
  fit.rms_residual = scale > 0.0 ? std::sqrt(ss / scale) : 0.0;

  if (!(fit.c > 0.0) || !std::isfinite(fit.c))
    throw ReconstructError("reconstruct", "extraction failed: fitted 1/r coefficient is not positive");
  return fit;
}

SymMat2 restriction_from_quadratic_forms(double q1, double q2, double qmid, double v1_dot_v2) {
  SymMat2 g;
  g.a11 = q1;
  g.a22 = q2;
  g.a12 = 0.5 * (qmid * (2.0 + 2.0 * v1_dot_v2) - q1 - q2);
  return g;
}

namespace {

double q_of_fit(const FitResult& fit) {
  const double t = 2.0 * M_PI * fit.c;
  return 1.0 / (t * t);
}

}  // namespace

TangentialMetric extract_tangential_metric(const Vec3& base_point, const Vec3& e1, const Vec3& e2,
                                           const DirectionSamples& along_e1,
                                           const DirectionSamples& along_e2,
                                           const DirectionSamples& along_bisector,
                                           const ExtractionOptions& opts) {
  if (std::abs(dot(e1, e1) - 1.0) > 1e-12 || std::abs(dot(e2, e2) - 1.0) > 1e-12 ||
      std::abs(dot(e1, e2)) > 1e-12)
    throw DomainError("reconstruct", "tangent basis is not orthonormal");
  for (const DirectionSamples* s : {&along_e1, &along_e2, &along_bisector})
    if (s->radii.size() < 4)
      throw DomainError("reconstruct", "need at least four radii per direction");

  const double q1 = q_of_fit(fit_inverse_radius(along_e1.radii, along_e1.values, opts));
  const double q2 = q_of_fit(fit_inverse_radius(along_e2.radii, along_e2.values, opts));
  const double qm = q_of_fit(fit_inverse_radius(along_bisector.radii, along_bisector.values, opts));

  TangentialMetric tm;
  tm.base_point = base_point;
  tm.basis1 = e1;
  tm.basis2 = e2;
  tm.g_tilde = restriction_from_quadratic_forms(q1, q2, qm, 0.0);
  if (!tm.g_tilde.spd())
    throw ReconstructError("reconstruct", "extraction failed: tangential metric is not SPD");
  return tm;
}

std::vector<double> make_radii_ladder(const TetMesh& mesh, int patch_tag, const Vec3& center,
                                      const ProbeOptions& opts) {
  if (!opts.radii.empty()) return opts.radii;
  const auto facets = mesh.facets_on_patch(patch_tag);
  if (facets.empty()) throw DomainError("reconstruct", "patch has no facets");
  Vec3 lo = mesh.facet_centroid(facets[0]), hi = lo;
  for (int f : facets) {
    const Vec3 c = mesh.facet_centroid(f);
    for (int i = 0; i < 3; ++i) {
      lo[i] = std::min(lo[i], c[i]);
      hi[i] = std::max(hi[i], c[i]);
    }
  }
  const double patch_diameter = norm(hi - lo);
  const double top_design = opts.top_fraction * patch_diameter;
  const int count = std::max(2, opts.ladder_count);
  const double span = std::pow(opts.ladder_ratio, count - 1);

  const double h = mesh.local_boundary_spacing(center, 0.25 * patch_diameter);
  const double floor = opts.min_spacings * h;
  const double r_bot = std::max(top_design / span, floor);
  const double r_top = std::min(std::max(top_design, r_bot * span),
                                opts.max_patch_fraction * patch_diameter);
  if (!(r_top > 1.2 * r_bot))
    throw DomainError("reconstruct",
                      "resolution too coarse for a kernel-fit ladder on this patch");
  const double ratio = std::pow(r_top / r_bot, 1.0 / (count - 1));
  std::vector<double> radii(count);
  for (int i = 0; i < count; ++i) radii[i] = r_bot * std::pow(ratio, i);
  return radii;
}

SpdTensor3 recover_boundary_tensor(KernelSource& kernel, const ProbeFrame& frame,
                                   const ProbeOptions& opts, ReconstructionReport* report) {
  if (opts.radii.empty())
    throw DomainError("reconstruct", "probe options must carry a radii ladder");

  const auto bases = probe_bases_local(frame);
  const Vec3 points[3] = {frame.p1, frame.p2, frame.p3};
  const Vec3 normals[3] = {frame.nu1, frame.nu2, frame.nu3};

  std::array<SymMat2, 3> restrictions;
  std::vector<DirectionFitInfo> fits;
  double max_residual = 0.0;

  for (int k = 0; k < 3; ++k) {
    const Vec3 v1 = frame.to_global(bases[k][0]);
    const Vec3 v2 = frame.to_global(bases[k][1]);
    const double c12 = dot(bases[k][0], bases[k][1]);
    const Vec3 mid = normalized(v1 + v2);

    double q[3];
    const Vec3 dirs[3] = {v1, v2, mid};
    for (int d = 0; d < 3; ++d) {
      RaySamples samples;
      try {
        samples = kernel.sample_ray(points[k], normals[k], dirs[d], opts.radii);
      } catch (const Error& e) {
        throw ReconstructError("reconstruct/probe", e.what());
      }
      FitResult fit;
      try {
        fit = fit_inverse_radius(samples.radii, samples.values, opts.extraction);
      } catch (const Error& e) {
        throw ReconstructError("reconstruct/fit", e.what());
      }
      q[d] = q_of_fit(fit);
      max_residual = std::max(max_residual, fit.rms_residual);
      fits.push_back({k, dirs[d], fit, q[d]});
    }
    restrictions[k] = restriction_from_quadratic_forms(q[0], q[1], q[2], c12);
  }

  RecoveryDiagnostics diag;
  SpdTensor3 metric_local = SpdTensor3::identity();
  try {
    metric_local = recover_full_metric(restrictions[0], restrictions[1], restrictions[2], frame,
                                       opts.thresholds, &diag);
  } catch (const DomainError& e) {
    throw;  // degenerate frame keeps its own tag
  } catch (const Error& e) {
    throw ReconstructError("reconstruct/algebra", e.what());
  }
  const SpdTensor3 metric_global = metric_local.congruence(frame.axes);
  SpdTensor3 gamma = SpdTensor3::identity();
  try {
    gamma = conductivity_from_metric(metric_global);
  } catch (const Error& e) {
    throw ReconstructError("reconstruct/algebra", e.what());
  }

  if (report) {
    report->recovered_tensor = gamma;
    report->tangential_restrictions = restrictions;
    report->frame = frame;
    report->radii = opts.radii;
    report->fits = std::move(fits);
    report->algebra_residuals = diag;
    report->max_fit_residual = max_residual;
  }
  return gamma;
}

SpdTensor3 recover_boundary_tensor_fem(const TetMesh& mesh, const Coefficients& coeffs,
                                       const NeumannData& g0, int patch_tag,
                                       const Vec3& seed_point, const ProbeFrameOptions& frame_opts,
                                       ProbeOptions opts, ReconstructionReport* report) {
  const ProbeFrame frame = select_probe_frame(mesh, patch_tag, seed_point, frame_opts);
  if (opts.radii.empty()) opts.radii = make_radii_ladder(mesh, patch_tag, frame.p1, opts);
  const double eps = opts.eps_factor * opts.radii.front();

  const FemSolution background = solve_nonlinear(mesh, coeffs, g0, opts.solver);
  std::vector<double> q = linearized_potential(mesh, coeffs, background.nodal_values);

  FemKernelSource kernel(mesh, coeffs, std::move(q), eps, opts.solver);
  SpdTensor3 gamma = recover_boundary_tensor(kernel, frame, opts, report);
  if (report) report->epsilon = eps;
  return gamma;
}

NtdMatrix inner_ntd_matrix(const TetMesh& parent, const Coefficients& coeffs,
                           const NeumannData& g0, const SolverOptions& opts, int threads) {
  if (!parent.has_inclusion()) throw DomainError("reconstruct", "parent mesh has no inclusion");
  const FemSolution background = solve_nonlinear(parent, coeffs, g0, opts);
  const std::vector<double> q_parent = linearized_potential(parent, coeffs, background.nodal_values);

  std::vector<int> vertex_map;
  const TetMesh inner = extract_inclusion_mesh(parent, &vertex_map);
  std::vector<double> q_inner(inner.num_vertices());
  for (int i = 0; i < inner.num_vertices(); ++i) q_inner[i] = q_parent[vertex_map[i]];

  Coefficients inner_coeffs;
  inner_coeffs.gamma_outside = coeffs.gamma_for(Region::InsideD);
  inner_coeffs.lambda0 = coeffs.lambda0;
  inner_coeffs.alpha0 = coeffs.alpha0;
  return ntd_linear_matrix(inner, inner_coeffs, q_inner, opts, threads);
}

SpdTensor3 recover_inclusion_tensor(const TetMesh& parent, const Coefficients& coeffs,
                                    const NeumannData& g0, const InclusionRecoveryOptions& opts,
                                    ReconstructionReport* report) {
  if (!parent.has_inclusion()) throw DomainError("reconstruct", "parent mesh has no inclusion");
  const FemSolution background = solve_nonlinear(parent, coeffs, g0, opts.probe.solver);
  const std::vector<double> q_parent =
      linearized_potential(parent, coeffs, background.nodal_values);

  std::vector<int> vertex_map;
  const TetMesh inner = extract_inclusion_mesh(parent, &vertex_map);
  std::vector<double> q_inner(inner.num_vertices());
  for (int i = 0; i < inner.num_vertices(); ++i) q_inner[i] = q_parent[vertex_map[i]];

  Vec3 seed;
  if (opts.seed_point) {
    seed = *opts.seed_point;
  } else {
    seed = inner.facet_centroid(0);
    for (int f = 1; f < inner.num_boundary_facets(); ++f) {
      const Vec3 c = inner.facet_centroid(f);
      if (c.z > seed.z) seed = c;
    }
  }

  const ProbeFrame frame =
      select_probe_frame(inner, patch::inclusion_boundary, seed, opts.frame);
  ProbeOptions probe = opts.probe;
  if (probe.radii.empty())
    probe.radii = make_radii_ladder(inner, patch::inclusion_boundary, frame.p1, probe);
  const double eps = probe.eps_factor * probe.radii.front();

  Coefficients inner_coeffs;
  inner_coeffs.gamma_outside = coeffs.gamma_for(Region::InsideD);
  inner_coeffs.lambda0 = coeffs.lambda0;
  inner_coeffs.alpha0 = coeffs.alpha0;

  FemKernelSource kernel(inner, inner_coeffs, std::move(q_inner), eps, probe.solver);
  SpdTensor3 gamma1 = recover_boundary_tensor(kernel, frame, probe, report);
  if (report) report->epsilon = eps;
  return gamma1;
}

GapReport distinguishability(const TetMesh& mesh, const Coefficients& coeffs_a,
                             const Coefficients& coeffs_b,
                             const std::vector<NeumannData>& currents,
                             const SolverOptions& opts) {
  const CsrMatrix boundary_mass = assemble_boundary_mass(mesh);
  GapReport rep;
  for (const NeumannData& g : currents) {
    const std::vector<double> ta = ntd_nonlinear_apply(mesh, coeffs_a, g, opts);
    const std::vector<double> tb = ntd_nonlinear_apply(mesh, coeffs_b, g, opts);
    std::vector<double> diff(ta.size());
    for (std::size_t i = 0; i < ta.size(); ++i) diff[i] = ta[i] - tb[i];
    const double nd = boundary_l2_norm(boundary_mass, diff);
    const double na = boundary_l2_norm(boundary_mass, ta);
    const double nb = boundary_l2_norm(boundary_mass, tb);
    rep.gaps_ab.push_back(na > 0.0 ? nd / na : 0.0);
    rep.gaps_ba.push_back(nb > 0.0 ? nd / nb : 0.0);
  }
  rep.max_gap_ab = rep.gaps_ab.empty() ? 0.0 : *std::max_element(rep.gaps_ab.begin(), rep.gaps_ab.end());
  rep.max_gap_ba = rep.gaps_ba.empty() ? 0.0 : *std::max_element(rep.gaps_ba.begin(), rep.gaps_ba.end());

  // Weak echo of the interior identification step: matching boundary data
  // should come with matching backgrounds away from the inclusion.
  const NeumannData g0 = NeumannData::constant(mesh, 1.0);
  const FemSolution ua = solve_nonlinear(mesh, coeffs_a, g0, opts);
  const FemSolution ub = solve_nonlinear(mesh, coeffs_b, g0, opts);
  double mismatch = 0.0;
  for (int t = 0; t < mesh.num_tets(); ++t) {
    if (mesh.region(t) != Region::OutsideD) continue;
    const auto& k = mesh.tet(t);
    const double vol = mesh.tet_volume(t);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        mismatch += vol * (a == b ? 0.1 : 0.05) *
                    (ua.nodal_values[k[a]] - ub.nodal_values[k[a]]) *
                    (ua.nodal_values[k[b]] - ub.nodal_values[k[b]]);
  }
  rep.background_mismatch_outside = std::sqrt(std::max(0.0, mismatch));
  return rep;
}

double relative_frobenius_error(const SpdTensor3& estimate, const SpdTensor3& truth) {
  return frobenius_distance(estimate, truth) / truth.frobenius();
}

double principal_axis_angle_deg(const SpdTensor3& estimate, const SpdTensor3& truth) {
  const Vec3 a = estimate.principal_axis();
  const Vec3 b = truth.principal_axis();
  const double c = std::clamp(std::abs(dot(a, b)), 0.0, 1.0);
  return std::acos(c) * 180.0 / M_PI;
}

}  // namespace eitws
