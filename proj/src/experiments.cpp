#include "eitws/experiments.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

namespace eitws {

using nlohmann::json;

namespace {

Vec3 vec_from_json(const json& j, const Vec3& fallback = {}) {
  if (j.is_null()) return fallback;
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

SpdTensor3 tensor_from_json(const json& j) {
  std::array<double, 6> e{};
  for (int i = 0; i < 6; ++i) e[i] = j.at(i).get<double>();
  return SpdTensor3(e);
}

json tensor_to_json(const SpdTensor3& t) {
  const auto& e = t.entries();
  return json::array({e[0], e[1], e[2], e[3], e[4], e[5]});
}

json frame_to_json(const ProbeFrame& f) {
  return json{{"p1", {f.p1.x, f.p1.y, f.p1.z}},
              {"p2", {f.p2.x, f.p2.y, f.p2.z}},
              {"p3", {f.p3.x, f.p3.y, f.p3.z}},
              {"alpha", f.alpha},
              {"beta", f.beta},
              {"delta", f.delta},
              {"delta_p2_residual", f.delta_p2_residual}};
}

json report_to_json(const ReconstructionReport& r) {
  json fits = json::array();
  for (const auto& f : r.fits) {
    fits.push_back(json{{"probe_point", f.probe_point},
                        {"direction", {f.direction.x, f.direction.y, f.direction.z}},
                        {"c", f.fit.c},
                        {"c_plain", f.fit.c_plain},
                        {"log_coeff", f.fit.log_coeff},
                        {"intercept", f.fit.intercept},
                        {"rms_residual", f.fit.rms_residual},
                        {"q", f.q}});
  }
  json tangential = json::array();
  for (const auto& g : r.tangential_restrictions)
    tangential.push_back(json{{"a11", g.a11}, {"a12", g.a12}, {"a22", g.a22}});
  json j{{"recovered_tensor", tensor_to_json(r.recovered_tensor)},
         {"frame", frame_to_json(r.frame)},
         {"radii", r.radii},
         {"epsilon", r.epsilon},
         {"fits", std::move(fits)},
         {"tangential_restrictions", std::move(tangential)},
         {"max_fit_residual", r.max_fit_residual},
         {"algebra_residuals",
          {{"g2_11", r.algebra_residuals.residual_g2_11},
           {"g3_22", r.algebra_residuals.residual_g3_22},
           {"g3_12", r.algebra_residuals.residual_g3_12}}}};
  if (r.rel_frobenius_error) j["rel_frobenius_error"] = *r.rel_frobenius_error;
  if (r.principal_axis_angle_deg) j["principal_axis_angle_deg"] = *r.principal_axis_angle_deg;
  return j;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DomainError("cli", "cannot create output directory " + dir);
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DomainError("cli", "cannot open " + path + " for writing");
  out << j.dump(1);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  if (j.contains("geometry")) {
    const json& g = j["geometry"];
    c.geometry.kind = g.value("kind", c.geometry.kind);
    if (g.contains("extent"))
      for (int i = 0; i < 3; ++i) c.geometry.extent[i] = g["extent"].at(i).get<double>();
    c.geometry.n = g.value("n", c.geometry.n);
    c.geometry.radius = g.value("radius", c.geometry.radius);
    c.geometry.refinement = g.value("refinement", c.geometry.refinement);
    c.geometry.path = g.value("path", c.geometry.path);
    if (g.contains("inclusion") && !g["inclusion"].is_null()) {
      const json& inc = g["inclusion"];
      Ellipsoid e;
      e.center = vec_from_json(inc.value("center", json()), {0, 0, 0});
      if (inc.contains("semi_axes"))
        for (int i = 0; i < 3; ++i) e.semi_axes[i] = inc["semi_axes"].at(i).get<double>();
      if (inc.contains("rotation_axis")) {
        const Vec3 axis = vec_from_json(inc["rotation_axis"]);
        const double angle = inc.value("rotation_angle_deg", 0.0) * M_PI / 180.0;
        if (norm(axis) > 0 && angle != 0.0) e.rotation = rotation_about_axis(axis, angle);
      }
      c.geometry.inclusion = e;
    }
  }
  if (j.contains("coefficients")) {
    const json& co = j["coefficients"];
    if (co.contains("gamma0")) c.coefficients.gamma_outside = tensor_from_json(co["gamma0"]);
    if (co.contains("gamma1") && !co["gamma1"].is_null())
      c.coefficients.gamma_inside = tensor_from_json(co["gamma1"]);
    c.coefficients.alpha = co.value("alpha", c.coefficients.alpha);
    c.coefficients.lambda0 = co.value("lambda0", c.coefficients.lambda0);
    c.coefficients.alpha0 = co.value("alpha0", c.coefficients.alpha0);
  }
  if (j.contains("boundary_data")) {
    const json& b = j["boundary_data"];
    c.boundary_data.kind = b.value("kind", c.boundary_data.kind);
    c.boundary_data.value = b.value("value", c.boundary_data.value);
    if (b.contains("patch_values"))
      for (const auto& [name, v] : b["patch_values"].items())
        c.boundary_data.patch_values.emplace_back(name, v.get<double>());
    c.boundary_data.center = vec_from_json(b.value("center", json()), c.boundary_data.center);
    c.boundary_data.epsilon = b.value("epsilon", c.boundary_data.epsilon);
  }
  if (j.contains("solver")) {
    const json& s = j["solver"];
    c.solver.newton_tol = s.value("newton_tol", c.solver.newton_tol);
    c.solver.newton_max_iter = s.value("newton_max_iter", c.solver.newton_max_iter);
    c.solver.linear_tol = s.value("linear_tol", c.solver.linear_tol);
    c.solver.linear_max_iter = s.value("linear_max_iter", c.solver.linear_max_iter);
    c.solver.damping = s.value("damping", c.solver.damping);
  }
  if (j.contains("experiment")) {
    const json& e = j["experiment"];
    if (e.contains("taus")) c.params.taus = e["taus"].get<std::vector<double>>();
    c.params.directions = e.value("directions", c.params.directions);
    if (e.contains("radii")) c.params.radii = e["radii"].get<std::vector<double>>();
    c.params.ladder_count = e.value("ladder_count", c.params.ladder_count);
    c.params.ladder_ratio = e.value("ladder_ratio", c.params.ladder_ratio);
    c.params.probe_seed = vec_from_json(e.value("probe_seed", json()), c.params.probe_seed);
    c.params.patch = e.value("patch", c.params.patch);
    c.params.search_radius = e.value("search_radius", c.params.search_radius);
    c.params.bypass_exact_kernel = e.value("bypass_exact_kernel", c.params.bypass_exact_kernel);
    if (e.contains("contrasts")) c.params.contrasts = e["contrasts"].get<std::vector<double>>();
    if (e.contains("mms_levels")) c.params.mms_levels = e["mms_levels"].get<std::vector<int>>();
    if (e.contains("probe_points"))
      for (const auto& p : e["probe_points"]) c.params.probe_points.push_back(vec_from_json(p));
    c.params.probe_source = vec_from_json(e.value("probe_source", json()), c.params.probe_source);
    c.params.log_nuisance = e.value("log_nuisance", c.params.log_nuisance);
  }
  return c;
}

json ExperimentConfig::to_json() const {
  json j;
  j["geometry"] = {{"kind", geometry.kind},
                   {"extent", geometry.extent},
                   {"n", geometry.n},
                   {"radius", geometry.radius},
                   {"refinement", geometry.refinement},
                   {"path", geometry.path}};
  if (geometry.inclusion) {
    const Ellipsoid& e = *geometry.inclusion;
    json rot = json::array();
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) rot.push_back(e.rotation(i, k));
    j["geometry"]["inclusion"] = {{"center", {e.center.x, e.center.y, e.center.z}},
                                  {"semi_axes", e.semi_axes},
                                  {"rotation_row_major", std::move(rot)}};
  }
  j["coefficients"] = {{"gamma0", tensor_to_json(coefficients.gamma_outside)},
                       {"alpha", coefficients.alpha},
                       {"lambda0", coefficients.lambda0},
                       {"alpha0", coefficients.alpha0}};
  if (coefficients.gamma_inside)
    j["coefficients"]["gamma1"] = tensor_to_json(*coefficients.gamma_inside);
  j["boundary_data"] = {{"kind", boundary_data.kind},
                        {"value", boundary_data.value},
                        {"epsilon", boundary_data.epsilon},
                        {"center", {boundary_data.center.x, boundary_data.center.y,
                                    boundary_data.center.z}}};
  json pv = json::object();
  for (const auto& [name, v] : boundary_data.patch_values) pv[name] = v;
  j["boundary_data"]["patch_values"] = std::move(pv);
  j["solver"] = {{"newton_tol", solver.newton_tol},
                 {"newton_max_iter", solver.newton_max_iter},
                 {"linear_tol", solver.linear_tol},
                 {"linear_max_iter", solver.linear_max_iter},
                 {"damping", solver.damping}};
  json pp = json::array();
  for (const Vec3& p : params.probe_points) pp.push_back({p.x, p.y, p.z});
  j["experiment"] = {{"taus", params.taus},
                     {"directions", params.directions},
                     {"radii", params.radii},
                     {"ladder_count", params.ladder_count},
                     {"ladder_ratio", params.ladder_ratio},
                     {"probe_seed", {params.probe_seed.x, params.probe_seed.y, params.probe_seed.z}},
                     {"patch", params.patch},
                     {"search_radius", params.search_radius},
                     {"bypass_exact_kernel", params.bypass_exact_kernel},
                     {"contrasts", params.contrasts},
                     {"mms_levels", params.mms_levels},
                     {"probe_points", std::move(pp)},
                     {"probe_source",
                      {params.probe_source.x, params.probe_source.y, params.probe_source.z}},
                     {"log_nuisance", params.log_nuisance}};
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cli", "cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw DomainError("cli", std::string("config parse error: ") + e.what());
  }
  return ExperimentConfig::from_json(j);
}

void ExperimentConfig::validate() const {
  if (!ellipticity_check(coefficients.gamma_outside, coefficients.lambda0))
    throw DomainError("cli", "gamma0 violates the ellipticity bounds for lambda0");
  if (coefficients.gamma_inside &&
      !ellipticity_check(*coefficients.gamma_inside, coefficients.lambda0))
    throw DomainError("cli", "gamma1 violates the ellipticity bounds for lambda0");
  if (!(coefficients.alpha0 > 0.0 && coefficients.alpha0 < 1.0))
    throw DomainError("cli", "alpha0 must lie in (0, 1)");
  if (!(coefficients.alpha >= coefficients.alpha0 &&
        coefficients.alpha <= 1.0 / coefficients.alpha0))
    throw DomainError("cli", "alpha outside [alpha0, 1/alpha0]");
}

TetMesh ExperimentConfig::build_mesh() const {
  TetMesh mesh = [&] {
    if (geometry.kind == "box") return build_box_mesh(geometry.extent, geometry.n);
    if (geometry.kind == "ball") return build_ball_mesh(geometry.radius, geometry.refinement);
    if (geometry.kind == "import") {
      if (geometry.path.ends_with(".msh")) return load_mesh_msh(geometry.path);
      return load_mesh_json(geometry.path);
    }
    throw DomainError("cli", "unknown geometry kind: " + geometry.kind);
  }();
  if (geometry.inclusion) mesh = tag_inclusion(mesh, *geometry.inclusion);
  return mesh;
}

NeumannData ExperimentConfig::build_boundary_data(const TetMesh& mesh) const {
  if (boundary_data.kind == "constant")
    return NeumannData::constant(mesh, boundary_data.value);
  if (boundary_data.kind == "per_patch") {
    NeumannData g = NeumannData::zero(mesh);
    for (const auto& [name, v] : boundary_data.patch_values) {
      const NeumannData part = NeumannData::on_patch(mesh, patch::from_name(name), v);
      g.axpy(1.0, part);
    }
    return g;
  }
  if (boundary_data.kind == "delta")
    return mollified_delta(mesh, -1, boundary_data.center, boundary_data.epsilon);
  throw DomainError("cli", "unknown boundary data kind: " + boundary_data.kind);
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  const std::string s = config.to_json().dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

json report_envelope(const std::string& subcommand, const ExperimentConfig& config,
                     const json& body) {
  char hex[32];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(config_hash(config)));
  return json{{"subcommand", subcommand},
              {"config", config.to_json()},
              {"config_hash", std::string(hex)},
              {"body", body}};
}

// ---------------------------------------------------------------------------
// Manufactured-solution study. The manufactured field
//   u*(x) = cos(pi x) cos(pi y) cos(pi z)
// has vanishing Neumann flux on every face of the unit box (gamma = I), so
//   nonlinear: f = 3 pi^2 u* + (u*)^3,  linear (q = 1): f = 3 pi^2 u* + u*.
// ---------------------------------------------------------------------------

namespace {

double mms_field(const Vec3& p) {
  return std::cos(M_PI * p.x) * std::cos(M_PI * p.y) * std::cos(M_PI * p.z);
}

Vec3 mms_gradient(const Vec3& p) {
  const double sx = std::sin(M_PI * p.x), cx = std::cos(M_PI * p.x);
  const double sy = std::sin(M_PI * p.y), cy = std::cos(M_PI * p.y);
  const double sz = std::sin(M_PI * p.z), cz = std::cos(M_PI * p.z);
  return {-M_PI * sx * cy * cz, -M_PI * cx * sy * cz, -M_PI * cx * cy * sz};
}

struct MmsErrors {
  double l2 = 0.0;
  double h1 = 0.0;
};

MmsErrors mms_errors(const TetMesh& mesh, std::span<const double> u) {
  double l2 = 0.0, h1 = 0.0;
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const ElementGeometry g = element_geometry(mesh, t);
    const auto& k = mesh.tet(t);
    Vec3 grad_h{0, 0, 0};
    for (int a = 0; a < 4; ++a) grad_h += g.grad[a] * u[k[a]];
    for (int p = 0; p < TetQuadrature::num_points; ++p) {
      const double* bc = TetQuadrature::coord[p];
      Vec3 xq{0, 0, 0};
      double uq = 0.0;
      for (int a = 0; a < 4; ++a) {
        xq += mesh.vertex(k[a]) * bc[a];
        uq += bc[a] * u[k[a]];
      }
      const double w = g.volume * TetQuadrature::weight;
      const double diff = uq - mms_field(xq);
      const Vec3 gdiff = grad_h - mms_gradient(xq);
      l2 += w * diff * diff;
      h1 += w * dot(gdiff, gdiff);
    }
  }
  return {std::sqrt(l2), std::sqrt(h1)};
}

double fit_rate(const std::vector<double>& h, const std::vector<double>& e) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const auto m = static_cast<double>(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double lx = std::log(h[i]);
    const double ly = std::log(std::max(e[i], 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace

MmsResult mms_study(const std::vector<int>& levels, const SolverOptions& opts) {
  MmsResult res;
  res.levels = levels;
  for (int n : levels) {
    const TetMesh mesh = build_box_mesh({1, 1, 1}, n);
    res.h.push_back(1.0 / n);

    std::vector<double> f_nl(mesh.num_vertices()), f_lin(mesh.num_vertices());
    for (int i = 0; i < mesh.num_vertices(); ++i) {
      const double u = mms_field(mesh.vertex(i));
      f_nl[i] = 3.0 * M_PI * M_PI * u + u * u * u;
      f_lin[i] = 3.0 * M_PI * M_PI * u + u;
    }
    const NeumannData g = NeumannData::zero(mesh);

    Coefficients coeffs;
    coeffs.gamma_outside = SpdTensor3::identity();
    coeffs.alpha = 1.0;
    coeffs.lambda0 = 1.0;
    coeffs.alpha0 = 0.5;
    coeffs.source = f_nl;
    const FemSolution nl = solve_nonlinear(mesh, coeffs, g, opts);
    const MmsErrors e_nl = mms_errors(mesh, nl.nodal_values);
    res.nonlinear_l2.push_back(e_nl.l2);
    res.nonlinear_h1.push_back(e_nl.h1);

    Coefficients lin_coeffs;
    lin_coeffs.gamma_outside = SpdTensor3::identity();
    lin_coeffs.lambda0 = 1.0;
    const std::vector<double> q(mesh.num_vertices(), 1.0);
    const FemSolution lin = solve_linear_schrodinger(mesh, lin_coeffs, q, g, opts, f_lin);
    const MmsErrors e_lin = mms_errors(mesh, lin.nodal_values);
    res.linear_l2.push_back(e_lin.l2);
    res.linear_h1.push_back(e_lin.h1);
  }
  res.nonlinear_l2_rate = fit_rate(res.h, res.nonlinear_l2);
  res.nonlinear_h1_rate = fit_rate(res.h, res.nonlinear_h1);
  res.linear_l2_rate = fit_rate(res.h, res.linear_l2);
  res.linear_h1_rate = fit_rate(res.h, res.linear_h1);
  return res;
}

// ---------------------------------------------------------------------------
// Subcommand drivers
// ---------------------------------------------------------------------------

json run_forward(const ExperimentConfig& config, const std::string& out_dir) {
  ensure_dir(out_dir);
  const TetMesh mesh = config.build_mesh();
  const NeumannData g = config.build_boundary_data(mesh);
  const FemSolution sol = solve_nonlinear(mesh, config.coefficients, g, config.solver);
  const EnergyInequalityReport energy_rep =
      check_energy_inequality(mesh, config.coefficients, g, sol.nodal_values,
                              config.coefficients.lambda0, config.coefficients.alpha0,
                              config.solver.newton_tol);
  save_solution_csv(mesh, sol, out_dir + "/solution.csv");
  save_solution_json(sol, out_dir + "/solution.json");
  return json{{"norms",
               {{"l2", sol.norms.l2},
                {"h1_semi", sol.norms.h1_semi},
                {"h1", sol.norms.h1},
                {"l4", sol.norms.l4},
                {"linf", sol.norms.linf},
                {"min", sol.norms.min_value}}},
              {"stats",
               {{"newton_iterations", sol.stats.newton_iterations},
                {"linear_iterations", sol.stats.linear_iterations},
                {"final_residual", sol.stats.final_residual}}},
              {"energy", energy(mesh, config.coefficients, g, sol.nodal_values)},
              {"energy_inequality",
               {{"lhs", energy_rep.lhs},
                {"rhs", energy_rep.rhs},
                {"slack", energy_rep.slack},
                {"holds", energy_rep.holds}}}};
}

json run_mms(const ExperimentConfig& config, const std::string& out_dir) {
  ensure_dir(out_dir);
  const MmsResult res = mms_study(config.params.mms_levels, config.solver);
  std::ofstream csv(out_dir + "/mms.csv");
  csv << "n,h,nonlinear_l2,nonlinear_h1,linear_l2,linear_h1\n";
  csv.precision(17);
  for (std::size_t i = 0; i < res.levels.size(); ++i)
    csv << res.levels[i] << "," << res.h[i] << "," << res.nonlinear_l2[i] << ","
        << res.nonlinear_h1[i] << "," << res.linear_l2[i] << "," << res.linear_h1[i] << "\n";
  return json{{"levels", res.levels},
              {"nonlinear", {{"l2_rate", res.nonlinear_l2_rate}, {"h1_rate", res.nonlinear_h1_rate}}},
              {"linear", {{"l2_rate", res.linear_l2_rate}, {"h1_rate", res.linear_h1_rate}}}};
}

json run_ntd(const ExperimentConfig& config, const std::string& out_dir, int threads) {
  ensure_dir(out_dir);
  const TetMesh mesh = config.build_mesh();
  const NeumannData g0 = config.build_boundary_data(mesh);
  const FemSolution background = solve_nonlinear(mesh, config.coefficients, g0, config.solver);
  const std::vector<double> q =
      linearized_potential(mesh, config.coefficients, background.nodal_values);
  const NtdMatrix ntd = ntd_linear_matrix(mesh, config.coefficients, q, config.solver, threads);
  save_ntd_json(ntd, out_dir + "/ntd.json");
  save_ntd_csv(ntd, out_dir + "/ntd.csv");
  return json{{"dimension", ntd.dim},
              {"weighted_symmetry_residual", weighted_symmetry_residual(ntd)},
              {"background_min", background.norms.min_value}};
}

json run_frechet(const ExperimentConfig& config, const std::string& out_dir, std::uint64_t seed) {
  ensure_dir(out_dir);
  const TetMesh mesh = config.build_mesh();
  const NeumannData g0 = config.build_boundary_data(mesh);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  json directions = json::array();
  for (int d = 0; d < config.params.directions; ++d) {
    NeumannData gstar = NeumannData::zero(mesh);
    for (double& v : gstar.values) v = unit(rng);
    const FrechetReport rep =
        frechet_check(mesh, config.coefficients, g0, gstar, config.params.taus, config.solver);
    save_frechet_csv(rep, out_dir + "/frechet_dir" + std::to_string(d) + ".csv");
    directions.push_back(json{{"errors", rep.errors},
                              {"ratios", rep.ratios},
                              {"fitted_order", rep.fitted_order},
                              {"noise_floor", rep.noise_floor},
                              {"monotone", rep.monotone}});
  }
  return json{{"taus", config.params.taus}, {"directions", std::move(directions)}};
}

json run_probe(const ExperimentConfig& config, const std::string& out_dir) {
  ensure_dir(out_dir);
  const TetMesh mesh = config.build_mesh();
  const NeumannData g0 = config.build_boundary_data(mesh);
  const FemSolution background = solve_nonlinear(mesh, config.coefficients, g0, config.solver);
  const std::vector<double> q =
      linearized_potential(mesh, config.coefficients, background.nodal_values);

  const Vec3 y = project_to_boundary(mesh, config.params.probe_source).point;
  std::vector<Vec3> xs;
  for (const Vec3& p : config.params.probe_points) xs.push_back(project_to_boundary(mesh, p).point);
  const double eps = 1.5 * mesh.local_boundary_spacing(y, 4.0 * mesh.max_boundary_edge());
  const KernelProbe probe =
      probe_kernel(mesh, config.coefficients, q, y, xs, eps, config.solver);
  save_probe_csv(probe, out_dir + "/probe.csv");
  return json{{"source", {y.x, y.y, y.z}}, {"epsilon", eps},
              {"samples", probe.values.size()}};
}

json run_recover_boundary(const ExperimentConfig& config, const std::string& out_dir,
                          std::uint64_t /*seed*/) {
  ensure_dir(out_dir);
  const TetMesh mesh = config.build_mesh();
  const int patch_tag = patch::from_name(config.params.patch);

  ProbeOptions opts;
  opts.radii = config.params.radii;
  opts.ladder_count = config.params.ladder_count;
  opts.ladder_ratio = config.params.ladder_ratio;
  opts.extraction.log_nuisance = config.params.log_nuisance;
  opts.solver = config.solver;

  ProbeFrameOptions frame_opts;
  frame_opts.search_radius = config.params.search_radius;

  ReconstructionReport report;
  SpdTensor3 recovered = SpdTensor3::identity();
  if (config.params.bypass_exact_kernel) {
    const ProbeFrame frame =
        select_probe_frame(mesh, patch_tag, config.params.probe_seed, frame_opts);
    if (opts.radii.empty()) opts.radii = make_radii_ladder(mesh, patch_tag, frame.p1, opts);
    HalfSpaceKernelSource kernel(config.coefficients.gamma_outside);
    recovered = recover_boundary_tensor(kernel, frame, opts, &report);
  } else {
    const NeumannData g0 = config.build_boundary_data(mesh);
    recovered = recover_boundary_tensor_fem(mesh, config.coefficients, g0, patch_tag,
                                            config.params.probe_seed, frame_opts, opts, &report);
  }
  report.rel_frobenius_error =
      relative_frobenius_error(recovered, config.coefficients.gamma_outside);
  report.principal_axis_angle_deg =
      principal_axis_angle_deg(recovered, config.coefficients.gamma_outside);
  json body = report_to_json(report);
  body["truth_gamma0"] = tensor_to_json(config.coefficients.gamma_outside);
  write_json_file(out_dir + "/reconstruction.json", body);
  return body;
}

json run_recover_inclusion(const ExperimentConfig& config, const std::string& out_dir) {
  ensure_dir(out_dir);
  const TetMesh mesh = config.build_mesh();
  if (!config.coefficients.gamma_inside)
    throw DomainError("cli", "recover-inclusion needs gamma1 in the config");
  const NeumannData g0 = config.build_boundary_data(mesh);

  InclusionRecoveryOptions opts;
  opts.probe.radii = config.params.radii;
  opts.probe.ladder_count = config.params.ladder_count;
  opts.probe.ladder_ratio = config.params.ladder_ratio;
  opts.probe.extraction.log_nuisance = config.params.log_nuisance;
  opts.probe.solver = config.solver;
  opts.frame.search_radius = config.params.search_radius;

  ReconstructionReport report;
  const SpdTensor3 recovered = recover_inclusion_tensor(mesh, config.coefficients, g0, opts,
                                                        &report);
  report.rel_frobenius_error =
      relative_frobenius_error(recovered, *config.coefficients.gamma_inside);
  report.principal_axis_angle_deg =
      principal_axis_angle_deg(recovered, *config.coefficients.gamma_inside);
  json body = report_to_json(report);
  body["truth_gamma1"] = tensor_to_json(*config.coefficients.gamma_inside);
  write_json_file(out_dir + "/reconstruction.json", body);
  return body;
}

json run_distinguish(const ExperimentConfig& config, const std::string& out_dir) {
  ensure_dir(out_dir);
  const TetMesh mesh = config.build_mesh();
  if (!mesh.has_inclusion())
    throw DomainError("cli", "distinguish needs a mesh with an inclusion");

  std::vector<NeumannData> currents;
  for (int p = 0; p < 6; ++p) currents.push_back(NeumannData::on_patch(mesh, p, 1.0));

  json ladder = json::array();
  std::ofstream csv(out_dir + "/distinguish.csv");
  csv << "contrast,max_gap_ab,max_gap_ba,background_mismatch_outside\n";
  csv.precision(17);
  for (double contrast : config.params.contrasts) {
    Coefficients other = config.coefficients;
    other.gamma_inside = SpdTensor3::scaled_identity(contrast);
    const GapReport rep =
        distinguishability(mesh, config.coefficients, other, currents, config.solver);
    ladder.push_back(json{{"contrast", contrast},
                          {"gaps_ab", rep.gaps_ab},
                          {"max_gap_ab", rep.max_gap_ab},
                          {"max_gap_ba", rep.max_gap_ba},
                          {"background_mismatch_outside", rep.background_mismatch_outside}});
    csv << contrast << "," << rep.max_gap_ab << "," << rep.max_gap_ba << ","
        << rep.background_mismatch_outside << "\n";
  }
  return json{{"ladder", std::move(ladder)}};
}

}  // namespace eitws
