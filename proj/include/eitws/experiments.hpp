#pragma once

// Configuration-driven experiment drivers behind the CLI subcommands. Each
// driver returns a JSON-ready report; the CLI handles files and exit codes.

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

#include "eitws/io.hpp"

namespace eitws {

struct GeometrySpec {
  std::string kind = "box";  // box | ball | import
  std::array<double, 3> extent{1, 1, 1};
  int n = 8;                 // box subdivisions
  double radius = 1.0;       // ball radius
  int refinement = 8;        // ball refinement
  std::string path;          // import path (.msh or .json)
  std::optional<Ellipsoid> inclusion;
};

struct BoundaryDataSpec {
  std::string kind = "constant";  // constant | per_patch | delta
  double value = 1.0;
  std::vector<std::pair<std::string, double>> patch_values;
  Vec3 center;        // delta center
  double epsilon = 0.1;
};

struct ExperimentParams {
  std::vector<double> taus = {0.1, 0.05, 0.025, 0.0125};
  int directions = 3;
  std::vector<double> radii;            // explicit probe ladder (optional)
  int ladder_count = 4;
  double ladder_ratio = 2.0;
  Vec3 probe_seed{0, 0, 1};
  std::string patch = "zmax";
  double search_radius = 0.5;
  bool bypass_exact_kernel = false;
  std::vector<double> contrasts = {1.5, 2.0, 3.0};
  std::vector<int> mms_levels = {4, 8, 16};
  std::vector<Vec3> probe_points;       // probe subcommand sample points
  Vec3 probe_source{0, 0, 1};
  bool log_nuisance = true;
};

struct ExperimentConfig {
  GeometrySpec geometry;
  Coefficients coefficients;
  BoundaryDataSpec boundary_data;
  SolverOptions solver;
  ExperimentParams params;

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  TetMesh build_mesh() const;
  NeumannData build_boundary_data(const TetMesh& mesh) const;

  // Ellipticity / alpha-bound validation that must reject a config before
  // any solve is attempted.
  void validate() const;
};

ExperimentConfig load_config(const std::string& path);

// FNV-1a content hash of the canonical serialized config.
std::uint64_t config_hash(const ExperimentConfig& config);

// Subcommand drivers; each returns the report body.
nlohmann::json run_forward(const ExperimentConfig& config, const std::string& out_dir);
nlohmann::json run_mms(const ExperimentConfig& config, const std::string& out_dir);
nlohmann::json run_ntd(const ExperimentConfig& config, const std::string& out_dir, int threads);
nlohmann::json run_frechet(const ExperimentConfig& config, const std::string& out_dir,
                           std::uint64_t seed);
nlohmann::json run_probe(const ExperimentConfig& config, const std::string& out_dir);
nlohmann::json run_recover_boundary(const ExperimentConfig& config, const std::string& out_dir,
                                    std::uint64_t seed);
nlohmann::json run_recover_inclusion(const ExperimentConfig& config, const std::string& out_dir);
nlohmann::json run_distinguish(const ExperimentConfig& config, const std::string& out_dir);

// Manufactured-solution convergence study used by `mms` and the acceptance
// suite: returns L2/H1 errors and fitted rates for both solvers.
struct MmsResult {
  std::vector<int> levels;
  std::vector<double> h;
  std::vector<double> nonlinear_l2, nonlinear_h1;
  std::vector<double> linear_l2, linear_h1;
  double nonlinear_l2_rate = 0.0, nonlinear_h1_rate = 0.0;
  double linear_l2_rate = 0.0, linear_h1_rate = 0.0;
};
MmsResult mms_study(const std::vector<int>& levels, const SolverOptions& opts);

nlohmann::json report_envelope(const std::string& subcommand, const ExperimentConfig& config,
                               const nlohmann::json& body);

}  // namespace eitws
