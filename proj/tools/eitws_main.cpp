// Experiment runner: every pipeline stage as a subcommand, each writing a
// machine-readable report (report.json + stage CSVs + provenance.json).
//
// Exit codes: 0 success, 2 validation error, 3 solver failure,
// 4 reconstruction failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "eitws/experiments.hpp"

namespace {

using nlohmann::json;

void write_outputs(const std::string& out_dir, const std::string& subcommand,
                   const eitws::ExperimentConfig& config, const json& body, std::uint64_t seed) {
  const json report = eitws::report_envelope(subcommand, config, body);
  std::ofstream rep(out_dir + "/report.json");
  rep << report.dump(1);
  char hex[32];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(eitws::config_hash(config)));
  const json provenance{{"tool", "eitws"},
                        {"version", "0.1.0"},
                        {"subcommand", subcommand},
                        {"config_hash", std::string(hex)},
                        {"seed", seed}};
  std::ofstream prov(out_dir + "/provenance.json");
  prov << provenance.dump(1);
}

void write_error_report(const std::string& out_dir, const std::string& subcommand,
                        const std::string& stage, const std::string& message) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  std::ofstream rep(out_dir + "/report.json");
  rep << json{{"subcommand", subcommand},
              {"error", {{"stage", stage}, {"message", message}}}}
             .dump(1);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anisotropic-conductivity EIT workbench"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  int threads = 1;
  app.add_option("--config", config_path, "experiment config (JSON)")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "RNG seed for randomized experiments");
  app.add_option("--threads", threads, "worker threads for independent solves");

  const std::vector<std::string> names = {"forward", "mms",   "ntd",
                                          "frechet", "probe", "recover-boundary",
                                          "recover-inclusion", "distinguish"};
  for (const auto& name : names) app.add_subcommand(name);

  CLI11_PARSE(app, argc, argv);
  const std::string sub = app.get_subcommands().front()->get_name();

  eitws::ExperimentConfig config;
  try {
    config = eitws::load_config(config_path);
    config.validate();
  } catch (const std::exception& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    write_error_report(out_dir, sub, "validation", e.what());
    return 2;
  }

  try {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    json body;
    if (sub == "forward") body = eitws::run_forward(config, out_dir);
    else if (sub == "mms") body = eitws::run_mms(config, out_dir);
    else if (sub == "ntd") body = eitws::run_ntd(config, out_dir, threads);
    else if (sub == "frechet") body = eitws::run_frechet(config, out_dir, seed);
    else if (sub == "probe") body = eitws::run_probe(config, out_dir);
    else if (sub == "recover-boundary") body = eitws::run_recover_boundary(config, out_dir, seed);
    else if (sub == "recover-inclusion") body = eitws::run_recover_inclusion(config, out_dir);
    else if (sub == "distinguish") body = eitws::run_distinguish(config, out_dir);
    write_outputs(out_dir, sub, config, body, seed);
  } catch (const eitws::ReconstructError& e) {
    std::cerr << "reconstruction failure: " << e.what() << "\n";
    write_error_report(out_dir, sub, e.stage(), e.what());
    return 4;
  } catch (const eitws::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    write_error_report(out_dir, sub, e.stage(), e.what());
    return 3;
  } catch (const eitws::DomainError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    write_error_report(out_dir, sub, e.stage(), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    write_error_report(out_dir, sub, "unknown", e.what());
    return 3;
  }
  return 0;
}
