#include <iostream>
#include <random>
#include <string>

#include "CLI11.hpp"
#include "beamkit/config.hpp"
#include "beamkit/errors.hpp"
#include "beamkit/model.hpp"
#include "beamkit/pipeline.hpp"
#include "beamkit/sweep.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitNotConverged = 3;

beamkit::AngleConvention parse_convention(const std::string& s) {
  if (s == "figure") return beamkit::AngleConvention::kFigure;
  if (s == "physical") return beamkit::AngleConvention::kPhysical;
  throw beamkit::ConfigError("unknown angle convention '" + s + "'", "angle-convention");
}

int run_design(const std::string& path, const std::string& methods, const std::string& convention,
               long long seed) {
  using namespace beamkit;
  const ScenarioConfig cfg = load_config_file(path, {parse_convention(convention)});
  const std::uint64_t s = seed >= 0 ? static_cast<std::uint64_t>(seed) : cfg.rng_seed;
  std::mt19937_64 rng(s);
  const ChannelSet channels = generate_channels(cfg, rng);
  const auto outcomes = run_methods(channels, cfg, parse_methods(methods), PipelineOptions{});

  nlohmann::json doc;
  doc["version"] = BEAMKIT_VERSION;
  doc["seed"] = s;
  doc["config"] = to_json(cfg);
  for (const auto& out : outcomes) doc["reports"][method_name(out.method)] = report_to_json(out.report);
  std::cout << doc.dump(2) << '\n';

  const DesignReport& first = outcomes.front().report;
  if (!first.infeasible_reason.empty()) {
    std::cerr << "infeasible: " << first.infeasible_reason << '\n';
    return kExitInfeasible;
  }
  if (!first.feasible) {
    std::cerr << "infeasible: final design violates a constraint floor\n";
    return kExitInfeasible;
  }
  if (!first.converged) {
    std::cerr << "not converged\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"beamkit: energy-efficient hybrid beamforming for ISAC"};
  app.set_version_flag("--version", std::string(BEAMKIT_VERSION));
  app.require_subcommand(1);

  std::string convention = "figure";

  auto* design = app.add_subcommand("design", "Run one pipeline on a scenario and print the report");
  std::string design_path;
  std::string design_methods = "proposed";
  long long design_seed = -1;
  design->add_option("config", design_path, "Scenario JSON")->required();
  design->add_option("--methods", design_methods, "Comma list of proposed,omp,fdb,comm_only");
  design->add_option("--seed", design_seed, "Channel seed (default: rng_seed of the config)");
  design->add_option("--angle-convention", convention, "figure or physical");

  auto* sweep = app.add_subcommand("sweep", "Seeded Monte-Carlo sweep writing CSV and meta.json");
  std::string kind, sweep_config, out_dir, methods = "proposed,omp,fdb", grid, tau_db;
  int trials = 50, threads = 0;
  long long seed = -1;
  bool timing = false;
  sweep->add_option("--kind", kind, "snr, gamma, rfc, convergence or beampattern")->required();
  sweep->add_option("--config", sweep_config, "Scenario JSON")->required();
  sweep->add_option("--out", out_dir, "Output directory")->required();
  sweep->add_option("--trials", trials, "Monte-Carlo trials per grid point");
  sweep->add_option("--seed", seed, "Base seed; trial t uses seed + t (default: rng_seed)");
  sweep->add_option("--methods", methods, "Comma list of proposed,omp,fdb,comm_only");
  sweep->add_option("--grid", grid, "a,b,c or start:stop:step");
  sweep->add_option("--tau-db", tau_db, "SINR floors of the beampattern sweep, dB");
  sweep->add_option("--threads", threads, "Worker count (default: BEAMKIT_THREADS or all cores)");
  sweep->add_flag("--timing", timing, "Record wall time (CSV is then not reproducible)");
  sweep->add_option("--angle-convention", convention, "figure or physical");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*design) return run_design(design_path, design_methods, convention, design_seed);

    beamkit::SweepSpec spec;
    spec.kind = beamkit::parse_kind(kind);
    spec.angles = parse_convention(convention);
    spec.base = beamkit::load_config_file(sweep_config, {spec.angles});
    spec.grid = grid.empty() ? beamkit::default_grid(spec.kind) : beamkit::parse_grid(grid);
    if (!tau_db.empty()) spec.tau_db = beamkit::parse_grid(tau_db);
    spec.trials = trials;
    spec.seed = seed >= 0 ? static_cast<std::uint64_t>(seed) : spec.base.rng_seed;
    spec.methods = beamkit::parse_methods(methods);
    spec.threads = threads;
    spec.timing = timing;
    const auto result = beamkit::run_sweep(spec);
    for (const auto& p : beamkit::write_outputs(result, out_dir)) std::cout << p << '\n';
    return kExitOk;
  } catch (const beamkit::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const beamkit::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}
