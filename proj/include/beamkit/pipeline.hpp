#pragma once

#include <string>
#include <vector>

#include "beamkit/baselines.hpp"
#include "beamkit/config.hpp"
#include "beamkit/dinkelbach.hpp"
#include "beamkit/hbf.hpp"
#include "beamkit/metrics.hpp"
#include "json.hpp"

namespace beamkit {

enum class Method { kProposed, kOmp, kFdb, kCommOnly };

std::string method_name(Method m);
/// Throws std::invalid_argument on an unknown name.
Method parse_method(const std::string& name);
std::vector<Method> parse_methods(const std::string& comma_list);

struct PipelineOptions {
  DinkelbachOptions dinkelbach{};
  PenaltyParams penalty{};
  /// Dictionary atoms per antenna for the OMP baseline.
  int grid_factor = 4;
  /// Relative tolerance of the feasibility verdict on SINR and gain floors.
  double floor_tol = 1e-3;
  /// Relative tolerance on the power budget.
  double power_tol = 1e-6;
};

struct MethodOutcome {
  Method method = Method::kProposed;
  DesignReport report;
  HybridBeamformer hybrid;     // empty for kFdb
  DigitalBeamformer digital;   // the transmitted beamformer
};

/// Metrics of a transmitted beamformer. Static power counts n_chains RF
/// chains. Target gains are relative to the isotropic level P_t / N_t.
DesignReport evaluate(const ChannelSet& channels, const DigitalBeamformer& f,
                      const ScenarioConfig& cfg, int n_chains, const PipelineOptions& opts = {});

/// Rescales baseband columns until the true SINR, gain and power
/// constraints hold. Returns false when no scaling achieves that.
bool repair_hybrid(HybridBeamformer& hbf, const ChannelSet& channels, const ScenarioConfig& cfg);

/// The scenario without beampattern floors.
ScenarioConfig comm_only_config(const ScenarioConfig& cfg);

/// Runs the requested methods on one channel realization. The fully-digital
/// design is shared by proposed, omp and fdb. Infeasibility is reported in
/// the outcome (feasible = false, infeasible_reason set), never thrown.
std::vector<MethodOutcome> run_methods(const ChannelSet& channels, const ScenarioConfig& cfg,
                                       const std::vector<Method>& methods,
                                       const PipelineOptions& opts = {});

nlohmann::json report_to_json(const DesignReport& r);

}  // namespace beamkit
