#include "beamkit/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "beamkit/errors.hpp"

namespace beamkit {

std::string method_name(Method m) {
  switch (m) {
    case Method::kProposed: return "proposed";
    case Method::kOmp: return "omp";
    case Method::kFdb: return "fdb";
    case Method::kCommOnly: return "comm_only";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "proposed") return Method::kProposed;
  if (name == "omp") return Method::kOmp;
  if (name == "fdb") return Method::kFdb;
  if (name == "comm_only") return Method::kCommOnly;
  throw std::invalid_argument("unknown method '" + name + "'");
}

std::vector<Method> parse_methods(const std::string& comma_list) {
  std::vector<Method> out;
  std::stringstream ss(comma_list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const Method m = parse_method(item);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  if (out.empty()) throw std::invalid_argument("no methods given");
  return out;
}

DesignReport evaluate(const ChannelSet& channels, const DigitalBeamformer& f,
                      const ScenarioConfig& cfg, int n_chains, const PipelineOptions& opts) {
  DesignReport r;
  r.per_user_sinr = all_sinr(channels, f, cfg.noise_power);
  r.sum_rate = 0.0;
  for (double s : r.per_user_sinr) r.sum_rate += std::log2(1.0 + s);
  r.tx_power = f.total_power();
  r.dissipated_power = dissipated_power(f, cfg.amplifier_efficiency, n_chains, cfg.rfc_static_power);
  r.energy_efficiency = r.sum_rate / r.dissipated_power;
  const double iso = cfg.max_tx_power / cfg.n_tx;
  for (int l = 0; l < cfg.n_targets; ++l) {
    r.per_target_gain.push_back(
        beampattern_gain(cfg.target_angles[l], f, cfg.antenna_spacing, cfg.carrier_wavelength) / iso);
  }
  std::string reason;
  const auto flag = [&](const std::string& what) {
    if (reason.empty()) reason = what;
  };
  if (r.tx_power > cfg.max_tx_power * (1.0 + opts.power_tol)) flag("transmit power above budget");
  for (int m = 0; m < channels.n_users(); ++m) {
    if (r.per_user_sinr[m] < cfg.sinr_thresholds[m] * (1.0 - opts.floor_tol)) {
      flag("SINR of user " + std::to_string(m) + " below its floor");
    }
  }
  for (int l = 0; l < cfg.n_targets; ++l) {
    if (r.per_target_gain[l] < cfg.beampattern_thresholds[l] * (1.0 - opts.floor_tol)) {
      flag("beampattern gain of target " + std::to_string(l) + " below its floor");
    }
  }
  r.feasible = reason.empty();
  r.infeasible_reason = reason;
  return r;
}

bool repair_hybrid(HybridBeamformer& hbf, const ChannelSet& channels, const ScenarioConfig& cfg) {
  const DigitalBeamformer f = hbf.digital();
  const sdp::SdrProblem problem = make_sdr_problem(channels, f, 0.0, cfg);
  const sdp::RepairResult rep = sdp::repair_feasibility(f, problem);
  if (rep.changed) {
    for (int n = 0; n < f.n_streams(); ++n) {
      const double before = f.columns.col(n).norm();
      const double after = rep.beamformer.columns.col(n).norm();
      if (before > 0.0) hbf.baseband.col(n) *= after / before;
    }
  }
  return rep.feasible;
}

ScenarioConfig comm_only_config(const ScenarioConfig& cfg) {
  ScenarioConfig c = cfg;
  std::fill(c.beampattern_thresholds.begin(), c.beampattern_thresholds.end(), 0.0);
  return c;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct DigitalRun {
  bool ok = false;
  std::string reason;
  DigitalDesign design;
  double seconds = 0.0;
};

DigitalRun run_digital(const ChannelSet& channels, const ScenarioConfig& cfg,
                       const PipelineOptions& opts) {
  DigitalRun run;
  const auto t0 = Clock::now();
  try {
    run.design = design_digital(channels, cfg, opts.dinkelbach);
    run.ok = true;
  } catch (const InfeasibleError& e) {
    run.reason = e.what();
  }
  run.seconds = seconds_since(t0);
  return run;
}

DesignReport infeasible_report(const std::string& reason) {
  DesignReport r;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.energy_efficiency = nan;
  r.sum_rate = nan;
  r.tx_power = nan;
  r.dissipated_power = nan;
  r.feasible = false;
  r.converged = false;
  r.infeasible_reason = reason;
  return r;
}

void attach_digital_trace(DesignReport& r, const DigitalDesign& d) {
  r.lambda_trace = d.trace.lambda;
  r.rank_one_defect = d.trace.rank_one_defect;
  r.dinkelbach_iterations = d.trace.iterations;
  r.monotone = d.trace.monotone;
  r.converged = d.trace.converged;
  if (!d.trace.feasible) r.feasible = false;
}

MethodOutcome hybrid_outcome(Method method, HybridBeamformer hbf, const CMatrix& target,
                             const ChannelSet& channels, const ScenarioConfig& cfg,
                             const PipelineOptions& opts) {
  MethodOutcome out;
  out.method = method;
  const double target_norm = target.norm();
  const double err = (target - hbf.product()).norm() / std::max(target_norm, 1e-300);
  const bool repaired = repair_hybrid(hbf, channels, cfg);
  out.digital = hbf.digital();
  out.report = evaluate(channels, out.digital, cfg, cfg.n_rfc, opts);
  out.report.factorization_error = err;
  if (!repaired) {
    out.report.feasible = false;
    if (out.report.infeasible_reason.empty()) {
      out.report.infeasible_reason = "no baseband scaling meets the floors";
    }
  }
  out.hybrid = std::move(hbf);
  return out;
}

}  // namespace

std::vector<MethodOutcome> run_methods(const ChannelSet& channels, const ScenarioConfig& cfg,
                                       const std::vector<Method>& methods,
                                       const PipelineOptions& opts) {
  const bool need_digital = std::any_of(methods.begin(), methods.end(),
                                        [](Method m) { return m != Method::kCommOnly; });
  DigitalRun digital;
  if (need_digital) digital = run_digital(channels, cfg, opts);

  std::vector<MethodOutcome> outcomes;
  for (Method method : methods) {
    const auto t0 = Clock::now();
    MethodOutcome out;
    out.method = method;
    const bool comm = method == Method::kCommOnly;
    const ScenarioConfig mcfg = comm ? comm_only_config(cfg) : cfg;
    DigitalRun comm_run;
    const DigitalRun* run = &digital;
    if (comm) {
      comm_run = run_digital(channels, mcfg, opts);
      run = &comm_run;
    }
    if (!run->ok) {
      out.report = infeasible_report(run->reason);
      outcomes.push_back(std::move(out));
      continue;
    }
    const CMatrix& target = run->design.beamformer.columns;
    bool failed = false;
    try {
      switch (method) {
        case Method::kProposed:
        case Method::kCommOnly: {
          const HybridDesign hd = design_hybrid(target, mcfg, opts.penalty);
          out = hybrid_outcome(method, hd.beamformer, target, channels, mcfg, opts);
          out.report.hybrid_rounds = static_cast<int>(hd.rounds.size());
          out.report.rcg_iterations = hd.rcg_iterations;
          out.report.continuation_ok = hd.continuation_ok;
          break;
        }
        case Method::kOmp: {
          const auto dict = SteeringDictionary::uniform_cosine(
              cfg.n_tx, opts.grid_factor * cfg.n_tx, cfg.antenna_spacing, cfg.carrier_wavelength);
          const OmpResult omp = omp_hybrid(target, dict, cfg.n_rfc, cfg.max_tx_power);
          out = hybrid_outcome(method, omp.beamformer, target, channels, cfg, opts);
          break;
        }
        case Method::kFdb: {
          out.digital = run->design.beamformer;
          out.report = evaluate(channels, out.digital, cfg, cfg.n_tx, opts);
          break;
        }
      }
    } catch (const RankDeficientError& e) {
      out.report = infeasible_report(e.what());
      failed = true;
    } catch (const std::overflow_error& e) {
      out.report = infeasible_report(e.what());
      failed = true;
    }
    const bool feasible = out.report.feasible;
    const bool continuation = out.report.continuation_ok;
    if (!failed) {
      attach_digital_trace(out.report, run->design);
      out.report.feasible = feasible && run->design.trace.feasible;
      out.report.converged = run->design.trace.converged && continuation;
    }
    out.report.wall_time = run->seconds + seconds_since(t0);
    outcomes.push_back(std::move(out));
  }
  return outcomes;
}

nlohmann::json report_to_json(const DesignReport& r) {
  nlohmann::json j;
  j["energy_efficiency"] = r.energy_efficiency;
  j["sum_rate"] = r.sum_rate;
  j["per_user_sinr"] = r.per_user_sinr;
  j["per_target_gain"] = r.per_target_gain;
  j["dissipated_power"] = r.dissipated_power;
  j["tx_power"] = r.tx_power;
  j["lambda_trace"] = r.lambda_trace;
  j["factorization_error"] = r.factorization_error;
  j["rank_one_defect"] = r.rank_one_defect;
  j["dinkelbach_iterations"] = r.dinkelbach_iterations;
  j["hybrid_rounds"] = r.hybrid_rounds;
  j["rcg_iterations"] = r.rcg_iterations;
  j["wall_time"] = r.wall_time;
  j["feasible"] = r.feasible;
  j["converged"] = r.converged;
  j["monotone"] = r.monotone;
  j["continuation_ok"] = r.continuation_ok;
  if (!r.infeasible_reason.empty()) j["infeasible_reason"] = r.infeasible_reason;
  return j;
}

}  // namespace beamkit
