#include "beamkit/dinkelbach.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "beamkit/errors.hpp"

namespace beamkit {

double price_update(const ChannelSet& channels, const DigitalBeamformer& f,
                    const ScenarioConfig& cfg) {
  return energy_efficiency(channels, f, cfg);
}

DigitalBeamformer initial_beamformer(const ChannelSet& channels, const ScenarioConfig& cfg) {
  const int k = cfg.n_streams;
  const int m_users = channels.n_users();
  CMatrix cols = CMatrix::Zero(cfg.n_tx, k);
  for (int n = 0; n < k; ++n) {
    CVector v;
    if (n < m_users) {
      v = channels.column(n);
    } else if (cfg.n_targets > 0) {
      const int l = (n - m_users) % cfg.n_targets;
      v = steering_vector(cfg.target_angles[l], cfg.n_tx, cfg.antenna_spacing,
                          cfg.carrier_wavelength);
    } else {
      v = channels.column(n % m_users);
    }
    const double nv = v.norm();
    if (nv > 0.0) cols.col(n) = v / nv * std::sqrt(cfg.max_tx_power / k);
  }
  return DigitalBeamformer(std::move(cols));
}

sdp::SdrProblem make_sdr_problem(const ChannelSet& channels, const DigitalBeamformer& f_prev,
                                 double price, const ScenarioConfig& cfg) {
  sdp::SdrProblem p;
  for (int m = 0; m < channels.n_users(); ++m) {
    p.q_list.push_back(build_q(channels, f_prev, m, cfg.noise_power));
  }
  for (int l = 0; l < cfg.n_targets; ++l) {
    p.steer_list.push_back(steering_vector(cfg.target_angles[l], cfg.n_tx, cfg.antenna_spacing,
                                           cfg.carrier_wavelength));
    p.gamma.push_back(cfg.beampattern_floor(l));
  }
  p.tau = cfg.sinr_thresholds;
  p.p_max = cfg.max_tx_power;
  p.lambda_price = price;
  p.price_weight = cfg.amplifier_efficiency;
  p.n_blocks = cfg.n_streams;
  p.dim = cfg.n_tx;
  p.channel_rows = channels.rows;
  p.noise = cfg.noise_power;
  return p;
}

namespace {

struct InnerStep {
  DigitalBeamformer f;
  double subtractive = 0.0;
  std::vector<double> defect;
  bool repaired = false;
  bool feasible = true;
};

InnerStep inner_step(const ChannelSet& channels, const DigitalBeamformer& f_prev, double price,
                     const ScenarioConfig& cfg, const DinkelbachOptions& opts) {
  const sdp::SdrProblem problem = make_sdr_problem(channels, f_prev, price, cfg);
  const sdp::CovariancePool pool = sdp::solve_sdr(problem, opts.sdr);
  const sdp::ExtractionResult ext = sdp::rank_one_extract(pool);
  const sdp::RepairResult rep = sdp::repair_feasibility(ext.beamformer, problem);
  InnerStep step;
  step.f = rep.beamformer;
  step.subtractive = pool.objective_value - price * cfg.n_rfc * cfg.rfc_static_power;
  step.defect = ext.rank_one_defect;
  step.repaired = rep.changed;
  step.feasible = rep.feasible;
  return step;
}

}  // namespace

DigitalDesign design_digital(const ChannelSet& channels, const ScenarioConfig& cfg,
                             const DinkelbachOptions& opts) {
  const double tol = opts.tol >= 0.0 ? opts.tol : cfg.tol_dinkelbach;
  DigitalDesign out;
  DinkelbachTrace& tr = out.trace;

  // A price is only a valid lower bound at a feasible point: repair the
  // start, and fall back to a zero price when that fails.
  DigitalBeamformer f = initial_beamformer(channels, cfg);
  sdp::RepairResult start = sdp::repair_feasibility(f, make_sdr_problem(channels, f, 0.0, cfg));
  if (!start.feasible) {
    // Equal-power matched beams interfere too much; start from the least
    // power point of the exact-interference relaxation instead.
    // When even that is infeasible the first inner solve reports the floor.
    const sdp::SdrProblem problem = make_sdr_problem(channels, f, 0.0, cfg);
    try {
      const DigitalBeamformer g = sdp::min_power_point(problem, opts.sdr.ipm);
      const sdp::RepairResult alt =
          sdp::repair_feasibility(g, make_sdr_problem(channels, g, 0.0, cfg));
      if (alt.feasible) start = alt;
    } catch (const InfeasibleError&) {
    }
  }
  bool current_feasible = start.feasible;
  if (start.feasible) f = start.beamformer;
  double price = current_feasible ? price_update(channels, f, cfg) : 0.0;
  tr.lambda.push_back(price);

  DigitalBeamformer best = f;
  double best_price = price;
  bool best_feasible = current_feasible;

  for (int n = 1; n <= opts.max_iters; ++n) {
    InnerStep step;
    try {
      step = inner_step(channels, f, price, cfg, opts);
    } catch (const InfeasibleError&) {
      // Interference frozen at an infeasible iterate can empty the relaxed
      // set; keep the best feasible iterate when there is one.
      if (!best_feasible) throw;
      break;
    }
    if (opts.inner_q_loop) {
      for (int j = 0; j < opts.inner_q_max; ++j) {
        InnerStep next = inner_step(channels, step.f, price, cfg, opts);
        const double change = (next.f.columns - step.f.columns).norm() /
                              std::max(1e-300, step.f.columns.norm());
        step = std::move(next);
        if (change <= tol) break;
      }
    }

    tr.subtractive.push_back(step.subtractive);
    tr.iterations = n;
    const double new_price = price_update(channels, step.f, cfg);
    if (current_feasible && new_price < price) {
      // No ascent from the current iterate: keep it and stop. The relaxed
      // step is deterministic, so retrying would return the same point.
      if (new_price < price - opts.monotone_tol * price) tr.monotone = false;
      ++tr.rejected;
      const double drop = (price - new_price) / price;
      tr.state.rel_change = -drop;
      tr.converged = drop <= tol;
      if (opts.trace != nullptr) {
        *opts.trace << "{\"outer_iter\":" << n << ",\"lambda\":" << price
                    << ",\"rejected_lambda\":" << new_price << "}\n";
      }
      break;
    }
    tr.rank_one_defect = step.defect;
    if (step.repaired) ++tr.repairs;
    f = step.f;
    current_feasible = step.feasible;
    const double rel = new_price > 0.0 ? (new_price - price) / new_price : 0.0;
    price = new_price;
    tr.lambda.push_back(price);

    if (step.feasible && (!best_feasible || price > best_price)) {
      best = f;
      best_price = price;
      best_feasible = true;
    }
    if (opts.trace != nullptr) {
      *opts.trace << "{\"outer_iter\":" << n << ",\"lambda\":" << price
                  << ",\"subtractive\":" << step.subtractive << ",\"rel_change\":" << rel
                  << ",\"repaired\":" << (step.repaired ? "true" : "false") << "}\n";
    }
    tr.state.rel_change = rel;
    if (std::abs(rel) <= tol) {
      tr.converged = true;
      break;
    }
  }

  if (!best_feasible) {
    best = f;
    best_price = price;
  }
  // The last iterate is returned when it is (up to tolerance) the best one.
  if (best_feasible && price >= best_price * (1.0 - opts.monotone_tol)) best = f;
  tr.feasible = best_feasible;
  tr.state.price = price_update(channels, best, cfg);
  tr.state.iterate = best;
  tr.state.iteration = tr.iterations;
  for (int m = 0; m < channels.n_users(); ++m) {
    tr.state.q_cache.push_back(build_q(channels, best, m, cfg.noise_power));
  }
  out.beamformer = best;
  return out;
}

}  // namespace beamkit
