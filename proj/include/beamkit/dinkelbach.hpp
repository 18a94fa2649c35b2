#pragma once

#include <iosfwd>
#include <vector>

#include "beamkit/config.hpp"
#include "beamkit/metrics.hpp"
#include "beamkit/model.hpp"
#include "beamkit/sdp.hpp"

namespace beamkit {

struct DinkelbachState {
  double price = 0.0;
  DigitalBeamformer iterate;
  std::vector<CMatrix> q_cache;
  double rel_change = 0.0;
  int iteration = 0;
};

struct DinkelbachOptions {
  int max_iters = 50;
  /// Relative price change that ends the loop; negative uses cfg.tol_dinkelbach.
  double tol = -1.0;
  /// Re-solve with refreshed Q at a fixed price until the iterate settles
  /// before each price update.
  bool inner_q_loop = false;
  int inner_q_max = 10;
  /// Relative price decrease of a rejected step above which the trace is
  /// flagged non-monotone.
  double monotone_tol = 1e-6;
  sdp::SdrSettings sdr{};
  /// Line-delimited records per outer iteration; off when null.
  std::ostream* trace = nullptr;
};

struct DinkelbachTrace {
  std::vector<double> lambda;       // price of every accepted iterate, starting with the initial one
  std::vector<double> subtractive;  // relaxed subtractive objective at each inner solution
  std::vector<double> rank_one_defect;
  int iterations = 0;
  int repairs = 0;
  /// Steps whose price fell below the current one; the loop stops at the first.
  int rejected = 0;
  bool converged = false;
  bool monotone = true;
  bool feasible = true;
  DinkelbachState state;
};

struct DigitalDesign {
  DigitalBeamformer beamformer;
  DinkelbachTrace trace;
};

/// Sum-rate over dissipated power of f (the Dinkelbach price).
double price_update(const ChannelSet& channels, const DigitalBeamformer& f,
                    const ScenarioConfig& cfg);

/// Equal-power start: maximum-ratio user columns, steering target columns,
/// total power max_tx_power.
DigitalBeamformer initial_beamformer(const ChannelSet& channels, const ScenarioConfig& cfg);

/// Relaxed subproblem at the given iterate and price.
sdp::SdrProblem make_sdr_problem(const ChannelSet& channels, const DigitalBeamformer& f_prev,
                                 double price, const ScenarioConfig& cfg);

/// Fully-digital energy-efficiency design. Throws InfeasibleError when the
/// floors cannot be met.
DigitalDesign design_digital(const ChannelSet& channels, const ScenarioConfig& cfg,
                             const DinkelbachOptions& opts = {});

}  // namespace beamkit
