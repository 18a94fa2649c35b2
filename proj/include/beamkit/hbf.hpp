#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "beamkit/config.hpp"
#include "beamkit/metrics.hpp"
#include "beamkit/types.hpp"

namespace beamkit {

/// F = F_RF F_BB with unit-modulus F_RF (N_t x M_t) and F_BB (M_t x K).
struct HybridBeamformer {
  CMatrix analog;
  CMatrix baseband;

  CMatrix product() const { return analog * baseband; }
  DigitalBeamformer digital() const { return DigitalBeamformer(product()); }
  double total_power() const { return product().squaredNorm(); }
};

/// The linear form charges mu * (||F||^2 - P) even below the budget; the
/// hinge form only charges the overshoot.
enum class PenaltyForm { kLinear, kHinge };

struct RcgParams {
  int max_iters = 100;
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  /// Restart period; 0 means one restart every N_t iterations.
  int restart_period = 0;
  double grad_tol = 1e-6;
};

/// Start for F_RF. kBestOf runs both candidates' least-squares fit and
/// keeps the better one.
enum class AnalogInit { kSvdPhase, kSubspaceSearch, kBestOf };

struct PenaltyParams {
  double mu0 = 1.5;
  double decay = 0.5;  // mu <- mu / decay after each round
  int max_rounds = 20;
  int max_alternations = 200;
  PenaltyForm form = PenaltyForm::kHinge;
  AnalogInit init = AnalogInit::kBestOf;
  /// Random starts per RF chain for the subspace search.
  int search_starts = 16;
  std::uint64_t search_seed = 7;
  RcgParams rcg{};

  void validate() const;
};

class RankDeficientError : public std::runtime_error {
 public:
  RankDeficientError(const std::string& what, double condition)
      : std::runtime_error(what), condition_(condition) {}
  double condition_number() const { return condition_; }

 private:
  double condition_;
};

double penalty_objective(const CMatrix& f_rf, const CMatrix& f_bb, const CMatrix& target, double mu,
                         double p_max, PenaltyForm form = PenaltyForm::kLinear);

/// Conjugate-Wirtinger gradient with respect to F_RF, scaled by 2, so that
/// d/dt f(F_RF + t D) = Re Tr(D^H G).
CMatrix euclidean_grad(const CMatrix& f_rf, const CMatrix& f_bb, const CMatrix& target, double mu);
CMatrix euclidean_grad(const CMatrix& f_rf, const CMatrix& f_bb, const CMatrix& target, double mu,
                       double p_max, PenaltyForm form);

/// Projection onto the tangent space of the complex circle manifold at x.
CMatrix riemannian_grad(const CMatrix& euclid, const CMatrix& point);

/// Entrywise (x + s) / |x + s|; entries that vanish keep the old value.
CMatrix retract(const CMatrix& point, const CMatrix& step);

struct RcgResult {
  CMatrix f_rf;
  int iterations = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
  bool converged = false;
  std::vector<double> objective_trace;
};

/// Minimizes the penalty over unit-modulus F_RF at fixed F_BB. Throws
/// std::overflow_error when the objective stops being finite.
RcgResult rcg_solve(const CMatrix& target, const CMatrix& f_bb, const CMatrix& f_rf_init,
                    double mu, const RcgParams& params, double p_max,
                    PenaltyForm form = PenaltyForm::kLinear);

double condition_number(const CMatrix& f_rf);

/// (F_RF^H F_RF)^{-1} F_RF^H target. Throws RankDeficientError.
CMatrix ls_baseband(const CMatrix& f_rf, const CMatrix& target);

struct HybridRound {
  int round = 0;
  double mu = 0.0;
  double error = 0.0;      // relative Frobenius error
  double overshoot = 0.0;  // ||F_RF F_BB||^2 - P_t
  int alternations = 0;
  int rcg_iterations = 0;
};

struct HybridDesign {
  HybridBeamformer beamformer;
  std::vector<HybridRound> rounds;
  double factorization_error = 0.0;  // relative, after the final rescale
  int rcg_iterations = 0;
  /// False when the power budget was only met by the final rescale.
  bool continuation_ok = true;
};

/// Phases of the leading left singular vectors of the target.
CMatrix svd_phase_init(const CMatrix& target, int n_rfc);

/// Unit-modulus vectors closest to the column space of the target, found by
/// alternating projection from seeded random starts; the n_rfc best mutually
/// independent ones. Columns of a realizable target's analog factor are
/// fixed points of the projection.
CMatrix subspace_search_init(const CMatrix& target, int n_rfc, int starts, std::uint64_t seed);

HybridDesign design_hybrid(const CMatrix& target, const ScenarioConfig& cfg,
                           const PenaltyParams& params = {});

/// Same, from a caller-supplied analog start.
HybridDesign design_hybrid(const CMatrix& target, const CMatrix& f_rf_init, double p_max,
                           double tol_change, double tol_power, const PenaltyParams& params);

}  // namespace beamkit
