#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "beamkit/metrics.hpp"
#include "beamkit/types.hpp"

namespace beamkit::sdp {

/// [[Re H, -Im H], [Im H, Re H]]. Spectrum is that of H with every
/// eigenvalue doubled in multiplicity.
RMatrix embed_real(const CMatrix& h);

/// Hermitian part recovered from a (not necessarily structured) symmetric
/// 2n x 2n matrix. Inverse of embed_real on its range; maps PSD to PSD.
CMatrix unembed_real(const RMatrix& x);

struct IpmSettings {
  double gap_tol = 1e-8;
  double feas_tol = 1e-8;
  int max_iters = 80;
  /// Line-delimited JSON records {"iter","pobj","dobj","gap",...}; off when null.
  std::ostream* trace = nullptr;
};

enum class SolveStatus { kOptimal, kMaxIterations, kPrimalInfeasible, kUnbounded, kNumerical };

// ---------------------------------------------------------------------------
// Real standard form:  min <C, X>  s.t.  <A_i, X> = b_i,  X = diag(X_b) >= 0.
// Blocks of dimension 1 are non-negative scalars.

struct RealRow {
  std::vector<RMatrix> coeffs;  // per block; an empty matrix means zero
  double rhs = 0.0;
};

struct RealSdp {
  std::vector<int> block_dims;
  std::vector<RMatrix> cost;  // per block; empty means zero
  std::vector<RealRow> rows;
};

struct RealSolution {
  SolveStatus status = SolveStatus::kNumerical;
  std::vector<RMatrix> x;
  std::vector<RMatrix> z;
  RVector y;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double complementarity = 0.0;  // <X, Z>
  double primal_residual = 0.0;  // relative
  double dual_residual = 0.0;    // relative
  int iterations = 0;
  /// Row with the largest Farkas weight when primal infeasible.
  int infeasible_row = -1;
};

RealSolution solve_real_sdp(const RealSdp& problem, const IpmSettings& settings = {});

// ---------------------------------------------------------------------------
// Complex Hermitian form (maximization over Hermitian PSD blocks).

enum class Sense { kLessEqual, kGreaterEqual, kEqual };

struct Constraint {
  std::vector<CMatrix> coeffs;  // per block; empty means zero
  Sense sense = Sense::kLessEqual;
  double rhs = 0.0;
  std::string label;
};

struct LinearSdp {
  std::vector<int> block_dims;
  std::vector<CMatrix> cost;  // per block; empty means zero
  std::vector<Constraint> constraints;
};

/// Primal covariance blocks plus solver diagnostics.
struct CovariancePool {
  std::vector<CMatrix> blocks;
  double objective_value = 0.0;
  /// Per-constraint slack, >= 0 when satisfied (rhs - lhs for <=, lhs - rhs
  /// for >=, -|lhs - rhs| for =).
  std::vector<double> feasibility_residuals;
  double duality_gap = 0.0;
  double complementarity = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Conditional-gradient gap (solve_sdr only).
  double fw_gap = 0.0;
  std::vector<double> objective_trace;
};

/// maximize sum_n Tr(C_n T_n) s.t. constraints, T_n >= 0.
/// Throws InfeasibleError (with the most-violated constraint index) when the
/// constraints admit no PSD point. A run that hits max_iters returns the last
/// iterate with converged = false.
CovariancePool solve_linear_sdp(const LinearSdp& problem, const IpmSettings& settings = {});

/// Uniform-block convenience form.
CovariancePool solve_linear_sdp(const std::vector<CMatrix>& cost,
                                const std::vector<Constraint>& constraints, int blocks, int dim,
                                const IpmSettings& settings = {});

/// sum_n Tr(A_n T_n) for one constraint.
double constraint_value(const Constraint& c, const std::vector<CMatrix>& blocks);

// ---------------------------------------------------------------------------
// Relaxed energy-efficiency subproblem.

struct SdrProblem {
  std::vector<CMatrix> q_list;     // M Hermitian PSD SINR matrices
  std::vector<CVector> steer_list; // L steering vectors
  std::vector<double> tau;         // M SINR floors
  std::vector<double> gamma;       // L beampattern floors (watts)
  double p_max = 0.0;
  double lambda_price = 0.0;
  /// Multiplies the price on sum Tr(T_n). 1 gives the literal relaxed
  /// objective; the Dinkelbach loop passes the amplifier efficiency so the
  /// price is charged against dissipated power.
  double price_weight = 1.0;
  int n_blocks = 0;  // K >= M
  int dim = 0;       // N_t

  /// Optional true link budget. When set, the SINR floors are imposed with
  /// the exact interference of the other blocks (linear in T) and repair
  /// checks the exact SINR; q_list then only shapes the rate objective.
  std::optional<CMatrix> channel_rows;
  double noise = 0.0;

  void validate() const;
};

struct SdrSettings {
  int max_iters = 200;
  double fw_tol = 1e-6;
  /// After each Frank-Wolfe step, also move toward the maximizer of the
  /// tangent-cut model of the log terms (one extra linear SDP per step).
  bool cut_steps = true;
  IpmSettings ipm{};
  /// Optional trace of (iteration, objective, gap) records.
  std::ostream* trace = nullptr;
};

/// Concave objective sum_m log2(1 + Tr(Q_m T_m)) - price * sum_n Tr(T_n).
double sdr_objective(const SdrProblem& problem, const std::vector<CMatrix>& blocks);

/// Maximizes the relaxed subproblem by conditional gradient over linear SDP
/// atoms. Throws InfeasibleError naming the binding floor when tau/gamma
/// cannot be met at p_max.
CovariancePool solve_sdr(const SdrProblem& problem, const SdrSettings& settings = {});

struct ExtractionResult {
  DigitalBeamformer beamformer;
  std::vector<double> rank_one_defect;  // 1 - lambda_max / trace per block
};

/// Principal eigenvector of each block scaled by sqrt(lambda_max); first
/// nonzero entry real positive; ties broken toward the lowest coordinate.
ExtractionResult rank_one_extract(const CovariancePool& pool);

struct RepairResult {
  DigitalBeamformer beamformer;
  bool feasible = true;
  bool changed = false;
  /// Relative violation per constraint (SINR floors, beampattern floors,
  /// power), positive when violated.
  std::vector<double> violation;
};

/// Restores power and QoS feasibility of an extracted beamformer by
/// rescaling its columns.
RepairResult repair_feasibility(const DigitalBeamformer& f, const SdrProblem& problem);

/// Least-power beamformer under the exact (not frozen) interference floors,
/// from the relaxation and rank-one extraction. Needs channel rows. Throws
/// InfeasibleError when the relaxed floors cannot be met.
DigitalBeamformer min_power_point(const SdrProblem& problem, const IpmSettings& ipm = {});

// ---------------------------------------------------------------------------
// Column power allocation (a small LP solved by the same interior-point core).

struct PowerAllocationProblem {
  /// Gains g(m, n) = |h_m^H f_n|^2 of the current column directions.
  RMatrix user_gains;   // M x K
  RMatrix target_gains; // L x K, |a_l^H f_n|^2
  RVector column_power; // K, ||f_n||^2
  std::vector<double> tau;
  std::vector<double> gamma;
  double noise = 0.0;
  double p_max = 0.0;
  /// Relative safety margin applied to every floor.
  double margin = 1e-6;
};

struct PowerAllocation {
  RVector scale;  // multiplicative power factor per column
  bool feasible = false;
  std::vector<double> violation;
};

/// Feasibility of a given power scaling (positive entries = violated).
std::vector<double> allocation_violation(const PowerAllocationProblem& p, const RVector& scale);

/// Finds column power factors meeting every floor while moving the least
/// power away from the given allocation. Prefers only raising powers
/// (factors >= 1); falls back to arbitrary factors; otherwise returns the
/// least-infeasible allocation.
PowerAllocation allocate_column_power(const PowerAllocationProblem& problem);

}  // namespace beamkit::sdp
