#include <algorithm>
#include <cmath>
#include <limits>

#include "beamkit/sdp.hpp"

namespace beamkit::sdp {

namespace {

struct LpRow {
  RVector coeffs;
  Sense sense = Sense::kGreaterEqual;
  double rhs = 0.0;
};

struct LpResult {
  bool ok = false;
  RVector x;
  double objective = 0.0;
};

// min c^T x  s.t. rows, x >= 0; every variable and slack is a 1x1 block.
LpResult solve_lp(const RVector& c, const std::vector<LpRow>& rows) {
  const int n = static_cast<int>(c.size());
  RealSdp sdp;
  sdp.block_dims.assign(n, 1);
  for (int j = 0; j < n; ++j) sdp.cost.push_back(RMatrix::Constant(1, 1, c(j)));
  for (const auto& row : rows) {
    if (row.sense != Sense::kEqual) {
      sdp.block_dims.push_back(1);
      sdp.cost.emplace_back();
    }
  }
  const std::size_t nb = sdp.block_dims.size();
  int slack = n;
  for (const auto& row : rows) {
    RealRow rr;
    rr.coeffs.resize(nb);
    for (int j = 0; j < n; ++j) {
      if (row.coeffs(j) != 0.0) rr.coeffs[j] = RMatrix::Constant(1, 1, row.coeffs(j));
    }
    if (row.sense != Sense::kEqual) {
      rr.coeffs[slack++] = RMatrix::Constant(1, 1, row.sense == Sense::kLessEqual ? 1.0 : -1.0);
    }
    rr.rhs = row.rhs;
    sdp.rows.push_back(std::move(rr));
  }
  IpmSettings settings;
  settings.gap_tol = 1e-10;
  settings.feas_tol = 1e-10;
  settings.max_iters = 100;
  const RealSolution sol = solve_real_sdp(sdp, settings);
  LpResult res;
  if (sol.x.empty()) return res;
  res.ok = sol.status == SolveStatus::kOptimal || sol.status == SolveStatus::kMaxIterations;
  res.x.resize(n);
  for (int j = 0; j < n; ++j) res.x(j) = std::max(0.0, sol.x[j](0, 0));
  res.objective = c.dot(res.x);
  return res;
}

}  // namespace

std::vector<double> allocation_violation(const PowerAllocationProblem& p, const RVector& scale) {
  const Eigen::Index m_users = p.user_gains.rows();
  const Eigen::Index l_targets = p.target_gains.rows();
  std::vector<double> v;
  for (Eigen::Index m = 0; m < m_users; ++m) {
    double interference = p.noise;
    for (Eigen::Index n = 0; n < scale.size(); ++n) {
      if (n != m) interference += p.user_gains(m, n) * scale(n);
    }
    const double sinr_m = p.user_gains(m, m) * scale(m) / interference;
    const double tau = p.tau[static_cast<std::size_t>(m)];
    v.push_back(tau > 0.0 ? 1.0 - sinr_m / tau : -1.0);
  }
  for (Eigen::Index l = 0; l < l_targets; ++l) {
    const double gain = p.target_gains.row(l).dot(scale);
    const double gamma = p.gamma[static_cast<std::size_t>(l)];
    v.push_back(gamma > 0.0 ? 1.0 - gain / gamma : -1.0);
  }
  v.push_back(p.column_power.dot(scale) / p.p_max - 1.0);
  return v;
}

PowerAllocation allocate_column_power(const PowerAllocationProblem& p) {
  const int k = static_cast<int>(p.column_power.size());
  const int m_users = static_cast<int>(p.user_gains.rows());
  const int l_targets = static_cast<int>(p.target_gains.rows());

  // Only columns with nonzero power can be scaled.
  std::vector<int> active;
  for (int n = 0; n < k; ++n) {
    if (p.column_power(n) > 0.0) active.push_back(n);
  }
  const int na = static_cast<int>(active.size());

  // Rows in terms of the power factors s_n = floor + x_n, normalized so each
  // right-hand side is O(1). Returned with the x-coefficients and rhs.
  auto build_rows = [&](double floor_level) {
    std::vector<LpRow> rows;
    const double up = 1.0 + p.margin;
    for (int m = 0; m < m_users; ++m) {
      const double tau = p.tau[static_cast<std::size_t>(m)] * up;
      if (tau <= 0.0) continue;
      const double norm = tau * p.noise;
      LpRow row;
      row.coeffs = RVector::Zero(na);
      double base = 0.0;
      for (int j = 0; j < na; ++j) {
        const int n = active[j];
        const double coeff = n == m ? p.user_gains(m, n) : -tau * p.user_gains(m, n);
        row.coeffs(j) = coeff / norm;
        base += coeff * floor_level;
      }
      row.rhs = (tau * p.noise - base) / norm;
      rows.push_back(std::move(row));
    }
    for (int l = 0; l < l_targets; ++l) {
      const double gamma = p.gamma[static_cast<std::size_t>(l)] * up;
      if (gamma <= 0.0) continue;
      LpRow row;
      row.coeffs = RVector::Zero(na);
      double base = 0.0;
      for (int j = 0; j < na; ++j) {
        row.coeffs(j) = p.target_gains(l, active[j]) / gamma;
        base += p.target_gains(l, active[j]) * floor_level;
      }
      row.rhs = (gamma - base) / gamma;
      rows.push_back(std::move(row));
    }
    LpRow power;
    power.sense = Sense::kLessEqual;
    power.coeffs = RVector::Zero(na);
    double base = 0.0;
    const double budget = p.p_max * (1.0 - p.margin);
    for (int j = 0; j < na; ++j) {
      power.coeffs(j) = p.column_power(active[j]) / budget;
      base += p.column_power(active[j]) * floor_level;
    }
    power.rhs = (budget - base) / budget;
    rows.push_back(std::move(power));
    return rows;
  };

  auto to_scale = [&](const RVector& x, double floor_level) {
    RVector s = RVector::Zero(k);
    for (int j = 0; j < na; ++j) s(active[j]) = floor_level + x(j);
    return s;
  };

  PowerAllocation best;
  best.scale = RVector::Zero(k);
  double best_excess = std::numeric_limits<double>::infinity();

  for (double floor_level : {1.0, 0.0}) {
    const std::vector<LpRow> rows = build_rows(floor_level);
    const int nr = static_cast<int>(rows.size());

    // Phase A: smallest total relative violation. One violation variable per
    // row appended after the x variables.
    std::vector<LpRow> relaxed = rows;
    for (int i = 0; i < nr; ++i) {
      RVector c = RVector::Zero(na + nr);
      c.head(na) = rows[i].coeffs;
      c(na + i) = rows[i].sense == Sense::kLessEqual ? -1.0 : 1.0;
      relaxed[i].coeffs = c;
    }
    RVector cost_a = RVector::Zero(na + nr);
    cost_a.tail(nr).setOnes();
    const LpResult phase_a = solve_lp(cost_a, relaxed);
    if (!phase_a.ok) continue;

    RVector scale = to_scale(phase_a.x.head(na), floor_level);
    if (phase_a.objective > 1e-7) {
      const auto v = allocation_violation(p, scale);
      const double excess = *std::max_element(v.begin(), v.end());
      if (excess < best_excess) {
        best_excess = excess;
        best.scale = scale;
        best.violation = v;
      }
      continue;
    }

    // Phase B: the feasible allocation closest to the given one, measured as
    // sum_j p_j |s_j - 1|. t_j >= |s_j - 1| are appended after x.
    std::vector<LpRow> close = rows;
    for (auto& row : close) {
      RVector c = RVector::Zero(2 * na);
      c.head(na) = row.coeffs;
      row.coeffs = c;
    }
    for (int j = 0; j < na; ++j) {
      LpRow above;
      above.coeffs = RVector::Zero(2 * na);
      above.coeffs(na + j) = 1.0;
      above.coeffs(j) = -1.0;
      above.rhs = floor_level - 1.0;
      close.push_back(above);
      LpRow below;
      below.coeffs = RVector::Zero(2 * na);
      below.coeffs(na + j) = 1.0;
      below.coeffs(j) = 1.0;
      below.rhs = 1.0 - floor_level;
      close.push_back(below);
    }
    RVector cost_b = RVector::Zero(2 * na);
    for (int j = 0; j < na; ++j) cost_b(na + j) = p.column_power(active[j]) / p.p_max;
    const LpResult phase_b = solve_lp(cost_b, close);
    if (phase_b.ok) {
      const RVector sb = to_scale(phase_b.x.head(na), floor_level);
      const auto vb = allocation_violation(p, sb);
      if (*std::max_element(vb.begin(), vb.end()) <= 0.0) {
        best.scale = sb;
        best.violation = vb;
        best.feasible = true;
        return best;
      }
    }
    const auto v = allocation_violation(p, scale);
    if (*std::max_element(v.begin(), v.end()) <= 0.0) {
      best.scale = scale;
      best.violation = v;
      best.feasible = true;
      return best;
    }
    const double excess = *std::max_element(v.begin(), v.end());
    if (excess < best_excess) {
      best_excess = excess;
      best.scale = scale;
      best.violation = v;
    }
  }
  if (best.violation.empty()) best.violation = allocation_violation(p, best.scale);
  return best;
}

}  // namespace beamkit::sdp
