#include "beamkit/hbf.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace beamkit {

void PenaltyParams::validate() const {
  if (!(mu0 > 1.0)) throw std::invalid_argument("PenaltyParams: mu0 must exceed 1");
  if (!(decay > 0.0 && decay < 1.0)) throw std::invalid_argument("PenaltyParams: decay must be in (0,1)");
  if (max_rounds < 1) throw std::invalid_argument("PenaltyParams: max_rounds must be positive");
  if (max_alternations < 1) throw std::invalid_argument("PenaltyParams: max_alternations must be positive");
  if (rcg.max_iters < 0) throw std::invalid_argument("PenaltyParams: rcg.max_iters must be non-negative");
  if (!(rcg.armijo_c1 > 0.0 && rcg.armijo_c1 < 1.0)) throw std::invalid_argument("PenaltyParams: armijo c1");
  if (!(rcg.backtrack > 0.0 && rcg.backtrack < 1.0)) throw std::invalid_argument("PenaltyParams: backtrack");
}

namespace {

double power_term(double power, double p_max, PenaltyForm form) {
  const double over = power - p_max;
  return form == PenaltyForm::kLinear ? over : std::max(0.0, over);
}

double inner_re(const CMatrix& a, const CMatrix& b) { return (a.conjugate().cwiseProduct(b)).sum().real(); }

}  // namespace

double penalty_objective(const CMatrix& f_rf, const CMatrix& f_bb, const CMatrix& target, double mu,
                         double p_max, PenaltyForm form) {
  const CMatrix f = f_rf * f_bb;
  return (target - f).squaredNorm() + mu * power_term(f.squaredNorm(), p_max, form);
}

CMatrix euclidean_grad(const CMatrix& f_rf, const CMatrix& f_bb, const CMatrix& target, double mu) {
  return euclidean_grad(f_rf, f_bb, target, mu, 0.0, PenaltyForm::kLinear);
}

CMatrix euclidean_grad(const CMatrix& f_rf, const CMatrix& f_bb, const CMatrix& target, double mu,
                       double p_max, PenaltyForm form) {
  double weight = 1.0 + mu;
  if (form == PenaltyForm::kHinge && (f_rf * f_bb).squaredNorm() <= p_max) weight = 1.0;
  const CMatrix bbh = f_bb * f_bb.adjoint();
  return 2.0 * (weight * f_rf * bbh - target * f_bb.adjoint());
}

CMatrix riemannian_grad(const CMatrix& euclid, const CMatrix& point) {
  const RMatrix radial = euclid.cwiseProduct(point.conjugate()).real();
  return euclid - radial.cast<cdouble>().cwiseProduct(point);
}

CMatrix retract(const CMatrix& point, const CMatrix& step) {
  CMatrix out = point + step;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      const double r = std::abs(out(i, j));
      if (r > 0.0 && std::isfinite(r)) {
        out(i, j) /= r;
      } else {
        const double r0 = std::abs(point(i, j));
        out(i, j) = r0 > 0.0 ? point(i, j) / r0 : cdouble(1.0, 0.0);
      }
    }
  }
  return out;
}

RcgResult rcg_solve(const CMatrix& target, const CMatrix& f_bb, const CMatrix& f_rf_init,
                    double mu, const RcgParams& params, double p_max, PenaltyForm form) {
  auto objective = [&](const CMatrix& x) {
    const double v = penalty_objective(x, f_bb, target, mu, p_max, form);
    if (!std::isfinite(v)) throw std::overflow_error("rcg_solve: objective is not finite");
    return v;
  };
  auto tangent = [](const CMatrix& v, const CMatrix& x) { return riemannian_grad(v, x); };

  RcgResult res;
  CMatrix x = retract(f_rf_init, CMatrix::Zero(f_rf_init.rows(), f_rf_init.cols()));
  double f = objective(x);
  CMatrix g = riemannian_grad(euclidean_grad(x, f_bb, target, mu, p_max, form), x);
  CMatrix d = -g;
  const int restart = params.restart_period > 0 ? params.restart_period : static_cast<int>(x.rows());
  // Curvature of the quadratic part sets the first trial step.
  const double lip = 2.0 * (1.0 + mu) * std::max(1e-300, (f_bb * f_bb.adjoint()).norm());
  double alpha_prev = 0.5 / lip;
  res.objective_trace.push_back(f);

  int since_restart = 0;
  for (int it = 0; it < params.max_iters; ++it) {
    const double gn = g.norm();
    if (gn <= params.grad_tol * (1.0 + std::abs(f))) {
      res.converged = true;
      break;
    }
    double slope = inner_re(g, d);
    if (slope >= 0.0 || since_restart >= restart) {
      d = -g;
      slope = -gn * gn;
      since_restart = 0;
    }
    double alpha = 2.0 * alpha_prev;
    CMatrix x_new;
    double f_new = f;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      x_new = retract(x, alpha * d);
      f_new = objective(x_new);
      if (f_new <= f + params.armijo_c1 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= params.backtrack;
    }
    if (!accepted) {
      // No decrease along the direction at machine resolution.
      res.converged = gn <= 1e-3 * (1.0 + std::abs(f));
      break;
    }
    const CMatrix g_new = riemannian_grad(euclidean_grad(x_new, f_bb, target, mu, p_max, form), x_new);
    const CMatrix g_old_t = tangent(g, x_new);
    const CMatrix d_t = tangent(d, x_new);
    const double beta = std::max(0.0, inner_re(g_new, g_new - g_old_t) / std::max(1e-300, gn * gn));
    d = -g_new + beta * d_t;
    x = std::move(x_new);
    g = g_new;
    f = f_new;
    alpha_prev = alpha;
    ++since_restart;
    ++res.iterations;
    res.objective_trace.push_back(f);
  }
  res.f_rf = std::move(x);
  res.objective = f;
  res.grad_norm = g.norm();
  if (!res.converged) res.converged = res.grad_norm <= params.grad_tol * (1.0 + std::abs(f));
  return res;
}

double condition_number(const CMatrix& f_rf) {
  if (f_rf.cols() == 0) return 1.0;
  Eigen::JacobiSVD<CMatrix> svd(f_rf);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  return smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
}

CMatrix ls_baseband(const CMatrix& f_rf, const CMatrix& target) {
  if (f_rf.rows() != target.rows()) throw std::invalid_argument("ls_baseband: row mismatch");
  if (f_rf.cols() > f_rf.rows()) {
    throw RankDeficientError("ls_baseband: more RF chains than antennas", std::numeric_limits<double>::infinity());
  }
  Eigen::JacobiSVD<CMatrix> svd(f_rf, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double cond = s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
  if (!(cond < 1e12)) {
    std::ostringstream msg;
    msg << "ls_baseband: analog matrix is rank deficient (condition number " << cond << ")";
    throw RankDeficientError(msg.str(), cond);
  }
  return svd.solve(target);
}

CMatrix svd_phase_init(const CMatrix& target, int n_rfc) {
  const Eigen::Index n = target.rows();
  Eigen::JacobiSVD<CMatrix> svd(target, Eigen::ComputeFullU);
  CMatrix init(n, n_rfc);
  for (int j = 0; j < n_rfc; ++j) {
    const Eigen::Index col = j % n;
    for (Eigen::Index i = 0; i < n; ++i) {
      const cdouble u = svd.matrixU()(i, col);
      const double r = std::abs(u);
      init(i, j) = r > 0.0 ? u / r : cdouble(1.0, 0.0);
    }
  }
  return init;
}

namespace {

CVector unit_phase(const CVector& v) {
  CVector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double r = std::abs(v(i));
    out(i) = r > 0.0 ? v(i) / r : cdouble(1.0, 0.0);
  }
  return out;
}

double ls_fit_error(const CMatrix& f_rf, const CMatrix& target) {
  try {
    return (target - f_rf * ls_baseband(f_rf, target)).norm();
  } catch (const RankDeficientError&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

CMatrix subspace_search_init(const CMatrix& target, int n_rfc, int starts, std::uint64_t seed) {
  const Eigen::Index n = target.rows();
  Eigen::JacobiSVD<CMatrix> svd(target, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(0) > 0.0 && sv(i) > 1e-10 * sv(0)) ++rank;
  }
  if (rank == 0) return svd_phase_init(target, n_rfc);
  const CMatrix u = svd.matrixU().leftCols(rank);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  struct Candidate {
    double score;
    CVector x;
  };
  std::vector<Candidate> cands;
  for (int s = 0; s < starts; ++s) {
    CVector c(rank);
    for (Eigen::Index i = 0; i < rank; ++i) c(i) = cdouble(gauss(rng), gauss(rng));
    CVector x = unit_phase(u * c);
    for (int it = 0; it < 1000; ++it) {
      CVector next = unit_phase(u * (u.adjoint() * x));
      const double step = (next - x).norm();
      x = std::move(next);
      if (step < 1e-12 * std::sqrt(static_cast<double>(n))) break;
    }
    cands.push_back({(u.adjoint() * x).squaredNorm() / static_cast<double>(n), x});
  }
  std::stable_sort(cands.begin(), cands.end(),
                   [](const Candidate& a, const Candidate& b) { return a.score > b.score; });

  CMatrix picked(n, 0);
  for (const auto& cand : cands) {
    if (picked.cols() == n_rfc) break;
    CVector resid = cand.x;
    if (picked.cols() > 0) resid -= picked * picked.colPivHouseholderQr().solve(cand.x);
    if (resid.squaredNorm() < 0.05 * static_cast<double>(n)) continue;
    picked.conservativeResize(n, picked.cols() + 1);
    picked.col(picked.cols() - 1) = cand.x;
  }
  // Not enough distinct vectors: fill from the singular-vector phases.
  const CMatrix fill = svd_phase_init(target, n_rfc);
  for (int j = 0; picked.cols() < n_rfc; ++j) {
    picked.conservativeResize(n, picked.cols() + 1);
    picked.col(picked.cols() - 1) = fill.col(j % n_rfc);
  }
  return picked;
}

HybridDesign design_hybrid(const CMatrix& target, const ScenarioConfig& cfg,
                           const PenaltyParams& params) {
  CMatrix init;
  switch (params.init) {
    case AnalogInit::kSvdPhase:
      init = svd_phase_init(target, cfg.n_rfc);
      break;
    case AnalogInit::kSubspaceSearch:
      init = subspace_search_init(target, cfg.n_rfc, params.search_starts * cfg.n_rfc,
                                  params.search_seed);
      break;
    case AnalogInit::kBestOf: {
      CMatrix a = svd_phase_init(target, cfg.n_rfc);
      CMatrix b = subspace_search_init(target, cfg.n_rfc, params.search_starts * cfg.n_rfc,
                                       params.search_seed);
      init = ls_fit_error(b, target) < ls_fit_error(a, target) ? std::move(b) : std::move(a);
      break;
    }
  }
  return design_hybrid(target, init, cfg.max_tx_power, cfg.tol_factorization, cfg.tol_power,
                       params);
}

HybridDesign design_hybrid(const CMatrix& target, const CMatrix& f_rf_init, double p_max,
                           double tol_change, double tol_power, const PenaltyParams& params) {
  params.validate();
  if (f_rf_init.rows() != target.rows()) throw std::invalid_argument("design_hybrid: shape mismatch");
  const double target_norm = target.norm();
  auto rel_error = [&](const CMatrix& x, const CMatrix& b) {
    const double e = (target - x * b).norm();
    return target_norm > 0.0 ? e / target_norm : e;
  };

  HybridDesign out;
  CMatrix x = retract(f_rf_init, CMatrix::Zero(f_rf_init.rows(), f_rf_init.cols()));
  CMatrix b = ls_baseband(x, target);
  double mu = params.mu0;
  bool power_ok = false;

  for (int round = 0; round < params.max_rounds; ++round) {
    HybridRound rec;
    rec.round = round;
    rec.mu = mu;
    double err = rel_error(x, b);
    for (int alt = 0; alt < params.max_alternations; ++alt) {
      const RcgResult r = rcg_solve(target, b, x, mu, params.rcg, p_max, params.form);
      x = r.f_rf;
      b = ls_baseband(x, target);
      rec.rcg_iterations += r.iterations;
      ++rec.alternations;
      const double next = rel_error(x, b);
      const double change = std::abs(err - next);
      err = next;
      if (change <= tol_change * std::max(err, 1e-12) || err <= 1e-10) break;
    }
    rec.error = err;
    rec.overshoot = (x * b).squaredNorm() - p_max;
    out.rcg_iterations += rec.rcg_iterations;
    out.rounds.push_back(rec);
    if (rec.overshoot <= tol_power * p_max) {
      power_ok = true;
      break;
    }
    mu /= params.decay;
  }

  const double power = (x * b).squaredNorm();
  if (power > p_max) b *= std::sqrt(p_max / power);
  out.continuation_ok = power_ok;
  out.beamformer.analog = std::move(x);
  out.beamformer.baseband = std::move(b);
  out.factorization_error = rel_error(out.beamformer.analog, out.beamformer.baseband);
  return out;
}

}  // namespace beamkit
