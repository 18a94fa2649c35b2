#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "beamkit/errors.hpp"
#include "beamkit/sdp.hpp"

namespace beamkit::sdp {

void SdrProblem::validate() const {
  const int m = static_cast<int>(q_list.size());
  const int l = static_cast<int>(steer_list.size());
  if (dim < 1) throw std::invalid_argument("SdrProblem: dim must be positive");
  if (n_blocks < m) throw std::invalid_argument("SdrProblem: need at least one block per user");
  if (static_cast<int>(tau.size()) != m) throw std::invalid_argument("SdrProblem: tau size");
  if (static_cast<int>(gamma.size()) != l) throw std::invalid_argument("SdrProblem: gamma size");
  if (!(p_max > 0.0)) throw std::invalid_argument("SdrProblem: p_max must be positive");
  if (!(lambda_price >= 0.0)) throw std::invalid_argument("SdrProblem: price must be non-negative");
  if (!(price_weight >= 0.0)) throw std::invalid_argument("SdrProblem: price weight must be non-negative");
  for (const auto& q : q_list) {
    if (q.rows() != dim || q.cols() != dim) throw std::invalid_argument("SdrProblem: Q size");
    const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
    if ((q - q.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
      throw std::invalid_argument("SdrProblem: Q not Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> es(q, Eigen::EigenvaluesOnly);
    if (es.eigenvalues()(0) < -1e-10 * scale) throw std::invalid_argument("SdrProblem: Q not PSD");
  }
  for (const auto& a : steer_list) {
    if (a.size() != dim) throw std::invalid_argument("SdrProblem: steering vector size");
  }
  for (double t : tau) {
    if (!(t >= 0.0)) throw std::invalid_argument("SdrProblem: tau must be non-negative");
  }
  for (double g : gamma) {
    if (!(g >= 0.0)) throw std::invalid_argument("SdrProblem: gamma must be non-negative");
  }
  if (channel_rows && (channel_rows->rows() != m || channel_rows->cols() != dim)) {
    throw std::invalid_argument("SdrProblem: channel rows shape");
  }
  if (channel_rows && !(noise > 0.0)) throw std::invalid_argument("SdrProblem: noise must be positive");
}

double sdr_objective(const SdrProblem& problem, const std::vector<CMatrix>& blocks) {
  double f = 0.0;
  double power = 0.0;
  for (std::size_t m = 0; m < problem.q_list.size(); ++m) {
    const double s = (problem.q_list[m].cwiseProduct(blocks[m].transpose())).sum().real();
    f += std::log2(1.0 + std::max(0.0, s));
  }
  for (const auto& t : blocks) power += t.trace().real();
  return f - problem.lambda_price * problem.price_weight * power;
}

namespace {

// Problem restricted to the span of the Q ranges and steering vectors.
struct Reduced {
  CMatrix basis;  // N_t x r, orthonormal columns
  std::vector<CMatrix> q;
  std::vector<CMatrix> h;  // exact h_m h_m^H, with channel rows only
  std::vector<CVector> a;
  std::vector<bool> q_rank_one;
  int r = 0;
};

Reduced reduce(const SdrProblem& p) {
  std::vector<CVector> gens;
  std::vector<bool> rank_one;
  for (const auto& q : p.q_list) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(q);
    const double top = std::max(0.0, es.eigenvalues().maxCoeff());
    int count = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      if (es.eigenvalues()(i) > 1e-12 * top && top > 0.0) {
        gens.push_back(es.eigenvectors().col(i));
        ++count;
      }
    }
    rank_one.push_back(count <= 1);
  }
  for (const auto& a : p.steer_list) {
    const double n = a.norm();
    if (n > 0.0) gens.push_back(a / n);
  }
  Reduced red;
  red.q_rank_one = rank_one;
  if (gens.empty()) {
    red.basis = CMatrix::Zero(p.dim, 0);
  } else {
    CMatrix s(p.dim, static_cast<Eigen::Index>(gens.size()));
    for (std::size_t i = 0; i < gens.size(); ++i) s.col(static_cast<Eigen::Index>(i)) = gens[i];
    Eigen::JacobiSVD<CMatrix> svd(s, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (sv(i) > 1e-10 * sv(0)) ++rank;
    }
    red.basis = svd.matrixU().leftCols(rank);
  }
  red.r = static_cast<int>(red.basis.cols());
  for (const auto& q : p.q_list) {
    CMatrix qr = red.basis.adjoint() * q * red.basis;
    red.q.push_back(0.5 * (qr + qr.adjoint()));
  }
  for (const auto& a : p.steer_list) red.a.push_back(red.basis.adjoint() * a);
  if (p.channel_rows) {
    for (Eigen::Index m = 0; m < p.channel_rows->rows(); ++m) {
      const CVector hv = red.basis.adjoint() * p.channel_rows->row(m).adjoint();
      red.h.push_back(hv * hv.adjoint());
    }
  }
  return red;
}

double trace_inner(const CMatrix& a, const CMatrix& b) {
  return (a.cwiseProduct(b.transpose())).sum().real();
}

// Scalar features an atom contributes to the objective.
struct Atom {
  std::vector<CMatrix> blocks;
  RVector s;  // Tr(Q_m T_m)
  double p = 0.0;
};

Atom make_atom(std::vector<CMatrix> blocks, const Reduced& red) {
  Atom at;
  const int m = static_cast<int>(red.q.size());
  at.s.resize(m);
  for (int i = 0; i < m; ++i) at.s(i) = std::max(0.0, trace_inner(red.q[i], blocks[i]));
  for (const auto& b : blocks) at.p += b.trace().real();
  at.blocks = std::move(blocks);
  return at;
}

double phi(const RVector& s, double p, double nu) {
  double f = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) f += std::log2(1.0 + std::max(0.0, s(i)));
  return f - nu * p;
}

// Exact maximization of t -> phi(s + t ds, p + t dp) on [0, t_max] (concave).
double line_search(const RVector& s, double /*p*/, const RVector& ds, double dp, double nu,
                   double t_max) {
  auto deriv = [&](double t) {
    double d = -nu * dp;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      d += ds(i) / (std::log(2.0) * (1.0 + std::max(0.0, s(i) + t * ds(i))));
    }
    return d;
  };
  if (deriv(0.0) <= 0.0) return 0.0;
  if (deriv(t_max) >= 0.0) return t_max;
  double lo = 0.0;
  double hi = t_max;
  for (int it = 0; it < 100 && hi - lo > 1e-15 * t_max; ++it) {
    const double mid = 0.5 * (lo + hi);
    (deriv(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Fully-corrective step: maximize phi over convex weights of the atoms,
// via away-step Frank-Wolfe on the simplex.
void reoptimize_weights(const std::vector<Atom>& atoms, RVector& w, double nu) {
  const Eigen::Index n = static_cast<Eigen::Index>(atoms.size());
  const Eigen::Index m = atoms.front().s.size();
  RMatrix smat(m, n);
  RVector pvec(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    smat.col(j) = atoms[j].s;
    pvec(j) = atoms[j].p;
  }
  for (int it = 0; it < 2000; ++it) {
    const RVector s = smat * w;
    const double p = pvec.dot(w);
    RVector grad_s(m);
    for (Eigen::Index i = 0; i < m; ++i) grad_s(i) = 1.0 / (std::log(2.0) * (1.0 + s(i)));
    const RVector g = smat.transpose() * grad_s - nu * pvec;
    Eigen::Index best = 0;
    g.maxCoeff(&best);
    Eigen::Index worst = -1;
    double worst_val = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (w(j) > 0.0 && g(j) < worst_val) {
        worst_val = g(j);
        worst = j;
      }
    }
    const double cur = g.dot(w);
    const double fw_gap = g(best) - cur;
    const double away_gap = cur - worst_val;
    const double f = phi(s, p, nu);
    if (std::max(fw_gap, away_gap) <= 1e-12 * (1.0 + std::abs(f))) break;
    if (fw_gap >= away_gap) {
      const RVector ds = smat.col(best) - s;
      const double dp = pvec(best) - p;
      const double t = line_search(s, p, ds, dp, nu, 1.0);
      if (t <= 0.0) break;
      w *= (1.0 - t);
      w(best) += t;
    } else {
      const double aw = w(worst);
      const double t_max = aw / (1.0 - aw);
      const RVector ds = s - smat.col(worst);
      const double dp = p - pvec(worst);
      const double t = line_search(s, p, ds, dp, nu, t_max);
      if (t <= 0.0) break;
      w *= (1.0 + t);
      w(worst) -= t;
      if (t >= t_max * (1.0 - 1e-12)) w(worst) = 0.0;
    }
    w = w.cwiseMax(0.0);
    w /= w.sum();
  }
}

// Up to four tangent points on each side of s, nearest first.
std::vector<double> nearest_cuts(std::vector<double> points, double s) {
  std::sort(points.begin(), points.end());
  const auto mid = std::lower_bound(points.begin(), points.end(), s);
  const auto lo = mid - std::min<std::ptrdiff_t>(4, mid - points.begin());
  const auto hi = mid + std::min<std::ptrdiff_t>(4, points.end() - mid);
  return std::vector<double>(lo, hi);
}

// SINR floor m as sum_n Tr(C_n T_n) >= 1. With channel rows the interference
// of the other blocks enters exactly; otherwise the frozen Q_m is used.
std::vector<CMatrix> sinr_coeffs(const SdrProblem& p, const Reduced& red, int m, int k) {
  std::vector<CMatrix> c(k);
  if (p.channel_rows) {
    for (int n = 0; n < k; ++n) {
      c[n] = n == m ? CMatrix(red.h[m] / (p.tau[m] * p.noise)) : CMatrix(-red.h[m] / p.noise);
    }
  } else {
    c[m] = red.q[m] / p.tau[m];
  }
  return c;
}

std::string floor_label(int index, int m_users) {
  if (index < m_users) return "sinr[" + std::to_string(index) + "]";
  return "beampattern[" + std::to_string(index - m_users) + "]";
}

// Maximizes the smallest relative floor slack u at power p_max. Returns the
// optimal blocks; throws when u* < 1.
std::vector<CMatrix> feasibility_phase(const SdrProblem& p, const Reduced& red,
                                       const IpmSettings& ipm) {
  const int m_users = static_cast<int>(p.q_list.size());
  const int k = p.n_blocks;
  const int r = red.r;

  LinearSdp lp;
  lp.block_dims.assign(k, r);
  lp.block_dims.push_back(1);  // u
  lp.cost.assign(k + 1, CMatrix());
  lp.cost[k] = CMatrix::Identity(1, 1);

  std::vector<int> floor_index;
  for (int m = 0; m < m_users; ++m) {
    if (p.tau[m] <= 0.0) continue;
    Constraint c;
    c.coeffs = sinr_coeffs(p, red, m, k);
    c.coeffs.push_back(-CMatrix::Identity(1, 1));
    c.sense = Sense::kGreaterEqual;
    c.label = floor_label(m, m_users);
    lp.constraints.push_back(std::move(c));
    floor_index.push_back(m);
  }
  for (std::size_t l = 0; l < red.a.size(); ++l) {
    if (p.gamma[l] <= 0.0) continue;
    Constraint c;
    c.coeffs.assign(k + 1, CMatrix());
    const CMatrix aa = red.a[l] * red.a[l].adjoint() / p.gamma[l];
    for (int n = 0; n < k; ++n) c.coeffs[n] = aa;
    c.coeffs[k] = -CMatrix::Identity(1, 1);
    c.sense = Sense::kGreaterEqual;
    c.label = floor_label(m_users + static_cast<int>(l), m_users);
    lp.constraints.push_back(std::move(c));
    floor_index.push_back(m_users + static_cast<int>(l));
  }
  if (lp.constraints.empty()) return std::vector<CMatrix>(k, CMatrix::Zero(r, r));

  Constraint power;
  power.coeffs.assign(k + 1, CMatrix());
  for (int n = 0; n < k; ++n) power.coeffs[n] = CMatrix::Identity(r, r);
  power.sense = Sense::kLessEqual;
  power.rhs = p.p_max;
  power.label = "power";
  lp.constraints.push_back(std::move(power));

  // Each floor alone: its largest attainable ratio at full power.
  std::vector<double> single(floor_index.size());
  for (std::size_t i = 0; i < floor_index.size(); ++i) {
    const int idx = floor_index[i];
    if (idx < m_users) {
      if (p.channel_rows) {
        single[i] = p.p_max * red.h[idx].trace().real() / (p.tau[idx] * p.noise);
      } else {
        Eigen::SelfAdjointEigenSolver<CMatrix> es(red.q[idx], Eigen::EigenvaluesOnly);
        single[i] = p.p_max * es.eigenvalues().maxCoeff() / p.tau[idx];
      }
    } else {
      const int l = idx - m_users;
      single[i] = p.p_max * red.a[l].squaredNorm() / p.gamma[l];
    }
  }

  const CovariancePool pool = solve_linear_sdp(lp, ipm);
  const double u = pool.blocks[k](0, 0).real();
  if (u < 1.0 - 1e-7) {
    const auto it = std::min_element(single.begin(), single.end());
    const int idx = floor_index[static_cast<std::size_t>(it - single.begin())];
    std::vector<double> violation;
    for (std::size_t i = 0; i < floor_index.size(); ++i) violation.push_back(1.0 - u);
    std::ostringstream msg;
    msg << "QoS floors unreachable at the power budget (best common ratio " << u
        << "); binding constraint " << floor_label(idx, m_users);
    if (idx < m_users) {
      msg << " (SINR floor of user " << idx << ")";
    } else {
      msg << " (beampattern floor of target " << idx - m_users << ")";
    }
    throw InfeasibleError(msg.str(), idx, floor_label(idx, m_users), violation);
  }
  return std::vector<CMatrix>(pool.blocks.begin(), pool.blocks.begin() + k);
}

// Moves every component of the user blocks that does not reach the user's
// rank-one Q into the target blocks, leaving the objective, the beampattern
// sums and the total power unchanged; drops it when no floor needs it.
void purify(const SdrProblem& p, const Reduced& red, std::vector<CMatrix>& blocks) {
  const int m_users = static_cast<int>(p.q_list.size());
  const int k = p.n_blocks;
  const int r = red.r;
  if (r == 0) return;
  const int spare = k - m_users;

  std::vector<CMatrix> purified = blocks;
  CMatrix residual = CMatrix::Zero(r, r);
  for (int m = 0; m < m_users; ++m) {
    if (!red.q_rank_one[m]) continue;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(red.q[m]);
    const CVector q = es.eigenvectors().col(r - 1);
    const CVector tq = blocks[m] * q;
    const double qtq = q.dot(tq).real();
    if (qtq > 0.0) {
      purified[m] = tq * tq.adjoint() / qtq;
    } else {
      purified[m] = CMatrix::Zero(r, r);
    }
    residual += blocks[m] - purified[m];
  }
  for (int n = m_users; n < k; ++n) residual += blocks[n];
  residual = 0.5 * (residual + residual.adjoint());

  // Beampattern floors without any residual.
  bool floors_hold = true;
  for (std::size_t l = 0; l < red.a.size(); ++l) {
    double g = 0.0;
    for (int m = 0; m < m_users; ++m) g += red.a[l].dot(purified[m] * red.a[l]).real();
    if (g < p.gamma[l] * (1.0 + 1e-9)) floors_hold = false;
  }
  if (floors_hold) {
    for (int n = m_users; n < k; ++n) purified[n] = CMatrix::Zero(r, r);
    blocks = std::move(purified);
    return;
  }
  if (spare == 0) return;

  Eigen::SelfAdjointEigenSolver<CMatrix> es(residual);
  for (int n = m_users; n < k; ++n) purified[n] = CMatrix::Zero(r, r);
  int slot = 0;
  for (int i = r - 1; i >= 0; --i) {
    const double lam = es.eigenvalues()(i);
    if (lam <= 0.0) continue;
    const CVector v = es.eigenvectors().col(i);
    const int n = m_users + std::min(slot, spare - 1);
    purified[n] += lam * v * v.adjoint();
    ++slot;
  }
  blocks = std::move(purified);
}

}  // namespace

CovariancePool solve_sdr(const SdrProblem& problem, const SdrSettings& settings) {
  problem.validate();
  const int m_users = static_cast<int>(problem.q_list.size());
  const int k = problem.n_blocks;
  const Reduced red = reduce(problem);
  const int r = red.r;
  const double nu = problem.lambda_price * problem.price_weight;

  auto lift = [&](const std::vector<CMatrix>& reduced_blocks) {
    std::vector<CMatrix> full;
    full.reserve(reduced_blocks.size());
    for (const auto& b : reduced_blocks) {
      CMatrix t = red.basis * b * red.basis.adjoint();
      full.push_back(0.5 * (t + t.adjoint()));
    }
    return full;
  };

  CovariancePool out;
  if (r == 0) {
    // Nothing to steer towards; zero power is optimal and feasible only
    // without positive floors.
    for (int m = 0; m < m_users; ++m) {
      if (problem.tau[m] > 0.0) {
        throw InfeasibleError("user " + std::to_string(m) + " has a zero channel",
                              m, floor_label(m, m_users));
      }
    }
    out.blocks.assign(k, CMatrix::Zero(problem.dim, problem.dim));
    out.converged = true;
    out.objective_value = 0.0;
    return out;
  }

  std::vector<Atom> atoms;
  atoms.push_back(make_atom(feasibility_phase(problem, red, settings.ipm), red));
  RVector w = RVector::Ones(1);

  // Linear oracle: constraints are fixed, only the cost changes.
  LinearSdp lmo;
  lmo.block_dims.assign(k, r);
  for (int m = 0; m < m_users; ++m) {
    if (problem.tau[m] <= 0.0) continue;
    Constraint c;
    c.coeffs = sinr_coeffs(problem, red, m, k);
    c.sense = Sense::kGreaterEqual;
    c.rhs = 1.0;
    lmo.constraints.push_back(std::move(c));
  }
  for (std::size_t l = 0; l < red.a.size(); ++l) {
    if (problem.gamma[l] <= 0.0) continue;
    Constraint c;
    const CMatrix aa = red.a[l] * red.a[l].adjoint();
    c.coeffs.assign(k, aa);
    c.sense = Sense::kGreaterEqual;
    c.rhs = problem.gamma[l];
    lmo.constraints.push_back(std::move(c));
  }
  {
    Constraint c;
    c.coeffs.assign(k, CMatrix::Identity(r, r));
    c.sense = Sense::kLessEqual;
    c.rhs = problem.p_max;
    lmo.constraints.push_back(std::move(c));
  }

  // Tangent points of log2(1 + s_m) for the cutting-plane corrective step.
  std::vector<std::vector<double>> cut_points(m_users);
  if (settings.cut_steps) {
    for (int m = 0; m < m_users; ++m) {
      Eigen::SelfAdjointEigenSolver<CMatrix> es(red.q[m], Eigen::EigenvaluesOnly);
      const double s_max = problem.p_max * std::max(0.0, es.eigenvalues().maxCoeff());
      cut_points[m].push_back(0.0);
      for (int i = 0; i <= 12 && s_max > 0.0; ++i) cut_points[m].push_back(s_max * std::pow(0.5, i));
      cut_points[m].push_back(atoms.front().s(m));
    }
  }
  auto add_cut_points = [&](const RVector& s) {
    for (int m = 0; m < m_users; ++m) {
      const bool known = std::any_of(cut_points[m].begin(), cut_points[m].end(), [&](double c) {
        return std::abs(c - s(m)) <= 1e-9 * (1.0 + s(m));
      });
      if (!known) cut_points[m].push_back(s(m));
    }
  };

  auto mix = [&]() {
    RVector s = RVector::Zero(m_users);
    for (std::size_t j = 0; j < atoms.size(); ++j) s += w(static_cast<Eigen::Index>(j)) * atoms[j].s;
    return s;
  };

  // max sum_m t_m - nu sum_n Tr(T_n) with t_m under every tangent of
  // log2(1 + sigma_m), sigma_m = Tr(Q_m T_m), over the same constraints.
  auto cut_model_atom = [&]() {
    LinearSdp model = lmo;
    const int base = k;
    const RVector s_now = mix();
    for (int m = 0; m < 2 * m_users; ++m) model.block_dims.push_back(1);
    model.cost.assign(k + 2 * m_users, CMatrix());
    for (int n = 0; n < k; ++n) model.cost[n] = -nu * CMatrix::Identity(r, r);
    for (int m = 0; m < m_users; ++m) model.cost[base + m_users + m] = CMatrix::Identity(1, 1);
    for (auto& c : model.constraints) c.coeffs.resize(k + 2 * m_users);
    for (int m = 0; m < m_users; ++m) {
      Constraint link;
      link.coeffs.assign(k + 2 * m_users, CMatrix());
      link.coeffs[m] = red.q[m];
      link.coeffs[base + m] = -CMatrix::Identity(1, 1);
      link.sense = Sense::kEqual;
      model.constraints.push_back(std::move(link));
      for (double c0 : nearest_cuts(cut_points[m], s_now(m))) {
        const double slope = 1.0 / (std::log(2.0) * (1.0 + c0));
        Constraint cut;
        cut.coeffs.assign(k + 2 * m_users, CMatrix());
        cut.coeffs[base + m_users + m] = CMatrix::Identity(1, 1);
        cut.coeffs[base + m] = -slope * CMatrix::Identity(1, 1);
        cut.sense = Sense::kLessEqual;
        cut.rhs = std::log2(1.0 + c0) - slope * c0;
        model.constraints.push_back(std::move(cut));
      }
    }
    CovariancePool sol = solve_linear_sdp(model, settings.ipm);
    sol.blocks.resize(k);
    return make_atom(std::move(sol.blocks), red);
  };

  // Adds an atom at zero weight, re-optimizes the weights and drops atoms
  // that carry none.
  auto absorb = [&](Atom cand) {
    atoms.push_back(std::move(cand));
    w.conservativeResize(static_cast<Eigen::Index>(atoms.size()));
    w(w.size() - 1) = 0.0;
    reoptimize_weights(atoms, w, nu);
    std::vector<Atom> kept;
    std::vector<double> kept_w;
    for (std::size_t j = 0; j < atoms.size(); ++j) {
      if (w(static_cast<Eigen::Index>(j)) > 1e-14) {
        kept.push_back(std::move(atoms[j]));
        kept_w.push_back(w(static_cast<Eigen::Index>(j)));
      }
    }
    atoms = std::move(kept);
    w = Eigen::Map<RVector>(kept_w.data(), static_cast<Eigen::Index>(kept_w.size()));
    w /= w.sum();
  };

  int iter = 0;
  double gap = std::numeric_limits<double>::infinity();
  double f = 0.0;
  for (; iter < settings.max_iters; ++iter) {
    RVector s = RVector::Zero(m_users);
    double p = 0.0;
    for (std::size_t j = 0; j < atoms.size(); ++j) {
      s += w(static_cast<Eigen::Index>(j)) * atoms[j].s;
      p += w(static_cast<Eigen::Index>(j)) * atoms[j].p;
    }
    f = phi(s, p, nu);
    out.objective_trace.push_back(f);

    lmo.cost.assign(k, -nu * CMatrix::Identity(r, r));
    RVector g(m_users);
    for (int m = 0; m < m_users; ++m) {
      g(m) = 1.0 / (std::log(2.0) * (1.0 + s(m)));
      lmo.cost[m] += g(m) * red.q[m];
    }
    const CovariancePool vertex = solve_linear_sdp(lmo, settings.ipm);
    Atom cand = make_atom(vertex.blocks, red);
    const double lin_new = g.dot(cand.s) - nu * cand.p;
    const double lin_cur = g.dot(s) - nu * p;
    gap = lin_new - lin_cur;
    if (settings.trace != nullptr) {
      *settings.trace << "{\"fw_iter\":" << iter << ",\"objective\":" << f << ",\"gap\":" << gap
                      << ",\"atoms\":" << atoms.size() << "}\n";
    }
    if (gap <= settings.fw_tol * (1.0 + std::abs(f))) break;

    absorb(std::move(cand));
    if (settings.cut_steps) {
      add_cut_points(s);
      add_cut_points(mix());
      absorb(cut_model_atom());
    }
  }

  std::vector<CMatrix> blocks(k, CMatrix::Zero(r, r));
  for (std::size_t j = 0; j < atoms.size(); ++j) {
    for (int n = 0; n < k; ++n) blocks[n] += w(static_cast<Eigen::Index>(j)) * atoms[j].blocks[n];
  }
  purify(problem, red, blocks);

  out.blocks = lift(blocks);
  out.objective_value = sdr_objective(problem, out.blocks);
  out.fw_gap = gap;
  out.iterations = iter;
  out.converged = gap <= settings.fw_tol * (1.0 + std::abs(f));
  double total = 0.0;
  for (const auto& b : out.blocks) total += b.trace().real();
  for (int m = 0; m < m_users; ++m) {
    double sv = trace_inner(problem.q_list[m], out.blocks[m]);
    if (problem.channel_rows) {
      const CVector hv = problem.channel_rows->row(m).adjoint();
      const CMatrix hh = hv * hv.adjoint();
      double interference = problem.noise;
      for (int n = 0; n < k; ++n) {
        if (n != m) interference += trace_inner(hh, out.blocks[n]);
      }
      sv = trace_inner(hh, out.blocks[m]) / interference;
    }
    out.feasibility_residuals.push_back(problem.tau[m] > 0.0 ? sv / problem.tau[m] - 1.0 : sv);
  }
  for (std::size_t l = 0; l < problem.steer_list.size(); ++l) {
    double gl = 0.0;
    for (const auto& b : out.blocks) gl += problem.steer_list[l].dot(b * problem.steer_list[l]).real();
    out.feasibility_residuals.push_back(problem.gamma[l] > 0.0 ? gl / problem.gamma[l] - 1.0 : gl);
  }
  out.feasibility_residuals.push_back(1.0 - total / problem.p_max);
  return out;
}

ExtractionResult rank_one_extract(const CovariancePool& pool) {
  ExtractionResult res;
  if (pool.blocks.empty()) return res;
  const Eigen::Index n = pool.blocks.front().rows();
  CMatrix cols = CMatrix::Zero(n, static_cast<Eigen::Index>(pool.blocks.size()));
  for (std::size_t b = 0; b < pool.blocks.size(); ++b) {
    const CMatrix t = 0.5 * (pool.blocks[b] + pool.blocks[b].adjoint());
    const double tr = t.trace().real();
    if (t.cwiseAbs().maxCoeff() == 0.0 || tr <= 0.0) {
      res.rank_one_defect.push_back(0.0);
      continue;
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> es(t);
    const RVector& ev = es.eigenvalues();
    const double lmax = ev(n - 1);
    if (lmax <= 0.0) {
      res.rank_one_defect.push_back(0.0);
      continue;
    }
    // Maximal eigenspace, then the projection of the lowest coordinate axis
    // that has a nonzero component in it.
    Eigen::Index first = n - 1;
    while (first > 0 && ev(first - 1) >= lmax * (1.0 - 1e-9)) --first;
    const CMatrix v = es.eigenvectors().rightCols(n - first);
    CVector u = v.col(v.cols() - 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      const CVector proj = v * v.row(i).adjoint();
      if (proj.norm() > 1e-8) {
        u = proj / proj.norm();
        break;
      }
    }
    const double umax = u.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(u(i)) > 1e-12 * umax) {
        u *= std::conj(u(i)) / std::abs(u(i));
        u(i) = std::abs(u(i));
        break;
      }
    }
    cols.col(static_cast<Eigen::Index>(b)) = std::sqrt(lmax) * u;
    res.rank_one_defect.push_back(std::max(0.0, 1.0 - lmax / tr));
  }
  res.beamformer = DigitalBeamformer(std::move(cols));
  return res;
}

RepairResult repair_feasibility(const DigitalBeamformer& f, const SdrProblem& problem) {
  const int m_users = static_cast<int>(problem.q_list.size());
  const int l_targets = static_cast<int>(problem.steer_list.size());
  const int k = f.n_streams();
  if (f.n_tx() != problem.dim || k < m_users) {
    throw std::invalid_argument("repair_feasibility: beamformer shape does not match problem");
  }

  PowerAllocationProblem pa;
  pa.user_gains = RMatrix::Zero(m_users, k);
  pa.target_gains = RMatrix::Zero(l_targets, k);
  pa.column_power.resize(k);
  pa.tau = problem.tau;
  pa.gamma = problem.gamma;
  pa.p_max = problem.p_max;
  for (int n = 0; n < k; ++n) {
    const CVector col = f.columns.col(n);
    pa.column_power(n) = col.squaredNorm();
    if (problem.channel_rows) {
      for (int m = 0; m < m_users; ++m) {
        pa.user_gains(m, n) = std::norm(problem.channel_rows->row(m).dot(col.conjugate()));
      }
    }
    for (int l = 0; l < l_targets; ++l) {
      pa.target_gains(l, n) = std::norm(problem.steer_list[l].dot(col));
    }
  }
  if (problem.channel_rows) {
    pa.noise = problem.noise;
  } else {
    // Frozen-interference SINR: f_m^H Q_m f_m.
    pa.noise = 1.0;
    for (int m = 0; m < m_users; ++m) {
      const CVector col = f.columns.col(m);
      pa.user_gains(m, m) = col.dot(problem.q_list[m] * col).real();
    }
  }

  RepairResult res;
  res.beamformer = f;
  const RVector ones = RVector::Ones(k);
  res.violation = allocation_violation(pa, ones);
  auto worst = [](const std::vector<double>& v) {
    return v.empty() ? -1.0 : *std::max_element(v.begin(), v.end());
  };
  constexpr double kFeasTol = 1e-9;
  if (worst(res.violation) <= kFeasTol) return res;

  auto apply = [&](const RVector& scale) {
    DigitalBeamformer g = f;
    for (int n = 0; n < k; ++n) g.columns.col(n) *= std::sqrt(std::max(0.0, scale(n)));
    return g;
  };

  // Only the power budget is exceeded: common scaling.
  const double total = pa.column_power.sum();
  if (total > problem.p_max) {
    const RVector common = RVector::Constant(k, problem.p_max / total);
    const auto v = allocation_violation(pa, common);
    if (worst(v) <= kFeasTol) {
      res.beamformer = apply(common);
      res.violation = v;
      res.changed = true;
      return res;
    }
  }

  const PowerAllocation alloc = allocate_column_power(pa);
  res.beamformer = apply(alloc.scale);
  res.violation = alloc.violation;
  res.feasible = alloc.feasible;
  res.changed = true;
  return res;
}

DigitalBeamformer min_power_point(const SdrProblem& problem, const IpmSettings& ipm) {
  problem.validate();
  if (!problem.channel_rows) {
    throw std::invalid_argument("min_power_point: channel rows are required");
  }
  const CMatrix& rows = *problem.channel_rows;
  const int m_users = static_cast<int>(rows.rows());
  const int k = problem.n_blocks;

  CMatrix gens(problem.dim, m_users + static_cast<Eigen::Index>(problem.steer_list.size()));
  for (int m = 0; m < m_users; ++m) gens.col(m) = rows.row(m).adjoint();
  for (std::size_t l = 0; l < problem.steer_list.size(); ++l) {
    gens.col(m_users + static_cast<Eigen::Index>(l)) = problem.steer_list[l];
  }
  Eigen::JacobiSVD<CMatrix> svd(gens, Eigen::ComputeThinU);
  int rank = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    if (svd.singularValues()(i) > 1e-10 * svd.singularValues()(0)) ++rank;
  }
  const CMatrix basis = svd.matrixU().leftCols(rank);

  LinearSdp lp;
  lp.block_dims.assign(k, rank);
  lp.cost.assign(k, -CMatrix::Identity(rank, rank));
  for (int m = 0; m < m_users; ++m) {
    if (problem.tau[m] <= 0.0) continue;
    const CVector h = basis.adjoint() * rows.row(m).adjoint();
    const CMatrix hh = h * h.adjoint();
    const double norm = problem.tau[m] * problem.noise;
    Constraint c;
    c.coeffs.assign(k, -problem.tau[m] * hh / norm);
    c.coeffs[m] = hh / norm;
    c.sense = Sense::kGreaterEqual;
    c.rhs = 1.0;
    c.label = floor_label(m, m_users);
    lp.constraints.push_back(std::move(c));
  }
  for (std::size_t l = 0; l < problem.steer_list.size(); ++l) {
    if (problem.gamma[l] <= 0.0) continue;
    const CVector a = basis.adjoint() * problem.steer_list[l];
    Constraint c;
    c.coeffs.assign(k, a * a.adjoint() / problem.gamma[l]);
    c.sense = Sense::kGreaterEqual;
    c.rhs = 1.0;
    c.label = floor_label(m_users + static_cast<int>(l), m_users);
    lp.constraints.push_back(std::move(c));
  }
  Constraint power;
  power.coeffs.assign(k, CMatrix::Identity(rank, rank) / problem.p_max);
  power.sense = Sense::kLessEqual;
  power.rhs = 1.0;
  power.label = "power";
  lp.constraints.push_back(std::move(power));

  CovariancePool pool = solve_linear_sdp(lp, ipm);
  for (auto& b : pool.blocks) {
    CMatrix t = basis * b * basis.adjoint();
    b = 0.5 * (t + t.adjoint());
  }
  return rank_one_extract(pool).beamformer;
}

}  // namespace beamkit::sdp
