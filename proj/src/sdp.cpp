#include "beamkit/sdp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "beamkit/errors.hpp"

namespace beamkit::sdp {

RMatrix embed_real(const CMatrix& h) {
  const Eigen::Index n = h.rows();
  RMatrix out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = h.real();
  out.topRightCorner(n, n) = -h.imag();
  out.bottomLeftCorner(n, n) = h.imag();
  out.bottomRightCorner(n, n) = h.real();
  return out;
}

CMatrix unembed_real(const RMatrix& x) {
  if (x.rows() != x.cols() || x.rows() % 2 != 0) {
    throw std::invalid_argument("unembed_real: expected a square matrix of even size");
  }
  const Eigen::Index n = x.rows() / 2;
  const RMatrix re = 0.5 * (x.topLeftCorner(n, n) + x.bottomRightCorner(n, n));
  const RMatrix im = 0.5 * (x.bottomLeftCorner(n, n) - x.topRightCorner(n, n));
  CMatrix out(n, n);
  out.real() = 0.5 * (re + re.transpose());
  out.imag() = 0.5 * (im - im.transpose());
  return out;
}

namespace {

using Blocks = std::vector<RMatrix>;

double inner(const RMatrix& a, const RMatrix& b) {
  if (a.size() == 0 || b.size() == 0) return 0.0;
  return a.cwiseProduct(b).sum();
}

double inner(const Blocks& a, const Blocks& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += inner(a[k], b[k]);
  return s;
}

double norm(const Blocks& a) { return std::sqrt(inner(a, a)); }

RMatrix sym(const RMatrix& a) { return 0.5 * (a + a.transpose()); }

// Largest alpha with X + alpha * dX >= 0, given the Cholesky factor of X.
double step_to_boundary(const RMatrix& chol_x, const RMatrix& dx) {
  const Eigen::Index n = dx.rows();
  if (n == 1) {
    const double x = chol_x(0, 0) * chol_x(0, 0);
    return dx(0, 0) < 0.0 ? -x / dx(0, 0) : std::numeric_limits<double>::infinity();
  }
  const auto lower = chol_x.triangularView<Eigen::Lower>();
  RMatrix t = lower.solve(dx);
  t = lower.solve(t.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<RMatrix> es(sym(t), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  return lmin < 0.0 ? -1.0 / lmin : std::numeric_limits<double>::infinity();
}

bool cholesky(const RMatrix& a, RMatrix& l) {
  Eigen::LLT<RMatrix> llt(sym(a));
  if (llt.info() != Eigen::Success) return false;
  l = llt.matrixL();
  return l.diagonal().minCoeff() > 0.0;
}

// Nesterov-Todd scaling of one block: W = G G^T with W Z W = X and
// G^T Z G = G^{-1} X G^{-T} = diag(d).
struct NtBlock {
  RMatrix g;
  RMatrix g_inv;
  RVector d;
};

NtBlock nt_scaling(const RMatrix& lx, const RMatrix& lz) {
  NtBlock nt;
  const Eigen::Index n = lx.rows();
  if (n == 1) {
    const double x = lx(0, 0) * lx(0, 0);
    const double z = lz(0, 0) * lz(0, 0);
    const double g = std::pow(x / z, 0.25);
    nt.g = RMatrix::Constant(1, 1, g);
    nt.g_inv = RMatrix::Constant(1, 1, 1.0 / g);
    nt.d = RVector::Constant(1, std::sqrt(x * z));
    return nt;
  }
  // Right singular pairs of Lz^T Lx from the eigenpairs of its Gram matrix,
  // whose spectrum is clustered near mu on the central path.
  const RMatrix m = lz.transpose() * lx;
  Eigen::SelfAdjointEigenSolver<RMatrix> es(m.transpose() * m);
  nt.d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  if (nt.d.minCoeff() <= 0.0) {
    Eigen::JacobiSVD<RMatrix> svd(m, Eigen::ComputeFullV);
    nt.d = svd.singularValues();
    const RMatrix& q = svd.matrixV();
    nt.g = lx * q * nt.d.cwiseSqrt().cwiseInverse().asDiagonal();
    const RMatrix lx_inv = lx.triangularView<Eigen::Lower>().solve(RMatrix::Identity(n, n));
    nt.g_inv = nt.d.cwiseSqrt().asDiagonal() * q.transpose() * lx_inv;
    return nt;
  }
  const RMatrix& q = es.eigenvectors();
  const RVector dinv_sqrt = nt.d.cwiseSqrt().cwiseInverse();
  nt.g = lx * q * dinv_sqrt.asDiagonal();
  // G^{-1} = D^{1/2} Q^T L^{-1}.
  const RMatrix lx_inv = lx.triangularView<Eigen::Lower>().solve(RMatrix::Identity(n, n));
  nt.g_inv = nt.d.cwiseSqrt().asDiagonal() * q.transpose() * lx_inv;
  return nt;
}

}  // namespace

RealSolution solve_real_sdp(const RealSdp& problem, const IpmSettings& settings) {
  const std::size_t nb = problem.block_dims.size();
  const std::size_t m = problem.rows.size();
  for (int d : problem.block_dims) {
    if (d < 1) throw std::invalid_argument("solve_real_sdp: block dimension must be positive");
  }
  auto dim_of = [&](std::size_t b) { return static_cast<Eigen::Index>(problem.block_dims[b]); };

  // Dense copies with zero blocks filled in, rows scaled to unit norm.
  std::vector<Blocks> a(m, Blocks(nb));
  RVector b(m);
  RVector row_scale(m);
  for (std::size_t i = 0; i < m; ++i) {
    const RealRow& row = problem.rows[i];
    if (!row.coeffs.empty() && row.coeffs.size() != nb) {
      throw std::invalid_argument("solve_real_sdp: row block count mismatch");
    }
    double nrm2 = 0.0;
    for (std::size_t k = 0; k < nb; ++k) {
      if (!row.coeffs.empty() && row.coeffs[k].size() != 0) {
        if (row.coeffs[k].rows() != dim_of(k) || row.coeffs[k].cols() != dim_of(k)) {
          throw std::invalid_argument("solve_real_sdp: coefficient block has wrong size");
        }
        a[i][k] = sym(row.coeffs[k]);
      } else {
        a[i][k] = RMatrix::Zero(dim_of(k), dim_of(k));
      }
      nrm2 += a[i][k].squaredNorm();
    }
    const double nrm = std::sqrt(nrm2);
    if (nrm == 0.0) {
      if (std::abs(row.rhs) > 0.0) {
        RealSolution bad;
        bad.status = SolveStatus::kPrimalInfeasible;
        bad.infeasible_row = static_cast<int>(i);
        return bad;
      }
      row_scale(i) = 1.0;
    } else {
      row_scale(i) = 1.0 / nrm;
    }
    for (auto& blk : a[i]) blk *= row_scale(i);
    b(i) = row.rhs * row_scale(i);
  }

  // Nonzero coefficient blocks per row and rows touching each block.
  std::vector<std::vector<std::size_t>> nz(m), rows_of(nb);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < nb; ++k) {
      if (a[i][k].cwiseAbs().maxCoeff() > 0.0) {
        nz[i].push_back(k);
        rows_of[k].push_back(i);
      }
    }
  }

  Blocks c(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    if (k < problem.cost.size() && problem.cost[k].size() != 0) {
      c[k] = sym(problem.cost[k]);
    } else {
      c[k] = RMatrix::Zero(dim_of(k), dim_of(k));
    }
  }
  const double c_scale = std::max(1.0, norm(c));
  const double b_scale = std::max(1.0, m > 0 ? b.cwiseAbs().maxCoeff() : 0.0);
  for (auto& blk : c) blk /= c_scale;
  b /= b_scale;

  // Starting point.
  double n_total = 0.0;
  for (std::size_t k = 0; k < nb; ++k) n_total += static_cast<double>(dim_of(k));
  double xi = std::max(10.0, std::sqrt(n_total));
  double zeta = std::max(10.0, std::sqrt(n_total));
  for (std::size_t i = 0; i < m; ++i) xi = std::max(xi, n_total * (1.0 + std::abs(b(i))) / 2.0);
  zeta = std::max(zeta, 1.0 + norm(c));

  Blocks x(nb), z(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    x[k] = xi * RMatrix::Identity(dim_of(k), dim_of(k));
    z[k] = zeta * RMatrix::Identity(dim_of(k), dim_of(k));
  }
  RVector y = RVector::Zero(m);

  auto apply_a = [&](const Blocks& v) {
    RVector out(m);
    for (std::size_t i = 0; i < m; ++i) {
      double acc = 0.0;
      for (std::size_t k : nz[i]) acc += inner(a[i][k], v[k]);
      out(i) = acc;
    }
    return out;
  };
  auto apply_at = [&](const RVector& w) {
    Blocks out(nb);
    for (std::size_t k = 0; k < nb; ++k) {
      out[k] = RMatrix::Zero(dim_of(k), dim_of(k));
      for (std::size_t i : rows_of[k]) {
        if (w(i) != 0.0) out[k] += w(i) * a[i][k];
      }
    }
    return out;
  };

  RealSolution sol;
  sol.status = SolveStatus::kMaxIterations;
  const double b_norm = b.norm();
  const double c_norm = norm(c);

  auto finish = [&](SolveStatus status, int iter) {
    sol.status = status;
    sol.iterations = iter;
    sol.x.resize(nb);
    sol.z.resize(nb);
    for (std::size_t k = 0; k < nb; ++k) {
      sol.x[k] = sym(x[k]) * b_scale;
      sol.z[k] = sym(z[k]) * c_scale;
    }
    sol.y = y.cwiseProduct(row_scale) * c_scale;
    sol.primal_objective = inner(c, x) * c_scale * b_scale;
    sol.dual_objective = b.dot(y) * c_scale * b_scale;
    sol.complementarity = inner(x, z) * c_scale * b_scale;
    return sol;
  };

  for (int iter = 0; iter <= settings.max_iters; ++iter) {
    const RVector rp = b - apply_a(x);
    Blocks rd = c;
    {
      const Blocks aty = apply_at(y);
      for (std::size_t k = 0; k < nb; ++k) rd[k] -= aty[k] + z[k];
    }
    const double pobj = inner(c, x);
    const double dobj = b.dot(y);
    const double xz = inner(x, z);
    const double mu = xz / n_total;
    // Gap and complementarity in the caller's units.
    const double scale = c_scale * b_scale;
    const double rel_gap = std::abs(pobj - dobj) * scale / (1.0 + std::abs(pobj) * scale);
    const double rel_comp = xz * scale / (1.0 + std::abs(pobj) * scale);
    sol.primal_residual = rp.norm() / (1.0 + b_norm);
    sol.dual_residual = norm(rd) / (1.0 + c_norm);

    if (settings.trace != nullptr) {
      *settings.trace << "{\"iter\":" << iter << ",\"pobj\":" << pobj * c_scale * b_scale
                      << ",\"dobj\":" << dobj * c_scale * b_scale << ",\"gap\":" << rel_gap
                      << ",\"pinf\":" << sol.primal_residual << ",\"dinf\":" << sol.dual_residual
                      << ",\"mu\":" << mu << "}\n";
    }

    if (sol.primal_residual < settings.feas_tol && sol.dual_residual < settings.feas_tol &&
        rel_gap < settings.gap_tol && rel_comp < settings.gap_tol) {
      return finish(SolveStatus::kOptimal, iter);
    }

    // Farkas certificate: b^T y > 0 with A^T y <= 0 (up to the dual residual)
    // once y has grown without bound.
    const double y_norm = y.norm();
    if (y_norm > 1e7 && dobj > 0.0) {
      const Blocks aty = apply_at(y / y_norm);
      double worst = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < nb; ++k) {
        if (aty[k].rows() == 1) {
          worst = std::max(worst, aty[k](0, 0));
        } else {
          Eigen::SelfAdjointEigenSolver<RMatrix> es(aty[k], Eigen::EigenvaluesOnly);
          worst = std::max(worst, es.eigenvalues().maxCoeff());
        }
      }
      const double by = dobj / y_norm;
      if (worst <= 1e-6 * by) {
        Eigen::Index row = 0;
        y.cwiseAbs().maxCoeff(&row);
        finish(SolveStatus::kPrimalInfeasible, iter);
        sol.infeasible_row = static_cast<int>(row);
        return sol;
      }
    }
    if (pobj < -1e10 && sol.primal_residual < 1e-3) {
      return finish(SolveStatus::kUnbounded, iter);
    }
    if (iter == settings.max_iters) break;

    // Per-block factorizations and NT scaling.
    std::vector<RMatrix> lx(nb), lz(nb);
    std::vector<NtBlock> nt(nb);
    std::vector<RMatrix> w(nb);
    bool ok = true;
    for (std::size_t k = 0; k < nb && ok; ++k) {
      ok = cholesky(x[k], lx[k]) && cholesky(z[k], lz[k]);
      if (!ok) break;
      nt[k] = nt_scaling(lx[k], lz[k]);
      w[k] = nt[k].g * nt[k].g.transpose();
    }
    if (!ok) return finish(SolveStatus::kNumerical, iter);

    // Schur complement M_ij = <A_i, W A_j W>.
    RMatrix schur = RMatrix::Zero(m, m);
    for (std::size_t k = 0; k < nb; ++k) {
      const auto& rows = rows_of[k];
      if (dim_of(k) == 1) {
        const double w2 = w[k](0, 0) * w[k](0, 0);
        for (std::size_t p = 0; p < rows.size(); ++p) {
          for (std::size_t q = p; q < rows.size(); ++q) {
            schur(rows[p], rows[q]) += a[rows[p]][k](0, 0) * w2 * a[rows[q]][k](0, 0);
          }
        }
        continue;
      }
      for (std::size_t q = 0; q < rows.size(); ++q) {
        const RMatrix waw = w[k] * a[rows[q]][k] * w[k];
        for (std::size_t p = 0; p <= q; ++p) schur(rows[p], rows[q]) += inner(a[rows[p]][k], waw);
      }
    }
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        const double v = schur(i, j) + schur(j, i);
        schur(i, j) = v;
        schur(j, i) = v;
      }
    }
    Eigen::LLT<RMatrix> schur_llt(schur);
    if (schur_llt.info() != Eigen::Success) {
      const double ridge = 1e-12 * std::max(1.0, schur.diagonal().maxCoeff());
      schur_llt.compute(schur + ridge * RMatrix::Identity(m, m));
      if (schur_llt.info() != Eigen::Success) return finish(SolveStatus::kNumerical, iter);
    }

    // W Rd W is shared by both solves.
    Blocks wrdw(nb);
    for (std::size_t k = 0; k < nb; ++k) wrdw[k] = w[k] * rd[k] * w[k];
    const RVector a_wrdw = apply_a(wrdw);

    auto direction = [&](const std::vector<RMatrix>& rc, Blocks& dx, RVector& dy, Blocks& dz) {
      Blocks grg(nb);
      for (std::size_t k = 0; k < nb; ++k) grg[k] = nt[k].g * rc[k] * nt[k].g.transpose();
      const RVector rhs = rp - apply_a(grg) + a_wrdw;
      dy = schur_llt.solve(rhs);
      const Blocks aty = apply_at(dy);
      dz.resize(nb);
      dx.resize(nb);
      for (std::size_t k = 0; k < nb; ++k) {
        dz[k] = rd[k] - aty[k];
        dx[k] = sym(grg[k] - w[k] * dz[k] * w[k]);
      }
    };
    auto max_steps = [&](const Blocks& dx, const Blocks& dz) {
      double ap = std::numeric_limits<double>::infinity();
      double ad = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < nb; ++k) {
        ap = std::min(ap, step_to_boundary(lx[k], dx[k]));
        ad = std::min(ad, step_to_boundary(lz[k], dz[k]));
      }
      return std::pair<double, double>(ap, ad);
    };

    // Predictor: Rc = -V.
    std::vector<RMatrix> rc(nb);
    for (std::size_t k = 0; k < nb; ++k) rc[k] = -RMatrix(nt[k].d.asDiagonal());
    Blocks dxa, dza;
    RVector dya;
    direction(rc, dxa, dya, dza);
    auto [ap_aff, ad_aff] = max_steps(dxa, dza);
    ap_aff = std::min(1.0, ap_aff);
    ad_aff = std::min(1.0, ad_aff);
    double xz_aff = 0.0;
    for (std::size_t k = 0; k < nb; ++k) {
      xz_aff += inner(RMatrix(x[k] + ap_aff * dxa[k]), RMatrix(z[k] + ad_aff * dza[k]));
    }
    const double mu_aff = xz_aff / n_total;
    double sigma = std::pow(std::max(0.0, mu_aff) / mu, 3.0);
    sigma = std::clamp(sigma, 0.0, 1.0);

    // Corrector.
    for (std::size_t k = 0; k < nb; ++k) {
      const RVector& d = nt[k].d;
      const RMatrix dxt = nt[k].g_inv * dxa[k] * nt[k].g_inv.transpose();
      const RMatrix dzt = nt[k].g.transpose() * dza[k] * nt[k].g;
      const RMatrix cross = dxt * dzt + dzt * dxt;
      const Eigen::Index n = d.size();
      RMatrix r(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
          double num = -cross(i, j);
          if (i == j) num += 2.0 * sigma * mu - 2.0 * d(i) * d(i);
          r(i, j) = num / (d(i) + d(j));
        }
      }
      rc[k] = sym(r);
    }
    Blocks dx, dz;
    RVector dy;
    direction(rc, dx, dy, dz);
    const auto [ap_max, ad_max] = max_steps(dx, dz);
    const double gamma = 0.9 + 0.09 * std::min(ap_aff, ad_aff);
    const double ap = std::min(1.0, gamma * ap_max);
    const double ad = std::min(1.0, gamma * ad_max);

    for (std::size_t k = 0; k < nb; ++k) {
      x[k] = sym(x[k] + ap * dx[k]);
      z[k] = sym(z[k] + ad * dz[k]);
    }
    y += ad * dy;
  }
  return finish(SolveStatus::kMaxIterations, settings.max_iters);
}

// ---------------------------------------------------------------------------

double constraint_value(const Constraint& c, const std::vector<CMatrix>& blocks) {
  double v = 0.0;
  for (std::size_t k = 0; k < c.coeffs.size() && k < blocks.size(); ++k) {
    if (c.coeffs[k].size() == 0) continue;
    v += (c.coeffs[k].cwiseProduct(blocks[k].transpose())).sum().real();
  }
  return v;
}

namespace {

double residual_of(const Constraint& c, double lhs) {
  switch (c.sense) {
    case Sense::kLessEqual: return c.rhs - lhs;
    case Sense::kGreaterEqual: return lhs - c.rhs;
    case Sense::kEqual: return -std::abs(lhs - c.rhs);
  }
  return 0.0;
}

}  // namespace

CovariancePool solve_linear_sdp(const LinearSdp& problem, const IpmSettings& settings) {
  const std::size_t nb = problem.block_dims.size();
  RealSdp real;
  real.block_dims.reserve(nb);
  for (int d : problem.block_dims) real.block_dims.push_back(2 * d);

  real.cost.resize(nb);
  for (std::size_t k = 0; k < nb && k < problem.cost.size(); ++k) {
    if (problem.cost[k].size() == 0) continue;
    if (problem.cost[k].rows() != problem.block_dims[k]) {
      throw std::invalid_argument("solve_linear_sdp: cost block has wrong size");
    }
    real.cost[k] = -0.5 * embed_real(problem.cost[k]);
  }

  // One 1x1 slack block per inequality, appended after the matrix blocks.
  std::vector<int> slack_of(problem.constraints.size(), -1);
  for (std::size_t i = 0; i < problem.constraints.size(); ++i) {
    if (problem.constraints[i].sense != Sense::kEqual) {
      slack_of[i] = static_cast<int>(real.block_dims.size());
      real.block_dims.push_back(1);
      real.cost.emplace_back();
    }
  }
  const std::size_t total_blocks = real.block_dims.size();
  for (std::size_t i = 0; i < problem.constraints.size(); ++i) {
    const Constraint& con = problem.constraints[i];
    if (con.coeffs.size() > nb) {
      throw std::invalid_argument("solve_linear_sdp: constraint has too many blocks");
    }
    RealRow row;
    row.coeffs.resize(total_blocks);
    for (std::size_t k = 0; k < con.coeffs.size(); ++k) {
      if (con.coeffs[k].size() == 0) continue;
      if (con.coeffs[k].rows() != problem.block_dims[k]) {
        throw std::invalid_argument("solve_linear_sdp: constraint block has wrong size");
      }
      row.coeffs[k] = 0.5 * embed_real(con.coeffs[k]);
    }
    if (slack_of[i] >= 0) {
      const double s = con.sense == Sense::kLessEqual ? 1.0 : -1.0;
      row.coeffs[slack_of[i]] = RMatrix::Constant(1, 1, s);
    }
    row.rhs = con.rhs;
    real.rows.push_back(std::move(row));
  }

  const RealSolution rs = solve_real_sdp(real, settings);
  if (rs.status == SolveStatus::kPrimalInfeasible) {
    const int idx = rs.infeasible_row;
    const std::string label =
        idx >= 0 && !problem.constraints[idx].label.empty() ? problem.constraints[idx].label
                                                            : "constraint " + std::to_string(idx);
    throw InfeasibleError("linear SDP is infeasible (binding: " + label + ")", idx, label);
  }
  if (rs.status == SolveStatus::kUnbounded) {
    throw std::runtime_error("linear SDP is unbounded");
  }

  CovariancePool pool;
  pool.blocks.reserve(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    if (rs.x.empty()) {
      pool.blocks.push_back(CMatrix::Zero(problem.block_dims[k], problem.block_dims[k]));
    } else {
      pool.blocks.push_back(unembed_real(rs.x[k]));
    }
  }
  pool.objective_value = 0.0;
  for (std::size_t k = 0; k < nb && k < problem.cost.size(); ++k) {
    if (problem.cost[k].size() == 0) continue;
    pool.objective_value += (problem.cost[k].cwiseProduct(pool.blocks[k].transpose())).sum().real();
  }
  for (const auto& con : problem.constraints) {
    pool.feasibility_residuals.push_back(residual_of(con, constraint_value(con, pool.blocks)));
  }
  pool.duality_gap = std::abs(rs.primal_objective - rs.dual_objective);
  pool.complementarity = rs.complementarity;
  pool.iterations = rs.iterations;
  pool.converged = rs.status == SolveStatus::kOptimal;
  return pool;
}

CovariancePool solve_linear_sdp(const std::vector<CMatrix>& cost,
                                const std::vector<Constraint>& constraints, int blocks, int dim,
                                const IpmSettings& settings) {
  LinearSdp p;
  p.block_dims.assign(blocks, dim);
  p.cost = cost;
  p.constraints = constraints;
  return solve_linear_sdp(p, settings);
}

}  // namespace beamkit::sdp
