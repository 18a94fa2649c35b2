// Runs every primary acceptance criterion and prints one PASS/FAIL line each.
// Usage: acceptance [output dir] [criterion name ...]
// Sweep CSVs land in the output dir (default ./acceptance_out).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "beamkit/baselines.hpp"
#include "beamkit/config.hpp"
#include "beamkit/dinkelbach.hpp"
#include "beamkit/errors.hpp"
#include "beamkit/hbf.hpp"
#include "beamkit/metrics.hpp"
#include "beamkit/model.hpp"
#include "beamkit/pipeline.hpp"
#include "beamkit/sdp.hpp"
#include "beamkit/sweep.hpp"

using namespace beamkit;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  std::function<Outcome()> run;
};

fs::path g_out_dir = "acceptance_out";

CMatrix random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = cdouble(g(rng), g(rng));
  return m;
}

CMatrix random_unit_modulus(int rows, int cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-kPi, kPi);
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = std::polar(1.0, u(rng));
  return m;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct MeanSe {
  double mean = std::nan("");
  double se = std::nan("");
  int n = 0;
};

// Mean and standard error of the EE over the trials with a finite value,
// the same rule the aggregate CSV uses.
MeanSe ee_stats(const SweepResult& r, double value, Method m) {
  std::vector<double> v;
  for (const auto& row : r.rows) {
    if (row.sweep_value == value && row.method == m && std::isfinite(row.report.energy_efficiency)) {
      v.push_back(row.report.energy_efficiency);
    }
  }
  MeanSe s;
  s.n = static_cast<int>(v.size());
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / s.n;
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.se = s.n > 1 ? std::sqrt(ss / (s.n - 1) / s.n) : 0.0;
  return s;
}

// Rises to its argmax and falls after it; the argmax is not an endpoint.
bool unimodal_interior(const std::vector<double>& y) {
  const auto it = std::max_element(y.begin(), y.end());
  const std::size_t k = static_cast<std::size_t>(it - y.begin());
  if (k == 0 || k + 1 == y.size()) return false;
  for (std::size_t i = 1; i <= k; ++i) {
    if (y[i] < y[i - 1]) return false;
  }
  for (std::size_t i = k + 1; i < y.size(); ++i) {
    if (y[i] > y[i - 1]) return false;
  }
  return true;
}

SweepResult run_and_write(SweepSpec spec, const std::string& sub) {
  const SweepResult r = run_sweep(spec);
  write_outputs(r, (g_out_dir / sub).string());
  return r;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

Outcome gradient_check() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const double mu = t % 2 == 0 ? 1.5 : 12.0;
    const CMatrix rf = random_unit_modulus(8, 4, rng);
    const CMatrix bb = random_matrix(4, 4, rng);
    const CMatrix target = random_matrix(8, 4, rng);
    const double p = 10.0;
    const CMatrix g = euclidean_grad(rf, bb, target, mu);
    CMatrix fd(8, 4);
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < rf.size(); ++i) {
      double parts[2];
      for (int c = 0; c < 2; ++c) {
        CMatrix up = rf, dn = rf;
        const cdouble step = c == 0 ? cdouble(h, 0.0) : cdouble(0.0, h);
        up.data()[i] += step;
        dn.data()[i] -= step;
        parts[c] = (penalty_objective(up, bb, target, mu, p) - penalty_objective(dn, bb, target, mu, p)) /
                   (2.0 * h);
      }
      // Re Tr(D^H G) with D = e_i gives Re g_i, with D = j e_i gives Im g_i.
      fd.data()[i] = cdouble(parts[0], parts[1]);
    }
    worst = std::max(worst, (fd - g).norm() / g.norm());
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-6 && secs < 10.0,
          "worst relative error " + fmt("%.2e", worst) + " over 100 points, " + fmt("%.2f", secs) + " s"};
}

Outcome lambda_monotonicity() {
  const ScenarioConfig cfg = table1_config();
  int runs = 0, pairs = 0, bad = 0, infeasible = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    std::mt19937_64 rng(seed);
    const ChannelSet ch = generate_channels(cfg, rng);
    try {
      const DigitalDesign d = design_digital(ch, cfg);
      ++runs;
      const auto& lam = d.trace.lambda;
      for (std::size_t i = 1; i < lam.size(); ++i) {
        ++pairs;
        const double drop = (lam[i - 1] - lam[i]) / lam[i - 1];
        worst = std::max(worst, drop);
        if (lam[i] < lam[i - 1] - 1e-6 * lam[i - 1]) ++bad;
      }
    } catch (const InfeasibleError&) {
      ++infeasible;
    }
  }
  return {bad == 0 && runs == 50,
          std::to_string(runs) + " runs (" + std::to_string(infeasible) + " infeasible), " +
              std::to_string(pairs) + " pairs, " + std::to_string(bad) +
              " violations, largest relative drop " + fmt("%.2e", worst)};
}

Outcome constraint_satisfaction() {
  int feasible_instances = 0, violations = 0, infeasible = 0;
  std::ostringstream why;
  for (int n_tx : {16, 64}) {
    ScenarioConfig cfg = table1_config();
    cfg.n_tx = n_tx;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      std::mt19937_64 rng(seed);
      const ChannelSet ch = generate_channels(cfg, rng);
      try {
        design_digital(ch, cfg);
      } catch (const InfeasibleError&) {
        ++infeasible;
        continue;
      }
      ++feasible_instances;
      const auto out = run_methods(ch, cfg, {Method::kProposed});
      const HybridBeamformer& h = out[0].hybrid;
      bool ok = h.analog.size() > 0;
      if (ok) {
        const DigitalBeamformer f = h.digital();
        for (int m = 0; m < cfg.n_users; ++m) {
          ok = ok && sinr(ch, f, m, cfg.noise_power) >= cfg.sinr_thresholds[m] * (1.0 - 1e-3);
        }
        for (int l = 0; l < cfg.n_targets; ++l) {
          ok = ok && beampattern_gain(cfg.target_angles[l], f, cfg.antenna_spacing,
                                      cfg.carrier_wavelength) >=
                         cfg.beampattern_floor(l) * (1.0 - 1e-3);
        }
        ok = ok && h.total_power() <= cfg.max_tx_power * (1.0 + 1e-6);
        ok = ok && (h.analog.cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-12;
      }
      if (!ok) {
        ++violations;
        why << " N_t=" << n_tx << "/seed " << seed;
      }
    }
  }
  return {violations == 0 && feasible_instances > 0,
          std::to_string(feasible_instances) + " feasible instances at N_t in {16, 64} (" +
              std::to_string(infeasible) + " infeasible skipped), " + std::to_string(violations) +
              " with a violated constraint" + why.str()};
}

Outcome sdp_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  double worst_err = 0.0, worst_gap = 0.0;
  int not_converged = 0;
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + t % 8;
    const CMatrix g = random_matrix(n, n, rng);
    const CMatrix c = 0.5 * (g + g.adjoint());
    sdp::Constraint tr;
    tr.coeffs = {CMatrix::Identity(n, n)};
    tr.sense = sdp::Sense::kLessEqual;
    tr.rhs = 1.0;
    tr.label = "trace";
    const sdp::CovariancePool pool = sdp::solve_linear_sdp({c}, {tr}, 1, n);
    if (!pool.converged) ++not_converged;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(c, Eigen::EigenvaluesOnly);
    const double lmax = std::max(es.eigenvalues().maxCoeff(), 0.0);
    worst_err = std::max(worst_err, std::abs(pool.objective_value - lmax));
    worst_gap = std::max(worst_gap, pool.duality_gap);
  }
  const double secs = seconds_since(t0);
  return {worst_err <= 1e-6 && worst_gap <= 1e-7 && not_converged == 0 && secs < 30.0,
          "worst |obj - lambda_max| " + fmt("%.2e", worst_err) + ", worst gap " +
              fmt("%.2e", worst_gap) + ", " + std::to_string(not_converged) + " not converged, " +
              fmt("%.2f", secs) + " s"};
}

Outcome single_user() {
  const auto t0 = Clock::now();
  ScenarioConfig cfg = table1_config();
  cfg.n_users = 1;
  cfg.n_targets = 0;
  cfg.n_streams = 1;
  cfg.n_rfc = 1;
  cfg.n_paths_per_user = {1};
  cfg.sinr_thresholds = {1.0};
  cfg.user_angles = {1.1};
  cfg.user_distances = {50.0};
  cfg.beampattern_thresholds.clear();
  cfg.target_angles.clear();
  double worst = 0.0;
  int cases = 0;
  for (double gain_db : {70.0, 75.0, 80.0, 85.0, 90.0}) {
    ChannelSet ch = line_of_sight_channels(cfg.user_angles, cfg.n_tx, cfg.antenna_spacing,
                                           cfg.carrier_wavelength);
    ch.rows *= std::pow(10.0, -gain_db / 20.0);
    const double g = ch.rows.row(0).squaredNorm() / cfg.noise_power;
    const double lo = cfg.sinr_thresholds[0] / g, hi = cfg.max_tx_power;
    if (lo > hi) continue;
    const auto ee = [&](double p) {
      return std::log2(1.0 + p * g) / (cfg.amplifier_efficiency * p + cfg.n_rfc * cfg.rfc_static_power);
    };
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    for (int i = 0; i < 200; ++i) {
      const double c = b - r * (b - a), d = a + r * (b - a);
      if (ee(c) > ee(d)) {
        b = d;
      } else {
        a = c;
      }
    }
    const double best = ee(0.5 * (a + b));
    const DigitalDesign d = design_digital(ch, cfg);
    const double got = energy_efficiency(ch, d.beamformer, cfg);
    worst = std::max(worst, std::abs(got - best) / best);
    ++cases;
  }
  const double secs = seconds_since(t0);
  return {cases >= 3 && worst <= 0.005 && secs < 5.0,
          std::to_string(cases) + " channel gains, worst relative EE gap " + fmt("%.2e", worst) + ", " +
              fmt("%.2f", secs) + " s"};
}

Outcome factorization_recovery() {
  ScenarioConfig cfg = table1_config();
  cfg.n_tx = 16;
  cfg.n_rfc = 4;
  int ok = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    const CMatrix target = random_unit_modulus(16, 4, rng) * random_matrix(4, 4, rng);
    cfg.max_tx_power = target.squaredNorm();
    const HybridDesign d = design_hybrid(target, cfg);
    worst = std::max(worst, d.factorization_error);
    if (d.factorization_error <= 0.05) ++ok;
  }
  return {ok >= 95, std::to_string(ok) + "/100 seeds within 5%, worst error " + fmt("%.3f", worst)};
}

Outcome fig3_snr() {
  const auto t0 = Clock::now();
  SweepSpec s;
  s.kind = SweepKind::kSnr;
  s.grid = default_grid(SweepKind::kSnr);
  s.trials = 50;
  s.base = table1_config();
  s.methods = {Method::kProposed, Method::kOmp, Method::kFdb};
  const SweepResult r = run_and_write(s, "snr");
  const double secs = seconds_since(t0);

  std::map<Method, std::vector<MeanSe>> curves;
  for (Method m : s.methods) {
    for (double v : s.grid) curves[m].push_back(ee_stats(r, v, m));
  }
  std::vector<double> prop;
  for (const auto& x : curves[Method::kProposed]) prop.push_back(x.mean);
  bool unimodal = unimodal_interior(prop);
  const std::size_t peak = static_cast<std::size_t>(std::max_element(prop.begin(), prop.end()) - prop.begin());

  int order_bad = 0;
  const auto within = [](const MeanSe& hi, const MeanSe& lo) {
    return hi.mean >= lo.mean - std::hypot(hi.se, lo.se);
  };
  for (std::size_t i = 0; i < s.grid.size(); ++i) {
    if (!within(curves[Method::kProposed][i], curves[Method::kOmp][i])) ++order_bad;
    if (!within(curves[Method::kOmp][i], curves[Method::kFdb][i])) ++order_bad;
  }
  return {unimodal && order_bad == 0 && secs <= 900.0,
          std::string(unimodal ? "unimodal" : "not unimodal") + ", peak at " +
              fmt("%g", s.grid[peak]) + " dB, " + std::to_string(order_bad) +
              " ordering violations over 9 points, " + fmt("%.0f", secs) + " s"};
}

Outcome fig4_gamma() {
  SweepSpec s;
  s.kind = SweepKind::kGamma;
  s.grid = default_grid(SweepKind::kGamma);
  s.trials = 20;
  s.base = table1_config();
  s.methods = {Method::kProposed, Method::kCommOnly};
  const SweepResult r = run_and_write(s, "gamma");
  std::vector<double> prop, comm;
  for (double v : s.grid) {
    prop.push_back(ee_stats(r, v, Method::kProposed).mean);
    comm.push_back(ee_stats(r, v, Method::kCommOnly).mean);
  }
  int rises = 0;
  for (std::size_t i = 1; i < prop.size(); ++i) {
    if (!(prop[i] <= prop[i - 1])) ++rises;
  }
  const double spread = *std::max_element(comm.begin(), comm.end()) - *std::min_element(comm.begin(), comm.end());
  return {rises == 0 && spread <= 1e-9 && std::isfinite(spread),
          "proposed EE " + fmt("%.4f", prop.front()) + " -> " + fmt("%.4f", prop.back()) + " with " +
              std::to_string(rises) + " increases; comm_only spread " + fmt("%.1e", spread)};
}

Outcome fig5_rfc() {
  SweepSpec s;
  s.kind = SweepKind::kRfc;
  s.grid = default_grid(SweepKind::kRfc);
  s.trials = 10;
  s.base = table1_config();
  s.methods = {Method::kProposed};
  const SweepResult r = run_and_write(s, "rfc");
  std::vector<double> y;
  std::ostringstream curve;
  for (double v : s.grid) {
    y.push_back(ee_stats(r, v, Method::kProposed).mean);
    curve << ' ' << fmt("%.3f", y.back());
  }
  const std::size_t k = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  const bool interior = k > 0 && k + 1 < y.size() && std::all_of(y.begin(), y.end(), [](double v) {
    return std::isfinite(v);
  });
  return {interior, "max at M_t = " + fmt("%g", s.grid[k]) + ", mean EE" + curve.str()};
}

Outcome fig2_beampattern() {
  SweepSpec s;
  s.kind = SweepKind::kBeampattern;
  s.grid = default_grid(SweepKind::kBeampattern);
  s.trials = 10;
  s.base = table1_config();
  s.methods = {Method::kProposed};
  s.tau_db = {10.0, 15.0};
  const SweepResult r = run_and_write(s, "beampattern");

  const auto index_of = [&](double physical) {
    // Grid is in plot degrees; physical angle = plot angle + 90 deg.
    const double deg = physical * 180.0 / kPi - 90.0;
    std::size_t best = 0;
    for (std::size_t i = 1; i < s.grid.size(); ++i) {
      if (std::abs(s.grid[i] - deg) < std::abs(s.grid[best] - deg)) best = i;
    }
    return static_cast<Eigen::Index>(best);
  };
  const double floor = s.base.beampattern_thresholds[0] * (1.0 - 1e-3);
  int below = 0, feasible = 0;
  std::map<double, std::vector<double>> user_gain_sum;
  std::map<double, int> count;
  for (const auto& p : r.patterns) {
    if (!p.feasible) continue;
    ++feasible;
    for (double th : s.base.target_angles) {
      if (p.gain(index_of(th)) < floor) ++below;
    }
    auto& acc = user_gain_sum[p.tau_db];
    acc.resize(s.base.user_angles.size(), 0.0);
    for (std::size_t m = 0; m < s.base.user_angles.size(); ++m) acc[m] += p.gain(index_of(s.base.user_angles[m]));
    ++count[p.tau_db];
  }
  // Compared at the outer-loop accuracy: with slack SINR floors both runs
  // converge to the same design up to that tolerance.
  const double tol = s.base.tol_dinkelbach;
  bool raised = count[10.0] > 0 && count[15.0] > 0;
  std::ostringstream gains;
  for (std::size_t m = 0; m < s.base.user_angles.size(); ++m) {
    const double g10 = user_gain_sum[10.0][m] / count[10.0];
    const double g15 = user_gain_sum[15.0][m] / count[15.0];
    gains << " user " << m << ": " << fmt("%.4f", 10.0 * std::log10(g10)) << " -> "
          << fmt("%.4f", 10.0 * std::log10(g15)) << " dB;";
    if (g15 < g10 * (1.0 - tol)) raised = false;
  }
  double min_sinr_db = std::numeric_limits<double>::infinity();
  for (const auto& row : r.rows) {
    for (double v : row.report.per_user_sinr) min_sinr_db = std::min(min_sinr_db, 10.0 * std::log10(v));
  }
  gains << " lowest user SINR " << fmt("%.1f", min_sinr_db) << " dB";
  return {below == 0 && raised,
          std::to_string(feasible) + " feasible patterns, " + std::to_string(below) +
              " target gains below 5 dB;" + gains.str()};
}

Outcome determinism() {
  const std::string cli = BEAMKIT_CLI;
  const std::string cfg = std::string(BEAMKIT_CONFIG_DIR) + "/table1.json";
  const fs::path a = g_out_dir / "determinism_a", b = g_out_dir / "determinism_b";
  const std::string args = " sweep --kind snr --grid -10,10,30 --trials 3 --seed 5 --methods proposed,omp,fdb --config " + cfg;
  const int ra = std::system((cli + args + " --out " + a.string() + " > /dev/null").c_str());
  const int rb = std::system((cli + args + " --out " + b.string() + " > /dev/null").c_str());
  if (ra != 0 || rb != 0) return {false, "sweep command failed"};
  const bool same = slurp(a / "snr.csv") == slurp(b / "snr.csv") &&
                    slurp(a / "snr_agg.csv") == slurp(b / "snr_agg.csv") &&
                    !slurp(a / "snr.csv").empty();
  return {same, same ? "snr.csv and snr_agg.csv byte-identical across two runs" : "CSV outputs differ"};
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> only;
  if (argc > 1) g_out_dir = argv[1];
  for (int i = 2; i < argc; ++i) only.emplace_back(argv[i]);
  fs::create_directories(g_out_dir);

  const std::vector<Criterion> criteria = {
      {"gradient_fd", gradient_check},
      {"lambda_monotone", lambda_monotonicity},
      {"constraints", constraint_satisfaction},
      {"sdp_oracle", sdp_oracle},
      {"single_user", single_user},
      {"recovery", factorization_recovery},
      {"fig3_snr", fig3_snr},
      {"fig4_gamma", fig4_gamma},
      {"fig5_rfc", fig5_rfc},
      {"fig2_beampattern", fig2_beampattern},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
