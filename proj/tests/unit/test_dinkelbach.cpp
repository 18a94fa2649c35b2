#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "beamkit/config.hpp"
#include "beamkit/dinkelbach.hpp"
#include "beamkit/errors.hpp"
#include "beamkit/metrics.hpp"
#include "beamkit/model.hpp"

using namespace beamkit;

namespace {

ScenarioConfig single_user_config(int n_tx) {
  ScenarioConfig cfg = table1_config();
  cfg.n_tx = n_tx;
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
  cfg.noise_power = 1.0;
  cfg.max_tx_power = 100.0;
  cfg.validate();
  return cfg;
}

double golden_section_max(const std::function<double(double)>& f, double lo, double hi) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < 200; ++i) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return f(0.5 * (a + b));
}

}  // namespace

TEST(PriceUpdate, RateSevenOverSevenWatts) {
  ScenarioConfig cfg = single_user_config(2);
  cfg.amplifier_efficiency = 0.04;
  cfg.rfc_static_power = 7.0 - 0.04 * 127.0;
  ChannelSet ch;
  ch.rows = CMatrix::Zero(1, 2);
  ch.rows(0, 0) = 1.0;
  CMatrix f = CMatrix::Zero(2, 1);
  f(0, 0) = std::sqrt(127.0);
  EXPECT_NEAR(price_update(ch, DigitalBeamformer(f), cfg), 1.0, 1e-12);
}

TEST(PriceUpdate, ZeroBeamformerIsZero) {
  const ScenarioConfig cfg = table1_config();
  std::mt19937_64 rng(1);
  const ChannelSet ch = generate_channels(cfg, rng);
  EXPECT_EQ(price_update(ch, DigitalBeamformer(CMatrix::Zero(cfg.n_tx, cfg.n_streams)), cfg), 0.0);
}

TEST(PriceUpdate, IsRateOverPowerComposition) {
  const ScenarioConfig cfg = table1_config();
  std::mt19937_64 rng(2);
  const ChannelSet ch = generate_channels(cfg, rng);
  const DigitalBeamformer f = initial_beamformer(ch, cfg);
  const double expect =
      sum_rate(ch, f, cfg.noise_power) /
      dissipated_power(f, cfg.amplifier_efficiency, cfg.n_rfc, cfg.rfc_static_power);
  EXPECT_NEAR(price_update(ch, f, cfg), expect, 1e-12 * expect);
}

TEST(InitialBeamformer, UsesFullBudget) {
  const ScenarioConfig cfg = table1_config();
  std::mt19937_64 rng(3);
  const ChannelSet ch = generate_channels(cfg, rng);
  const DigitalBeamformer f = initial_beamformer(ch, cfg);
  EXPECT_NEAR(f.columns.squaredNorm(), cfg.max_tx_power, 1e-9 * cfg.max_tx_power);
  // Equal power per column.
  for (int k = 1; k < cfg.n_streams; ++k) {
    EXPECT_NEAR(f.columns.col(k).squaredNorm(), f.columns.col(0).squaredNorm(), 1e-9);
  }
}

// EE(p) = log2(1 + p g) / (eta p + P_c) over the admissible power range.
TEST(DesignDigital, SingleUserMatchesGoldenSection) {
  for (double gain_db : {-10.0, 0.0, 10.0, 20.0}) {
    ScenarioConfig cfg = single_user_config(8);
    ChannelSet ch = line_of_sight_channels(cfg.user_angles, cfg.n_tx, cfg.antenna_spacing,
                                           cfg.carrier_wavelength);
    ch.rows *= std::pow(10.0, gain_db / 20.0);
    const double g = ch.rows.row(0).squaredNorm() / cfg.noise_power;
    const double p_min = cfg.sinr_thresholds[0] / g;
    if (p_min > cfg.max_tx_power) continue;
    const auto ee = [&](double p) {
      return std::log2(1.0 + p * g) /
             (cfg.amplifier_efficiency * p + cfg.n_rfc * cfg.rfc_static_power);
    };
    const double best = golden_section_max(ee, p_min, cfg.max_tx_power);
    const DigitalDesign d = design_digital(ch, cfg);
    const double got = energy_efficiency(ch, d.beamformer, cfg);
    EXPECT_NEAR(got, best, 0.005 * best) << gain_db;
    EXPECT_LE(got, best * (1.0 + 1e-6)) << gain_db;
  }
}

TEST(DesignDigital, HugeSinrFloorIsInfeasible) {
  ScenarioConfig cfg = table1_config();
  cfg.sinr_thresholds = {1e6, 1e6};
  std::mt19937_64 rng(1);
  const ChannelSet ch = generate_channels(cfg, rng);
  try {
    design_digital(ch, cfg);
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError& e) {
    EXPECT_NE(e.constraint_label().find("sinr"), std::string::npos);
  }
}

TEST(DesignDigital, Table1SeedOneTrace) {
  const ScenarioConfig cfg = table1_config();
  std::mt19937_64 rng(1);
  const ChannelSet ch = generate_channels(cfg, rng);
  const DigitalDesign d = design_digital(ch, cfg);
  const auto& lam = d.trace.lambda;
  ASSERT_GE(lam.size(), 2u);
  for (std::size_t i = 1; i < lam.size(); ++i) EXPECT_GE(lam[i], lam[i - 1] * (1.0 - 1e-6)) << i;
  EXPECT_TRUE(d.trace.converged);
  EXPECT_TRUE(d.trace.monotone);
  EXPECT_LE(d.trace.iterations, 15);
  for (double s : d.trace.subtractive) EXPECT_GE(s, -1e-6);

  // Final design meets the floors within the repair tolerance.
  for (int m = 0; m < cfg.n_users; ++m) {
    EXPECT_GE(sinr(ch, d.beamformer, m, cfg.noise_power), cfg.sinr_thresholds[m] * (1.0 - 1e-3));
  }
  for (int l = 0; l < cfg.n_targets; ++l) {
    EXPECT_GE(beampattern_gain(cfg.target_angles[l], d.beamformer, cfg.antenna_spacing,
                               cfg.carrier_wavelength),
              cfg.beampattern_floor(l) * (1.0 - 1e-3));
  }
  EXPECT_LE(d.beamformer.columns.squaredNorm(), cfg.max_tx_power * (1.0 + 1e-6));
  EXPECT_NEAR(lam.back(), energy_efficiency(ch, d.beamformer, cfg), 1e-9 * lam.back());
}

TEST(DesignDigital, TraceStreamIsLineDelimited) {
  const ScenarioConfig cfg = table1_config();
  std::mt19937_64 rng(4);
  const ChannelSet ch = generate_channels(cfg, rng);
  std::ostringstream out;
  DinkelbachOptions opts;
  opts.trace = &out;
  const DigitalDesign d = design_digital(ch, cfg, opts);
  std::istringstream in(out.str());
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    EXPECT_TRUE(nlohmann::json::accept(line)) << line;
    ++n;
  }
  EXPECT_GE(n, d.trace.iterations);
}
