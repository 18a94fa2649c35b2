#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "beamkit/config.hpp"
#include "beamkit/metrics.hpp"
#include "beamkit/model.hpp"

using namespace beamkit;

namespace {

CMatrix random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = cdouble(g(rng), g(rng));
  return m;
}

ChannelSet channels_from_rows(const CMatrix& rows) {
  ChannelSet ch;
  ch.rows = rows;
  return ch;
}

}  // namespace

TEST(Sinr, NoInterference) {
  CMatrix h(1, 2);
  h << 1.0, 0.0;
  CMatrix f(2, 2);
  f << 2.0, 0.0, 0.0, 3.0;
  EXPECT_NEAR(sinr(channels_from_rows(h), DigitalBeamformer(f), 0, 1.0), 4.0, 1e-15);
}

TEST(Sinr, EqualInterference) {
  CMatrix h(1, 2);
  h << 1.0, 0.0;
  CMatrix f(2, 2);
  f << 1.0, 1.0, 0.0, 0.0;
  EXPECT_NEAR(sinr(channels_from_rows(h), DigitalBeamformer(f), 0, 1.0), 0.5, 1e-15);
}

TEST(Sinr, ScalarSummationOracle) {
  std::mt19937_64 rng(7);
  const CMatrix rows = random_matrix(2, 4, rng);
  const CMatrix f = random_matrix(4, 3, rng);
  const double noise = 0.37;
  for (int m = 0; m < 2; ++m) {
    double num = 0.0, den = noise;
    for (int n = 0; n < 3; ++n) {
      double re = 0.0, im = 0.0;
      for (int i = 0; i < 4; ++i) {
        // h_m^H f_n with the stored row already conjugated.
        const double a = rows(m, i).real(), b = rows(m, i).imag();
        const double c = f(i, n).real(), d = f(i, n).imag();
        re += a * c - b * d;
        im += a * d + b * c;
      }
      const double p = re * re + im * im;
      (n == m ? num : den) += p;
    }
    EXPECT_NEAR(sinr(channels_from_rows(rows), DigitalBeamformer(f), m, noise), num / den,
                1e-12 * num / den);
  }
}

TEST(SumRate, Examples) {
  CMatrix h(2, 2);
  h << 1.0, 0.0, 0.0, 1.0;
  CMatrix f = CMatrix::Identity(2, 2);
  EXPECT_NEAR(sum_rate(channels_from_rows(h), DigitalBeamformer(f), 1.0), 2.0, 1e-15);
  f(0, 0) = std::sqrt(3.0);
  f(1, 1) = std::sqrt(15.0);
  EXPECT_NEAR(sum_rate(channels_from_rows(h), DigitalBeamformer(f), 1.0), 6.0, 1e-14);
  EXPECT_EQ(sum_rate(channels_from_rows(h), DigitalBeamformer(CMatrix::Zero(2, 2)), 1.0), 0.0);
}

TEST(Beampattern, SteeredColumn) {
  const double lam = 0.01;
  const CVector a = steering_vector(1.1, 16, lam / 2, lam);
  const DigitalBeamformer f(CMatrix(std::sqrt(5.0) * a));
  EXPECT_NEAR(beampattern_gain(1.1, f, lam / 2, lam), 5.0, 1e-12);
  const DigitalBeamformer zero(CMatrix::Zero(16, 3));
  EXPECT_EQ(beampattern_gain(0.4, zero, lam / 2, lam), 0.0);
}

// a^H F F^H a = E|a^H F x|^2 for x with unit-variance independent entries.
TEST(Beampattern, MonteCarloExpectationOracle) {
  std::mt19937_64 rng(3);
  const double lam = 0.01;
  const CMatrix f = random_matrix(8, 4, rng);
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  for (double th : {0.3, 1.0, 1.6, 2.5}) {
    const CVector a = steering_vector(th, 8, lam / 2, lam);
    const Eigen::RowVectorXcd af = a.adjoint() * f;
    double acc = 0.0;
    constexpr int kDraws = 100000;
    for (int t = 0; t < kDraws; ++t) {
      cdouble s = 0.0;
      for (int k = 0; k < 4; ++k) s += af(k) * cdouble(g(rng), g(rng));
      acc += std::norm(s);
    }
    const double exact = beampattern_gain(th, DigitalBeamformer(f), lam / 2, lam);
    EXPECT_NEAR(acc / kDraws, exact, 0.02 * exact) << th;
  }
}

TEST(Beampattern, UnitaryInvariance) {
  std::mt19937_64 rng(13);
  const double lam = 0.01;
  const CMatrix f = random_matrix(8, 4, rng);
  const Eigen::HouseholderQR<CMatrix> qr(random_matrix(4, 4, rng));
  const CMatrix u = qr.householderQ();
  for (double th : {0.2, 0.9, 2.0}) {
    EXPECT_NEAR(beampattern_gain(th, DigitalBeamformer(f), lam / 2, lam),
                beampattern_gain(th, DigitalBeamformer(CMatrix(f * u)), lam / 2, lam), 1e-10);
  }
}

TEST(Sinr, ColumnPhaseInvariance) {
  std::mt19937_64 rng(21);
  const CMatrix rows = random_matrix(3, 6, rng);
  CMatrix f = random_matrix(6, 4, rng);
  const auto before = all_sinr(channels_from_rows(rows), DigitalBeamformer(f), 0.1);
  for (int n = 0; n < 4; ++n) f.col(n) *= std::polar(1.0, 0.7 * (n + 1));
  const auto after = all_sinr(channels_from_rows(rows), DigitalBeamformer(f), 0.1);
  for (int m = 0; m < 3; ++m) EXPECT_NEAR(before[m], after[m], 1e-12 * before[m]);
}

TEST(Power, Dissipated) {
  CMatrix f = CMatrix::Zero(4, 2);
  f(0, 0) = std::sqrt(6.0);
  f(1, 1) = 2.0;
  EXPECT_NEAR(dissipated_power(DigitalBeamformer(f), 0.3, 4, 1.0), 7.0, 1e-14);
  EXPECT_NEAR(dissipated_power(DigitalBeamformer(CMatrix::Zero(4, 2)), 0.3, 4, 1.0), 4.0, 0.0);
  EXPECT_NEAR(dissipated_power(DigitalBeamformer(f), 0.0, 4, 1.0), 4.0, 0.0);
}

TEST(EnergyEfficiency, Composition) {
  ScenarioConfig cfg = table1_config();
  std::mt19937_64 rng(1);
  const ChannelSet ch = generate_channels(cfg, rng);
  const CMatrix f = random_matrix(cfg.n_tx, cfg.n_streams, rng);
  const DigitalBeamformer bf(f);
  const double ee = energy_efficiency(ch, bf, cfg);
  const double expect = sum_rate(ch, bf, cfg.noise_power) /
                        dissipated_power(bf, cfg.amplifier_efficiency, cfg.n_rfc,
                                         cfg.rfc_static_power);
  EXPECT_NEAR(ee, expect, 1e-12 * expect);
  EXPECT_EQ(energy_efficiency(ch, DigitalBeamformer(CMatrix::Zero(cfg.n_tx, cfg.n_streams)), cfg),
            0.0);
}

TEST(BuildQ, SingleUserIdentity) {
  std::mt19937_64 rng(4);
  const CMatrix rows = random_matrix(1, 5, rng);
  const CMatrix f = random_matrix(5, 1, rng);
  const ChannelSet ch = channels_from_rows(rows);
  const CMatrix q = build_q(ch, DigitalBeamformer(f), 0, 0.2);
  const CVector h = ch.column(0);
  EXPECT_LT((q - h * h.adjoint() / 0.2).norm(), 1e-12 * q.norm());
  const double quad = (f.col(0).adjoint() * q * f.col(0))(0, 0).real();
  EXPECT_NEAR(quad, sinr(ch, DigitalBeamformer(f), 0, 0.2), 1e-10);
}

TEST(BuildQ, ZeroPreviousBeamformer) {
  std::mt19937_64 rng(5);
  const CMatrix rows = random_matrix(2, 4, rng);
  const ChannelSet ch = channels_from_rows(rows);
  const CMatrix q = build_q(ch, DigitalBeamformer(CMatrix::Zero(4, 3)), 1, 0.5);
  const CVector h = ch.column(1);
  EXPECT_LT((q - h * h.adjoint() / 0.5).norm(), 1e-12 * q.norm());
}

TEST(BuildQ, ReproducesSinrAndIsRankOnePsd) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const CMatrix rows = random_matrix(3, 8, rng);
    const CMatrix f = random_matrix(8, 5, rng);
    const ChannelSet ch = channels_from_rows(rows);
    for (int m = 0; m < 3; ++m) {
      const CMatrix q = build_q(ch, DigitalBeamformer(f), m, 0.3);
      EXPECT_LT((q - q.adjoint()).norm(), 1e-12 * q.norm());
      Eigen::SelfAdjointEigenSolver<CMatrix> es(q);
      EXPECT_GT(es.eigenvalues()(7), 0.0);
      EXPECT_LT(std::abs(es.eigenvalues()(6)), 1e-10 * es.eigenvalues()(7));
      EXPECT_GE(es.eigenvalues()(0), -1e-10 * es.eigenvalues()(7));
      const double quad = (f.col(m).adjoint() * q * f.col(m))(0, 0).real();
      const double s = sinr(ch, DigitalBeamformer(f), m, 0.3);
      EXPECT_NEAR(quad, s, 1e-10 * std::max(1.0, s));
      // trace(Q) = ||h||^2 / Phi.
      const double phi = rows.row(m).squaredNorm() / q.trace().real();
      EXPECT_NEAR(std::norm((rows.row(m) * f.col(m))(0, 0)) / (phi), s, 1e-10 * std::max(1.0, s));
    }
  }
}
