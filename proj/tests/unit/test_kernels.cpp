#include <gtest/gtest.h>

#include <cstdlib>
#include <random>

#include "beamkit/kernels.hpp"
#include "beamkit/metrics.hpp"

using namespace beamkit;

namespace {

constexpr double kLambda = 0.01;

CMatrix random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = cdouble(g(rng), g(rng));
  return m;
}

std::vector<double> angle_grid(int n) {
  std::vector<double> a;
  for (int i = 0; i < n; ++i) a.push_back(-kPi + 2.0 * kPi * i / n);
  return a;
}

}  // namespace

TEST(BeampatternScan, SerialMatchesMetric) {
  std::mt19937_64 rng(1);
  const CMatrix f = random_matrix(16, 4, rng);
  const auto angles = angle_grid(37);
  const RVector g = beampattern_scan_serial(f, angles, kLambda / 2, kLambda);
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const double ref = beampattern_gain(angles[i], DigitalBeamformer(f), kLambda / 2, kLambda);
    EXPECT_NEAR(g(static_cast<Eigen::Index>(i)), ref, 1e-12 * std::max(1.0, ref));
  }
}

TEST(BeampatternScan, ParallelEqualsSerial) {
  std::mt19937_64 rng(2);
  for (int threads : {1, 2, 3, 4}) {
    const CMatrix f = random_matrix(64, 4, rng);
    const auto angles = angle_grid(181);
    const RVector s = beampattern_scan_serial(f, angles, kLambda / 2, kLambda);
    const RVector p = beampattern_scan(f, angles, kLambda / 2, kLambda, threads);
    // Each angle is computed independently, so the results agree bit for bit.
    EXPECT_EQ((s - p).cwiseAbs().maxCoeff(), 0.0) << threads;
  }
  EXPECT_EQ(beampattern_scan(CMatrix::Zero(4, 2), {}, kLambda / 2, kLambda).size(), 0);
}

TEST(GainMatrix, ParallelEqualsSerialAndMatchesProducts) {
  std::mt19937_64 rng(3);
  for (int threads : {1, 2, 4}) {
    const CMatrix rows = random_matrix(6, 32, rng);
    const CMatrix f = random_matrix(32, 5, rng);
    const RMatrix s = gain_matrix_serial(rows, f);
    const RMatrix p = gain_matrix(rows, f, threads);
    EXPECT_EQ((s - p).cwiseAbs().maxCoeff(), 0.0) << threads;
    const RMatrix ref = (rows * f).cwiseAbs2();
    EXPECT_LT((s - ref).cwiseAbs().maxCoeff(), 1e-10 * ref.maxCoeff());
  }
}

TEST(Threads, EnvironmentOverride) {
  setenv("BEAMKIT_THREADS", "3", 1);
  EXPECT_EQ(configured_threads(), 3);
  setenv("BEAMKIT_THREADS", "junk", 1);
  EXPECT_GE(configured_threads(), 1);
  unsetenv("BEAMKIT_THREADS");
  EXPECT_GE(configured_threads(), 1);
}
