#include "beamkit/model.hpp"

#include <cmath>
#include <stdexcept>

namespace beamkit {

CVector steering_vector(double theta, int n_tx, double spacing, double wavelength) {
  if (!std::isfinite(theta)) throw std::invalid_argument("steering_vector: non-finite angle");
  if (n_tx < 1) throw std::invalid_argument("steering_vector: n_tx must be positive");
  if (!(wavelength > 0.0)) throw std::invalid_argument("steering_vector: wavelength must be positive");
  const double phase_step = 2.0 * kPi / wavelength * spacing * std::cos(theta);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_tx));
  CVector a(n_tx);
  for (int n = 0; n < n_tx; ++n) a(n) = std::polar(scale, phase_step * n);
  return a;
}

double path_loss_db(double distance, double intercept, double exponent, double shadowing) {
  if (!(distance > 0.0)) throw std::invalid_argument("path_loss_db: distance must be positive");
  return intercept + 10.0 * exponent * std::log10(distance) + shadowing;
}

namespace {

// Laplacian centered at zero with the given standard deviation, truncated to
// [-limit, limit]. Inverse-CDF sampling on the truncated support.
double truncated_laplacian(std::mt19937_64& rng, double stddev, double limit) {
  const double b = stddev / std::sqrt(2.0);
  auto cdf = [b](double x) {
    return x < 0.0 ? 0.5 * std::exp(x / b) : 1.0 - 0.5 * std::exp(-x / b);
  };
  auto inv = [b](double u) {
    return u < 0.5 ? b * std::log(2.0 * u) : -b * std::log(2.0 * (1.0 - u));
  };
  std::uniform_real_distribution<double> uni(cdf(-limit), cdf(limit));
  double u = uni(rng);
  // uniform_real_distribution may return its lower bound, which is 0 when the
  // truncation is far in the tail.
  if (u <= 0.0) u = std::nextafter(0.0, 1.0);
  return inv(u);
}

}  // namespace

ChannelSet generate_channels(const ScenarioConfig& cfg, std::mt19937_64& rng,
                             const ChannelOptions& opts) {
  const int m_users = cfg.n_users;
  const int n_tx = cfg.n_tx;
  const double spread = kPi / (2.0 * n_tx);

  ChannelSet ch;
  ch.path_gains.resize(m_users);
  ch.path_angles.resize(m_users);
  ch.pathloss_db.resize(m_users);

  std::normal_distribution<double> shadow(0.0, cfg.shadowing_std);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uniform_angle(-kPi, kPi);

  for (int m = 0; m < m_users; ++m) {
    const int np = cfg.n_paths_per_user[m];
    const double shadowing = cfg.shadowing_std > 0.0 ? shadow(rng) : 0.0;
    const double pl = path_loss_db(cfg.user_distances[m], cfg.pathloss_intercept,
                                   cfg.pathloss_exponent, shadowing);
    ch.pathloss_db[m] = pl;
    const double variance = static_cast<double>(n_tx) / np * std::pow(10.0, -0.1 * pl);
    const double component_std = std::sqrt(variance / 2.0);
    const double mean_angle = opts.uniform_mean_angles ? uniform_angle(rng) : cfg.user_angles[m];
    for (int i = 0; i < np; ++i) {
      const double re = gauss(rng) * component_std;
      const double im = gauss(rng) * component_std;
      ch.path_gains[m].emplace_back(re, im);
      ch.path_angles[m].push_back(mean_angle + truncated_laplacian(rng, spread, kPi / 2.0));
    }
  }
  ch.rows = assemble_rows(ch, n_tx, cfg.antenna_spacing, cfg.carrier_wavelength);
  return ch;
}

CMatrix assemble_rows(const ChannelSet& ch, int n_tx, double spacing, double wavelength) {
  const int m_users = static_cast<int>(ch.path_gains.size());
  CMatrix rows = CMatrix::Zero(m_users, n_tx);
  for (int m = 0; m < m_users; ++m) {
    for (std::size_t i = 0; i < ch.path_gains[m].size(); ++i) {
      rows.row(m) += ch.path_gains[m][i] *
                     steering_vector(ch.path_angles[m][i], n_tx, spacing, wavelength).adjoint();
    }
  }
  return rows;
}

ChannelSet line_of_sight_channels(const std::vector<double>& angles, int n_tx, double spacing,
                                  double wavelength) {
  ChannelSet ch;
  const int m_users = static_cast<int>(angles.size());
  for (int m = 0; m < m_users; ++m) {
    ch.path_gains.push_back({cdouble(1.0, 0.0)});
    ch.path_angles.push_back({angles[m]});
    ch.pathloss_db.push_back(0.0);
  }
  ch.rows = assemble_rows(ch, n_tx, spacing, wavelength);
  return ch;
}

}  // namespace beamkit
