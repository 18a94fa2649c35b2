#include "beamkit/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace beamkit {

double sinr(const ChannelSet& channels, const DigitalBeamformer& f, int m, double noise) {
  if (m < 0 || m >= channels.n_users()) throw std::out_of_range("sinr: user index");
  const CVector gains = (channels.rows.row(m) * f.columns).transpose();
  const double signal = std::norm(gains(m));
  const double interference = gains.squaredNorm() - signal;
  return signal / (interference + noise);
}

std::vector<double> all_sinr(const ChannelSet& channels, const DigitalBeamformer& f,
                             double noise) {
  std::vector<double> out(channels.n_users());
  for (int m = 0; m < channels.n_users(); ++m) out[m] = sinr(channels, f, m, noise);
  return out;
}

double sum_rate(const ChannelSet& channels, const DigitalBeamformer& f, double noise) {
  double rate = 0.0;
  for (int m = 0; m < channels.n_users(); ++m) rate += std::log2(1.0 + sinr(channels, f, m, noise));
  return rate;
}

double beampattern_gain(double theta, const DigitalBeamformer& f, double spacing,
                        double wavelength) {
  const CVector a = steering_vector(theta, f.n_tx(), spacing, wavelength);
  return (a.adjoint() * f.columns).squaredNorm();
}

double dissipated_power(const DigitalBeamformer& f, double eta, int n_rfc, double p_static) {
  return eta * f.total_power() + n_rfc * p_static;
}

double energy_efficiency(const ChannelSet& channels, const DigitalBeamformer& f,
                         const ScenarioConfig& cfg) {
  return sum_rate(channels, f, cfg.noise_power) /
         dissipated_power(f, cfg.amplifier_efficiency, cfg.n_rfc, cfg.rfc_static_power);
}

CMatrix build_q(const ChannelSet& channels, const DigitalBeamformer& f_prev, int m, double noise) {
  if (m < 0 || m >= channels.n_users()) throw std::out_of_range("build_q: user index");
  const CVector h = channels.column(m);
  double phi = noise;
  if (f_prev.n_streams() > 0) {
    const CVector gains = (channels.rows.row(m) * f_prev.columns).transpose();
    for (int n = 0; n < gains.size(); ++n)
      if (n != m) phi += std::norm(gains(n));
  }
  return h * h.adjoint() / phi;
}

}  // namespace beamkit
