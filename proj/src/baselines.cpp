#include "beamkit/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace beamkit {

SteeringDictionary SteeringDictionary::uniform_cosine(int n_tx, int grid, double spacing,
                                                      double wavelength) {
  if (grid < 1) throw std::invalid_argument("SteeringDictionary: grid must be positive");
  SteeringDictionary d;
  d.atoms.resize(n_tx, grid);
  for (int g = 0; g < grid; ++g) {
    const double c = -1.0 + (2.0 * g + 1.0) / grid;
    const double theta = std::acos(c);
    d.angles.push_back(theta);
    d.atoms.col(g) = steering_vector(theta, n_tx, spacing, wavelength);
  }
  return d;
}

OmpResult omp_hybrid(const CMatrix& target, const SteeringDictionary& dict, int m_t, double p_max) {
  if (m_t < 1) throw std::invalid_argument("omp_hybrid: need at least one RF chain");
  if (dict.size() < m_t) throw std::invalid_argument("omp_hybrid: dictionary smaller than M_t");
  if (dict.atoms.rows() != target.rows()) throw std::invalid_argument("omp_hybrid: row mismatch");

  const Eigen::Index n = target.rows();
  OmpResult out;
  CMatrix chosen(n, 0);
  CMatrix residual = target;
  std::vector<bool> used(dict.size(), false);
  for (int i = 0; i < m_t; ++i) {
    const RVector score = (dict.atoms.adjoint() * residual).rowwise().squaredNorm();
    int best = -1;
    for (int g = 0; g < dict.size(); ++g) {
      if (!used[g] && (best < 0 || score(g) > score(best))) best = g;
    }
    used[best] = true;
    out.selected.push_back(best);
    chosen.conservativeResize(n, chosen.cols() + 1);
    chosen.col(chosen.cols() - 1) = dict.atoms.col(best);
    const CMatrix coeffs = chosen.colPivHouseholderQr().solve(target);
    residual = target - chosen * coeffs;
    out.residual_norms.push_back(residual.norm());
  }

  // Steering atoms are constant-modulus, so scaling by sqrt(N_t) makes them
  // unit-modulus.
  CMatrix analog(n, m_t);
  for (int j = 0; j < m_t; ++j) {
    const CVector a = chosen.col(j);
    for (Eigen::Index r = 0; r < n; ++r) analog(r, j) = a(r) / std::abs(a(r));
  }
  CMatrix baseband = ls_baseband(analog, target);
  const double power = (analog * baseband).squaredNorm();
  if (power > p_max) baseband *= std::sqrt(p_max / power);
  out.beamformer.analog = std::move(analog);
  out.beamformer.baseband = std::move(baseband);
  return out;
}

double fully_digital_ee(const ChannelSet& channels, const DigitalBeamformer& f,
                        const ScenarioConfig& cfg) {
  return sum_rate(channels, f, cfg.noise_power) /
         dissipated_power(f, cfg.amplifier_efficiency, cfg.n_tx, cfg.rfc_static_power);
}

}  // namespace beamkit
