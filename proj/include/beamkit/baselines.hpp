#pragma once

#include <vector>

#include "beamkit/config.hpp"
#include "beamkit/hbf.hpp"
#include "beamkit/metrics.hpp"

namespace beamkit {

/// Unit-norm steering atoms on a grid uniform in cos(theta).
struct SteeringDictionary {
  CMatrix atoms;  // N_t x G
  std::vector<double> angles;

  static SteeringDictionary uniform_cosine(int n_tx, int grid, double spacing, double wavelength);
  int size() const { return static_cast<int>(atoms.cols()); }
};

struct OmpResult {
  HybridBeamformer beamformer;
  std::vector<int> selected;
  /// ||target - F_RF F_BB||_F after each selection (before the power rescale).
  std::vector<double> residual_norms;
};

/// Greedy atom selection on the residual correlation, least-squares
/// baseband, power rescale to p_max.
OmpResult omp_hybrid(const CMatrix& target, const SteeringDictionary& dict, int m_t, double p_max);

/// Energy efficiency with one RF chain per antenna.
double fully_digital_ee(const ChannelSet& channels, const DigitalBeamformer& f,
                        const ScenarioConfig& cfg);

}  // namespace beamkit
