#pragma once

#include <string>
#include <vector>

#include "beamkit/config.hpp"
#include "beamkit/model.hpp"
#include "beamkit/types.hpp"

namespace beamkit {

/// Fully-digital transmit beamformer: N_t x K, user streams first, then
/// target streams.
struct DigitalBeamformer {
  CMatrix columns;

  DigitalBeamformer() = default;
  explicit DigitalBeamformer(CMatrix f) : columns(std::move(f)) {}

  int n_tx() const { return static_cast<int>(columns.rows()); }
  int n_streams() const { return static_cast<int>(columns.cols()); }
  double total_power() const { return columns.squaredNorm(); }
};

/// SINR of user m; interference runs over every other stream column.
double sinr(const ChannelSet& channels, const DigitalBeamformer& f, int m, double noise);
std::vector<double> all_sinr(const ChannelSet& channels, const DigitalBeamformer& f, double noise);

/// Sum over users of log2(1 + SINR), bits/s/Hz.
double sum_rate(const ChannelSet& channels, const DigitalBeamformer& f, double noise);

/// a^H(theta) F F^H a(theta).
double beampattern_gain(double theta, const DigitalBeamformer& f, double spacing,
                        double wavelength);

double dissipated_power(const DigitalBeamformer& f, double eta, int n_rfc, double p_static);

/// Sum-rate over dissipated power with the hybrid (n_rfc chains) power model.
double energy_efficiency(const ChannelSet& channels, const DigitalBeamformer& f,
                         const ScenarioConfig& cfg);

/// Rank-one SINR matrix h_m h_m^H / Phi_m, where Phi_m is the scalar
/// interference-plus-noise seen by user m under f_prev. Then
/// f_m^H Q_m f_m reproduces sinr() at f = f_prev.
CMatrix build_q(const ChannelSet& channels, const DigitalBeamformer& f_prev, int m, double noise);

/// Everything a single design run reports.
struct DesignReport {
  double energy_efficiency = 0.0;
  double sum_rate = 0.0;
  std::vector<double> per_user_sinr;
  std::vector<double> per_target_gain;
  double dissipated_power = 0.0;
  double tx_power = 0.0;
  std::vector<double> lambda_trace;
  double factorization_error = 0.0;
  std::vector<double> rank_one_defect;
  int dinkelbach_iterations = 0;
  int hybrid_rounds = 0;
  int rcg_iterations = 0;
  double wall_time = 0.0;
  bool feasible = true;
  bool converged = true;
  bool monotone = true;
  /// Penalty continuation met the budget without the final rescale.
  bool continuation_ok = true;
  std::string infeasible_reason;
};

}  // namespace beamkit
