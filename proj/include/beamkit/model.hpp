#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "beamkit/config.hpp"
#include "beamkit/types.hpp"

namespace beamkit {

/// ULA response toward theta (cos-domain angle), unit Euclidean norm.
CVector steering_vector(double theta, int n_tx, double spacing, double wavelength);

/// Log-distance path loss with a caller-supplied shadowing draw, in dB.
double path_loss_db(double distance, double intercept, double exponent, double shadowing);

/// Per-user multipath channels. rows(m, :) holds h_m^H.
struct ChannelSet {
  CMatrix rows;                              // M x N_t
  std::vector<std::vector<cdouble>> path_gains;
  std::vector<std::vector<double>> path_angles;
  std::vector<double> pathloss_db;

  int n_users() const { return static_cast<int>(rows.rows()); }
  int n_tx() const { return static_cast<int>(rows.cols()); }
  /// h_m as a column vector.
  CVector column(int m) const { return rows.row(m).adjoint(); }
};

struct ChannelOptions {
  /// Draw each user's mean departure angle uniformly in (-pi, pi] instead of
  /// using the configured user angle.
  bool uniform_mean_angles = false;
};

/// One channel realization. The engine is advanced; identical engine state
/// and config give identical output.
ChannelSet generate_channels(const ScenarioConfig& cfg, std::mt19937_64& rng,
                             const ChannelOptions& opts = {});

/// Rebuilds the rows from stored path gains/angles.
CMatrix assemble_rows(const ChannelSet& ch, int n_tx, double spacing, double wavelength);

/// Single-path channel with unit gain toward each angle.
ChannelSet line_of_sight_channels(const std::vector<double>& angles, int n_tx,
                                  double spacing, double wavelength);

}  // namespace beamkit
