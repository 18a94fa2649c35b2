#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace beamkit {

/// How angle fields in a configuration document are read.
///
/// kFigure: values are plot-axis angles theta' measured from broadside and
/// are mapped to the array-response angle theta = theta' + pi/2.
/// kPhysical: values are already array-response angles (cos-domain).
enum class AngleConvention { kFigure, kPhysical };

/// Array-response angle of an angle given in the convention, wrapped to (-pi, pi].
double to_physical_angle(double radians, AngleConvention conv);

/// Physical and algorithmic constants of one scenario. All quantities are
/// stored in linear SI units (watts, meters, radians); dB-valued document
/// fields are converted once by load_config.
struct ScenarioConfig {
  int n_tx = 64;
  int n_rfc = 4;
  int n_users = 2;
  int n_targets = 2;
  int n_streams = 4;
  double carrier_wavelength = 0.0;
  double antenna_spacing = 0.0;
  std::vector<int> n_paths_per_user;
  double noise_power = 0.0;
  double max_tx_power = 0.0;
  std::vector<double> sinr_thresholds;
  /// Dimensionless gains; the floor in watts is gain * max_tx_power / n_tx.
  std::vector<double> beampattern_thresholds;
  double amplifier_efficiency = 0.3;
  double rfc_static_power = 1.0;
  std::vector<double> user_angles;
  std::vector<double> target_angles;
  std::vector<double> user_distances;
  double pathloss_intercept = 61.4;  // dB
  double pathloss_exponent = 2.0;
  double shadowing_std = 5.8;  // dB
  double tol_dinkelbach = 1e-3;
  double tol_factorization = 1e-3;
  double tol_power = 1e-3;
  std::uint64_t rng_seed = 1;

  /// Throws ConfigError naming the first offending field.
  void validate() const;

  /// Beampattern floor of target l in watts.
  double beampattern_floor(int l) const;
};

struct LoadOptions {
  AngleConvention angles = AngleConvention::kFigure;
};

ScenarioConfig load_config(const nlohmann::json& doc, const LoadOptions& opts = {});
ScenarioConfig load_config_file(const std::string& path, const LoadOptions& opts = {});

/// Resolved (linear, physical-angle) view of a config.
nlohmann::json to_json(const ScenarioConfig& cfg);

/// Parameter table of the reference scenario: 64 antennas, 4 RF chains,
/// 2 users at 30/60 deg, 2 targets at -60/-20 deg (plot convention), 28 GHz.
ScenarioConfig table1_config();

/// Parses "20 dB", "-91 dBm", "30 dBW" or a bare number (linear) to watts or
/// a linear ratio. Exposed for the CLI and tests.
double parse_power_value(const nlohmann::json& v, const std::string& field);
double parse_ratio_value(const nlohmann::json& v, const std::string& field);

}  // namespace beamkit
