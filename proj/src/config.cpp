#include "beamkit/config.hpp"

#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "beamkit/errors.hpp"
#include "beamkit/types.hpp"

namespace beamkit {

namespace {

using nlohmann::json;

const std::set<std::string>& known_fields() {
  static const std::set<std::string> fields = {
      "n_tx",           "n_rfc",
      "n_users",        "n_targets",
      "n_streams",      "carrier_wavelength",
      "antenna_spacing", "n_paths_per_user",
      "noise_power",    "max_tx_power",
      "sinr_thresholds", "beampattern_thresholds",
      "amplifier_efficiency", "rfc_static_power",
      "user_angles",    "target_angles",
      "user_distances", "pathloss_intercept",
      "pathloss_exponent", "shadowing_std",
      "tol_dinkelbach", "tol_factorization",
      "tol_power",      "rng_seed"};
  return fields;
}

[[noreturn]] void fail(const std::string& field, const std::string& why) {
  throw ConfigError("config field '" + field + "': " + why, field);
}

const json& require(const json& doc, const std::string& field) {
  auto it = doc.find(field);
  if (it == doc.end()) fail(field, "missing required field");
  return *it;
}

// "<number> <unit>" with optional whitespace.
bool split_unit(const std::string& s, double& value, std::string& unit) {
  static const std::regex re(R"(^\s*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*([A-Za-z]*)\s*$)");
  std::smatch m;
  if (!std::regex_match(s, m, re)) return false;
  value = std::stod(m[1].str());
  unit = m[2].str();
  return true;
}

double number(const json& v, const std::string& field) {
  if (!v.is_number()) fail(field, "expected a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& field) {
  if (!v.is_number_integer()) fail(field, "expected an integer");
  return v.get<int>();
}

double parse_angle(const json& v, const std::string& field, AngleConvention conv) {
  double theta = 0.0;
  if (v.is_number()) {
    theta = v.get<double>();
  } else if (v.is_string()) {
    double x;
    std::string unit;
    if (!split_unit(v.get<std::string>(), x, unit)) fail(field, "unparseable angle");
    if (unit == "deg") {
      theta = x * kPi / 180.0;
    } else if (unit == "rad" || unit.empty()) {
      theta = x;
    } else {
      fail(field, "unknown angle unit '" + unit + "'");
    }
  } else {
    fail(field, "expected an angle");
  }
  if (!std::isfinite(theta)) fail(field, "non-finite angle");
  return to_physical_angle(theta, conv);
}

template <typename F>
auto list_or_scalar(const json& v, int n, const std::string& field, F&& parse) {
  using T = decltype(parse(v, field));
  std::vector<T> out;
  if (v.is_array()) {
    if (static_cast<int>(v.size()) != n)
      fail(field, "expected " + std::to_string(n) + " entries, got " + std::to_string(v.size()));
    for (const auto& e : v) out.push_back(parse(e, field));
  } else {
    out.assign(n, parse(v, field));
  }
  return out;
}

}  // namespace

double parse_power_value(const json& v, const std::string& field) {
  if (v.is_number()) return v.get<double>();
  if (!v.is_string()) fail(field, "expected a number or a string with dB unit");
  double x;
  std::string unit;
  if (!split_unit(v.get<std::string>(), x, unit)) fail(field, "unparseable power value");
  if (unit == "dBm") return db_to_linear(x) * 1e-3;
  if (unit == "dBW" || unit == "dB") return db_to_linear(x);
  if (unit == "W" || unit.empty()) return x;
  if (unit == "mW") return x * 1e-3;
  fail(field, "unknown power unit '" + unit + "'");
}

double parse_ratio_value(const json& v, const std::string& field) {
  if (v.is_number()) return v.get<double>();
  if (!v.is_string()) fail(field, "expected a number or a string with dB unit");
  double x;
  std::string unit;
  if (!split_unit(v.get<std::string>(), x, unit)) fail(field, "unparseable ratio");
  if (unit == "dB") return db_to_linear(x);
  if (unit.empty()) return x;
  fail(field, "unknown ratio unit '" + unit + "'");
}

ScenarioConfig load_config(const json& doc, const LoadOptions& opts) {
  if (!doc.is_object()) throw ConfigError("config document must be a JSON object", "");
  for (const auto& [key, _] : doc.items()) {
    if (!known_fields().count(key)) fail(key, "unknown field");
  }

  ScenarioConfig cfg;
  cfg.n_tx = integer(require(doc, "n_tx"), "n_tx");
  cfg.n_rfc = integer(require(doc, "n_rfc"), "n_rfc");
  cfg.n_users = integer(require(doc, "n_users"), "n_users");
  cfg.n_targets = integer(require(doc, "n_targets"), "n_targets");
  cfg.n_streams = cfg.n_users + cfg.n_targets;
  if (doc.contains("n_streams")) {
    cfg.n_streams = integer(doc["n_streams"], "n_streams");
  }
  if (cfg.n_users < 0 || cfg.n_targets < 0) fail("n_users", "counts must be non-negative");

  cfg.carrier_wavelength = number(require(doc, "carrier_wavelength"), "carrier_wavelength");
  cfg.antenna_spacing = doc.contains("antenna_spacing")
                            ? number(doc["antenna_spacing"], "antenna_spacing")
                            : cfg.carrier_wavelength / 2.0;

  cfg.n_paths_per_user = list_or_scalar(require(doc, "n_paths_per_user"), cfg.n_users,
                                        "n_paths_per_user", integer);
  cfg.noise_power = parse_power_value(require(doc, "noise_power"), "noise_power");
  cfg.max_tx_power = parse_power_value(require(doc, "max_tx_power"), "max_tx_power");
  cfg.sinr_thresholds = list_or_scalar(require(doc, "sinr_thresholds"), cfg.n_users,
                                       "sinr_thresholds", parse_ratio_value);
  cfg.beampattern_thresholds =
      list_or_scalar(require(doc, "beampattern_thresholds"), cfg.n_targets,
                     "beampattern_thresholds", parse_ratio_value);
  cfg.amplifier_efficiency =
      number(require(doc, "amplifier_efficiency"), "amplifier_efficiency");
  cfg.rfc_static_power = parse_power_value(require(doc, "rfc_static_power"), "rfc_static_power");

  auto angle = [&](const json& v, const std::string& f) { return parse_angle(v, f, opts.angles); };
  const auto& ua = require(doc, "user_angles");
  if (!ua.is_array()) fail("user_angles", "expected a list");
  cfg.user_angles = list_or_scalar(ua, cfg.n_users, "user_angles", angle);
  const auto& ta = require(doc, "target_angles");
  if (!ta.is_array()) fail("target_angles", "expected a list");
  cfg.target_angles = list_or_scalar(ta, cfg.n_targets, "target_angles", angle);

  cfg.user_distances = doc.contains("user_distances")
                           ? list_or_scalar(doc["user_distances"], cfg.n_users,
                                            "user_distances", number)
                           : std::vector<double>(cfg.n_users, 50.0);
  cfg.pathloss_intercept = number(require(doc, "pathloss_intercept"), "pathloss_intercept");
  cfg.pathloss_exponent = number(require(doc, "pathloss_exponent"), "pathloss_exponent");
  cfg.shadowing_std = number(require(doc, "shadowing_std"), "shadowing_std");
  cfg.tol_dinkelbach = number(require(doc, "tol_dinkelbach"), "tol_dinkelbach");
  cfg.tol_factorization = number(require(doc, "tol_factorization"), "tol_factorization");
  cfg.tol_power = number(require(doc, "tol_power"), "tol_power");
  const auto& seed = require(doc, "rng_seed");
  if (!seed.is_number_integer()) fail("rng_seed", "expected an integer");
  cfg.rng_seed = seed.get<std::uint64_t>();

  cfg.validate();
  return cfg;
}

ScenarioConfig load_config_file(const std::string& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'", "");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON in '") + path + "': " + e.what(), "");
  }
  return load_config(doc, opts);
}

void ScenarioConfig::validate() const {
  auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
  if (n_tx < 1) fail("n_tx", "must be positive");
  if (n_rfc < 1) fail("n_rfc", "must be positive");
  if (n_streams != n_users + n_targets) fail("n_streams", "must equal n_users + n_targets");
  if (n_rfc != n_streams) fail("n_rfc", "must equal n_streams (one RF chain per stream)");
  if (n_rfc > n_tx) fail("n_rfc", "cannot exceed n_tx");
  if (!positive(carrier_wavelength)) fail("carrier_wavelength", "must be positive");
  if (!positive(antenna_spacing)) fail("antenna_spacing", "must be positive");
  if (static_cast<int>(n_paths_per_user.size()) != n_users)
    fail("n_paths_per_user", "length must equal n_users");
  for (int np : n_paths_per_user)
    if (np < 1) fail("n_paths_per_user", "must be positive");
  if (!positive(noise_power)) fail("noise_power", "must be positive");
  if (!positive(max_tx_power)) fail("max_tx_power", "must be positive");
  if (static_cast<int>(sinr_thresholds.size()) != n_users)
    fail("sinr_thresholds", "length must equal n_users");
  for (double t : sinr_thresholds)
    if (!positive(t)) fail("sinr_thresholds", "must be positive");
  if (static_cast<int>(beampattern_thresholds.size()) != n_targets)
    fail("beampattern_thresholds", "length must equal n_targets");
  for (double g : beampattern_thresholds)
    if (!positive(g)) fail("beampattern_thresholds", "must be positive");
  if (!(amplifier_efficiency >= 0.0 && amplifier_efficiency <= 1.0))
    fail("amplifier_efficiency", "must lie in [0, 1]");
  if (!positive(rfc_static_power)) fail("rfc_static_power", "must be positive");
  if (static_cast<int>(user_angles.size()) != n_users)
    fail("user_angles", "length must equal n_users");
  if (static_cast<int>(target_angles.size()) != n_targets)
    fail("target_angles", "length must equal n_targets");
  for (double a : user_angles)
    if (!(a > -kPi && a <= kPi)) fail("user_angles", "must lie in (-pi, pi]");
  for (double a : target_angles)
    if (!(a > -kPi && a <= kPi)) fail("target_angles", "must lie in (-pi, pi]");
  if (static_cast<int>(user_distances.size()) != n_users)
    fail("user_distances", "length must equal n_users");
  for (double d : user_distances)
    if (!positive(d)) fail("user_distances", "must be positive");
  if (!std::isfinite(pathloss_intercept)) fail("pathloss_intercept", "must be finite");
  if (!std::isfinite(pathloss_exponent)) fail("pathloss_exponent", "must be finite");
  if (!(shadowing_std >= 0.0)) fail("shadowing_std", "must be non-negative");
  if (!positive(tol_dinkelbach)) fail("tol_dinkelbach", "must be positive");
  if (!positive(tol_factorization)) fail("tol_factorization", "must be positive");
  if (!positive(tol_power)) fail("tol_power", "must be positive");
}

double ScenarioConfig::beampattern_floor(int l) const {
  return beampattern_thresholds.at(l) * max_tx_power / n_tx;
}

nlohmann::json to_json(const ScenarioConfig& cfg) {
  json j;
  j["n_tx"] = cfg.n_tx;
  j["n_rfc"] = cfg.n_rfc;
  j["n_users"] = cfg.n_users;
  j["n_targets"] = cfg.n_targets;
  j["n_streams"] = cfg.n_streams;
  j["carrier_wavelength"] = cfg.carrier_wavelength;
  j["antenna_spacing"] = cfg.antenna_spacing;
  j["n_paths_per_user"] = cfg.n_paths_per_user;
  j["noise_power"] = cfg.noise_power;
  j["max_tx_power"] = cfg.max_tx_power;
  j["sinr_thresholds"] = cfg.sinr_thresholds;
  j["beampattern_thresholds"] = cfg.beampattern_thresholds;
  j["amplifier_efficiency"] = cfg.amplifier_efficiency;
  j["rfc_static_power"] = cfg.rfc_static_power;
  j["user_angles"] = cfg.user_angles;
  j["target_angles"] = cfg.target_angles;
  j["user_distances"] = cfg.user_distances;
  j["pathloss_intercept"] = cfg.pathloss_intercept;
  j["pathloss_exponent"] = cfg.pathloss_exponent;
  j["shadowing_std"] = cfg.shadowing_std;
  j["tol_dinkelbach"] = cfg.tol_dinkelbach;
  j["tol_factorization"] = cfg.tol_factorization;
  j["tol_power"] = cfg.tol_power;
  j["rng_seed"] = cfg.rng_seed;
  return j;
}

double to_physical_angle(double radians, AngleConvention conv) {
  double theta = radians;
  if (conv == AngleConvention::kFigure) theta += kPi / 2.0;
  theta = std::remainder(theta, 2.0 * kPi);
  if (theta <= -kPi) theta += 2.0 * kPi;
  return theta;
}

ScenarioConfig table1_config() {
  ScenarioConfig cfg;
  cfg.n_tx = 64;
  cfg.n_rfc = 4;
  cfg.n_users = 2;
  cfg.n_targets = 2;
  cfg.n_streams = 4;
  cfg.carrier_wavelength = kSpeedOfLight / 28e9;
  cfg.antenna_spacing = cfg.carrier_wavelength / 2.0;
  cfg.n_paths_per_user = {10, 10};
  cfg.noise_power = db_to_linear(-91.0) * 1e-3;
  cfg.max_tx_power = db_to_linear(20.0);
  cfg.sinr_thresholds = {db_to_linear(10.0), db_to_linear(10.0)};
  cfg.beampattern_thresholds = {db_to_linear(5.0), db_to_linear(5.0)};
  cfg.amplifier_efficiency = 0.3;
  cfg.rfc_static_power = db_to_linear(30.0) * 1e-3;
  auto fig = [](double deg) { return deg * kPi / 180.0 + kPi / 2.0; };
  cfg.user_angles = {fig(30.0), fig(60.0)};
  cfg.target_angles = {fig(-60.0), fig(-20.0)};
  cfg.user_distances = {50.0, 50.0};
  cfg.pathloss_intercept = 61.4;
  cfg.pathloss_exponent = 2.0;
  cfg.shadowing_std = 5.8;
  cfg.tol_dinkelbach = 1e-3;
  cfg.tol_factorization = 1e-3;
  cfg.tol_power = 1e-3;
  cfg.rng_seed = 1;
  return cfg;
}

}  // namespace beamkit
