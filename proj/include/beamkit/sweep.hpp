#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "beamkit/config.hpp"
#include "beamkit/pipeline.hpp"
#include "json.hpp"

namespace beamkit {

enum class SweepKind { kSnr, kGamma, kRfc, kConvergence, kBeampattern };

std::string kind_name(SweepKind k);
SweepKind parse_kind(const std::string& name);

/// snr: -10..30 dB step 5; gamma: 1..13 dB step 2; rfc: 4..12; convergence:
/// {4, 6}; beampattern: -90..90 deg step 1.
std::vector<double> default_grid(SweepKind k);

/// "a,b,c" or "start:stop:step" (inclusive).
std::vector<double> parse_grid(const std::string& text);

struct SweepSpec {
  SweepKind kind = SweepKind::kSnr;
  /// dB for snr/gamma, RF-chain counts for rfc/convergence, degrees for
  /// beampattern (in the angle convention below).
  std::vector<double> grid;
  int trials = 50;
  ScenarioConfig base;
  std::vector<Method> methods{Method::kProposed, Method::kOmp, Method::kFdb};
  /// Trial t uses channel seed base_seed + t.
  std::uint64_t seed = 1;
  /// SINR floors of the beampattern sweep, dB.
  std::vector<double> tau_db{10.0, 15.0};
  /// 0: BEAMKIT_THREADS or the OpenMP default.
  int threads = 0;
  /// Record wall time; off keeps the CSV byte-identical across runs.
  bool timing = false;
  AngleConvention angles = AngleConvention::kFigure;
  PipelineOptions pipeline{};

  void validate() const;
  /// Values written to the sweep_value column.
  std::vector<double> sweep_values() const;
};

/// Scenario at one sweep value.
ScenarioConfig scenario_at(const SweepSpec& spec, double value);

struct SweepRow {
  double sweep_value = 0.0;
  Method method = Method::kProposed;
  int trial = 0;
  DesignReport report;
};

struct TraceRow {
  double sweep_value = 0.0;
  Method method = Method::kProposed;
  int trial = 0;
  std::vector<double> ee;
  bool feasible = true;
};

struct PatternRow {
  double tau_db = 0.0;
  Method method = Method::kProposed;
  int trial = 0;
  RVector gain;  // relative to P_t / N_t, one per grid angle
  bool feasible = true;
};

struct SweepResult {
  SweepSpec spec;
  std::vector<SweepRow> rows;        // sorted by sweep value, method, trial
  std::vector<TraceRow> traces;      // convergence only
  std::vector<PatternRow> patterns;  // beampattern only
};

SweepResult run_sweep(const SweepSpec& spec);

/// The bit-exact per-trial header.
const std::string& csv_header();

void write_rows_csv(const SweepResult& r, std::ostream& out);
void write_agg_csv(const SweepResult& r, std::ostream& out);
void write_trace_csv(const SweepResult& r, std::ostream& out);
void write_trace_agg_csv(const SweepResult& r, std::ostream& out);
nlohmann::json meta_json(const SweepResult& r);

/// Writes <kind>.csv, <kind>_agg.csv, meta.json and, for convergence and
/// beampattern, <kind>_trace.csv and <kind>_trace_agg.csv. Returns the paths.
std::vector<std::string> write_outputs(const SweepResult& r, const std::string& out_dir);

/// Shortest round-trip decimal form; "nan" for non-finite values.
std::string format_number(double v);

}  // namespace beamkit
