#include "beamkit/sweep.hpp"

#include <omp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include "beamkit/kernels.hpp"
#include "beamkit/model.hpp"

namespace beamkit {

std::string kind_name(SweepKind k) {
  switch (k) {
    case SweepKind::kSnr: return "snr";
    case SweepKind::kGamma: return "gamma";
    case SweepKind::kRfc: return "rfc";
    case SweepKind::kConvergence: return "convergence";
    case SweepKind::kBeampattern: return "beampattern";
  }
  return "unknown";
}

SweepKind parse_kind(const std::string& name) {
  for (SweepKind k : {SweepKind::kSnr, SweepKind::kGamma, SweepKind::kRfc, SweepKind::kConvergence,
                      SweepKind::kBeampattern}) {
    if (kind_name(k) == name) return k;
  }
  throw std::invalid_argument("unknown sweep kind '" + name + "'");
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("bad grid value '" + s + "'");
    return v;
  };
  if (text.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(number(item));
    if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) {
      throw std::invalid_argument("grid range must be start:stop:step with step > 0");
    }
    const int n = static_cast<int>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9)) + 1;
    for (int i = 0; i < n; ++i) out.push_back(parts[0] + i * parts[2]);
  } else {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) out.push_back(number(item));
    }
  }
  if (out.empty()) throw std::invalid_argument("empty grid");
  return out;
}

std::vector<double> default_grid(SweepKind k) {
  switch (k) {
    case SweepKind::kSnr: return parse_grid("-10:30:5");
    case SweepKind::kGamma: return parse_grid("1:13:2");
    case SweepKind::kRfc: return parse_grid("4:12:1");
    case SweepKind::kConvergence: return {4.0, 6.0};
    case SweepKind::kBeampattern: return parse_grid("-90:90:1");
  }
  return {};
}

void SweepSpec::validate() const {
  if (grid.empty()) throw std::invalid_argument("sweep grid must not be empty");
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  if (methods.empty()) throw std::invalid_argument("at least one method is required");
  if (kind == SweepKind::kBeampattern && tau_db.empty()) {
    throw std::invalid_argument("beampattern sweep needs at least one tau value");
  }
  if (kind == SweepKind::kRfc || kind == SweepKind::kConvergence) {
    for (double v : grid) {
      if (v != std::round(v) || v - base.n_targets < 1) {
        throw std::invalid_argument("RF-chain counts must be integers above the target count");
      }
    }
  }
  base.validate();
}

std::vector<double> SweepSpec::sweep_values() const {
  return kind == SweepKind::kBeampattern ? tau_db : grid;
}

ScenarioConfig scenario_at(const SweepSpec& spec, double value) {
  ScenarioConfig cfg = spec.base;
  switch (spec.kind) {
    case SweepKind::kSnr:
      cfg.max_tx_power = db_to_linear(value);
      break;
    case SweepKind::kGamma:
      std::fill(cfg.beampattern_thresholds.begin(), cfg.beampattern_thresholds.end(),
                db_to_linear(value));
      break;
    case SweepKind::kBeampattern:
      std::fill(cfg.sinr_thresholds.begin(), cfg.sinr_thresholds.end(), db_to_linear(value));
      break;
    case SweepKind::kRfc:
    case SweepKind::kConvergence: {
      const int m_t = static_cast<int>(std::lround(value));
      const int users = m_t - cfg.n_targets;
      // Users start at the base angle farthest from broadside and step toward
      // broadside with the base spacing, compressed when it would cross it.
      const auto& base_angles = spec.base.user_angles;
      const double broadside = kPi / 2.0;
      const auto far_it = std::max_element(base_angles.begin(), base_angles.end(), [&](double a, double b) {
        return std::abs(a - broadside) < std::abs(b - broadside);
      });
      const double far = *far_it;
      const double lo = *std::min_element(base_angles.begin(), base_angles.end());
      const double hi = *std::max_element(base_angles.begin(), base_angles.end());
      const double dir = far > broadside ? -1.0 : 1.0;
      double step = hi - lo;
      if (users > 1) step = std::min(step, std::abs(far - broadside) / (users - 1));
      cfg.n_rfc = m_t;
      cfg.n_streams = m_t;
      cfg.n_users = users;
      cfg.user_angles.clear();
      if (users == static_cast<int>(base_angles.size())) {
        cfg.user_angles = base_angles;
      } else {
        for (int m = 0; m < users; ++m) cfg.user_angles.push_back(far + dir * m * step);
      }
      cfg.sinr_thresholds.assign(users, spec.base.sinr_thresholds.front());
      cfg.user_distances.assign(users, spec.base.user_distances.front());
      cfg.n_paths_per_user.assign(users, spec.base.n_paths_per_user.front());
      break;
    }
  }
  return cfg;
}

namespace {

struct Slot {
  std::vector<MethodOutcome> outcomes;
};

}  // namespace

SweepResult run_sweep(const SweepSpec& spec) {
  spec.validate();
  SweepResult result;
  result.spec = spec;
  const std::vector<double> values = spec.sweep_values();
  const int n_values = static_cast<int>(values.size());
  const int n_items = n_values * spec.trials;
  std::vector<Slot> slots(n_items);
  const int workers = spec.threads > 0 ? spec.threads : configured_threads();

  // Work items write only to their own slot; the CSV order does not depend
  // on completion order.
#pragma omp parallel for num_threads(workers) schedule(dynamic, 1)
  for (int item = 0; item < n_items; ++item) {
    const int vi = item / spec.trials;
    const int trial = item % spec.trials;
    const ScenarioConfig cfg = scenario_at(spec, values[vi]);
    std::mt19937_64 rng(spec.seed + static_cast<std::uint64_t>(trial));
    const ChannelSet channels = generate_channels(cfg, rng);
    slots[item].outcomes = run_methods(channels, cfg, spec.methods, spec.pipeline);
  }

  std::vector<double> physical;
  if (spec.kind == SweepKind::kBeampattern) {
    for (double deg : spec.grid) physical.push_back(to_physical_angle(deg * kPi / 180.0, spec.angles));
  }
  for (int item = 0; item < n_items; ++item) {
    const int vi = item / spec.trials;
    const int trial = item % spec.trials;
    for (auto& out : slots[item].outcomes) {
      SweepRow row;
      row.sweep_value = values[vi];
      row.method = out.method;
      row.trial = trial;
      row.report = out.report;
      if (spec.kind == SweepKind::kConvergence) {
        result.traces.push_back({values[vi], out.method, trial, out.report.lambda_trace,
                                 out.report.feasible});
      }
      if (spec.kind == SweepKind::kBeampattern) {
        const ScenarioConfig cfg = scenario_at(spec, values[vi]);
        PatternRow pr;
        pr.tau_db = values[vi];
        pr.method = out.method;
        pr.trial = trial;
        pr.feasible = out.report.feasible;
        if (out.digital.n_streams() > 0) {
          pr.gain = beampattern_scan(out.digital.columns, physical, cfg.antenna_spacing,
                                     cfg.carrier_wavelength, workers) /
                    (cfg.max_tx_power / cfg.n_tx);
        } else {
          pr.gain = RVector::Constant(static_cast<Eigen::Index>(physical.size()),
                                      std::numeric_limits<double>::quiet_NaN());
        }
        result.patterns.push_back(std::move(pr));
      }
      result.rows.push_back(std::move(row));
    }
  }

  // Sorted by sweep value (grid order), method (given order), trial.
  auto method_rank = [&](Method m) {
    return std::find(spec.methods.begin(), spec.methods.end(), m) - spec.methods.begin();
  };
  auto value_rank = [&](double v) {
    return std::find(values.begin(), values.end(), v) - values.begin();
  };
  auto key = [&](double v, Method m, int t) {
    return std::make_tuple(value_rank(v), method_rank(m), t);
  };
  std::stable_sort(result.rows.begin(), result.rows.end(), [&](const SweepRow& a, const SweepRow& b) {
    return key(a.sweep_value, a.method, a.trial) < key(b.sweep_value, b.method, b.trial);
  });
  std::stable_sort(result.traces.begin(), result.traces.end(), [&](const TraceRow& a, const TraceRow& b) {
    return key(a.sweep_value, a.method, a.trial) < key(b.sweep_value, b.method, b.trial);
  });
  std::stable_sort(result.patterns.begin(), result.patterns.end(),
                   [&](const PatternRow& a, const PatternRow& b) {
                     return key(a.tau_db, a.method, a.trial) < key(b.tau_db, b.method, b.trial);
                   });
  return result;
}

std::string format_number(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

const std::string& csv_header() {
  static const std::string header =
      "sweep_value,method,trial,ee_bits_per_hz_joule,sum_rate,min_user_sinr_db,"
      "min_target_gain_db,tx_power_w,feasible,outer_iters,wall_ms";
  return header;
}

namespace {

const std::vector<std::string> kMetricColumns = {
    "ee_bits_per_hz_joule", "sum_rate", "min_user_sinr_db", "min_target_gain_db",
    "tx_power_w",           "outer_iters", "wall_ms"};

double min_db(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return linear_to_db(*std::min_element(v.begin(), v.end()));
}

std::vector<double> metric_values(const SweepRow& row, bool timing) {
  const DesignReport& r = row.report;
  return {r.energy_efficiency,
          r.sum_rate,
          min_db(r.per_user_sinr),
          min_db(r.per_target_gain),
          r.tx_power,
          static_cast<double>(r.dinkelbach_iterations),
          timing ? r.wall_time * 1e3 : 0.0};
}

struct Stats {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double stderr_ = std::numeric_limits<double>::quiet_NaN();
};

Stats stats(const std::vector<double>& xs) {
  Stats s;
  std::vector<double> v;
  for (double x : xs) {
    if (std::isfinite(x)) v.push_back(x);
  }
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() < 2) {
    s.stderr_ = 0.0;
    return s;
  }
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.stderr_ = std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
  return s;
}

// Groups consecutive rows with equal (value, method); rows are pre-sorted.
template <typename Row, typename Value>
std::vector<std::pair<std::size_t, std::size_t>> groups(const std::vector<Row>& rows, Value value) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= rows.size(); ++i) {
    if (i == rows.size() || value(rows[i]) != value(rows[start]) || rows[i].method != rows[start].method) {
      if (start < rows.size()) out.emplace_back(start, i);
      start = i;
    }
  }
  return out;
}

}  // namespace

void write_rows_csv(const SweepResult& r, std::ostream& out) {
  out << csv_header() << '\n';
  for (const auto& row : r.rows) {
    const auto m = metric_values(row, r.spec.timing);
    out << format_number(row.sweep_value) << ',' << method_name(row.method) << ',' << row.trial;
    for (std::size_t i = 0; i < 5; ++i) out << ',' << format_number(m[i]);
    out << ',' << (row.report.feasible ? 1 : 0) << ',' << row.report.dinkelbach_iterations << ','
        << format_number(m[6]) << '\n';
  }
}

void write_agg_csv(const SweepResult& r, std::ostream& out) {
  out << "sweep_value,method,n_trials,n_feasible";
  for (const auto& c : kMetricColumns) out << ',' << c << "_mean," << c << "_stderr";
  out << '\n';
  for (const auto& [begin, end] : groups(r.rows, [](const SweepRow& x) { return x.sweep_value; })) {
    std::vector<std::vector<double>> cols(kMetricColumns.size());
    int feasible = 0;
    for (std::size_t i = begin; i < end; ++i) {
      if (r.rows[i].report.feasible) ++feasible;
      const auto m = metric_values(r.rows[i], r.spec.timing);
      for (std::size_t c = 0; c < m.size(); ++c) cols[c].push_back(m[c]);
    }
    out << format_number(r.rows[begin].sweep_value) << ',' << method_name(r.rows[begin].method) << ','
        << end - begin << ',' << feasible;
    for (const auto& col : cols) {
      const Stats s = stats(col);
      out << ',' << format_number(s.mean) << ',' << format_number(s.stderr_);
    }
    out << '\n';
  }
}

void write_trace_csv(const SweepResult& r, std::ostream& out) {
  if (r.spec.kind == SweepKind::kBeampattern) {
    out << "tau_db,method,trial,angle_deg,gain,gain_db\n";
    for (const auto& p : r.patterns) {
      for (std::size_t i = 0; i < r.spec.grid.size(); ++i) {
        const double g = p.gain(static_cast<Eigen::Index>(i));
        out << format_number(p.tau_db) << ',' << method_name(p.method) << ',' << p.trial << ','
            << format_number(r.spec.grid[i]) << ',' << format_number(g) << ','
            << format_number(linear_to_db(g)) << '\n';
      }
    }
    return;
  }
  out << "sweep_value,method,trial,iteration,ee_bits_per_hz_joule\n";
  for (const auto& t : r.traces) {
    for (std::size_t i = 0; i < t.ee.size(); ++i) {
      out << format_number(t.sweep_value) << ',' << method_name(t.method) << ',' << t.trial << ','
          << i << ',' << format_number(t.ee[i]) << '\n';
    }
  }
}

void write_trace_agg_csv(const SweepResult& r, std::ostream& out) {
  if (r.spec.kind == SweepKind::kBeampattern) {
    out << "tau_db,method,angle_deg,gain_mean,gain_stderr,gain_db_mean\n";
    for (const auto& [begin, end] : groups(r.patterns, [](const PatternRow& x) { return x.tau_db; })) {
      for (std::size_t i = 0; i < r.spec.grid.size(); ++i) {
        std::vector<double> g;
        for (std::size_t j = begin; j < end; ++j) {
          if (r.patterns[j].gain.size() > 0) g.push_back(r.patterns[j].gain(static_cast<Eigen::Index>(i)));
        }
        const Stats s = stats(g);
        out << format_number(r.patterns[begin].tau_db) << ',' << method_name(r.patterns[begin].method)
            << ',' << format_number(r.spec.grid[i]) << ',' << format_number(s.mean) << ','
            << format_number(s.stderr_) << ',' << format_number(linear_to_db(s.mean)) << '\n';
      }
    }
    return;
  }
  // Shorter traces are held at their final value (the loop stopped there).
  out << "sweep_value,method,iteration,ee_bits_per_hz_joule_mean,ee_bits_per_hz_joule_stderr\n";
  for (const auto& [begin, end] : groups(r.traces, [](const TraceRow& x) { return x.sweep_value; })) {
    std::size_t len = 0;
    for (std::size_t j = begin; j < end; ++j) len = std::max(len, r.traces[j].ee.size());
    for (std::size_t i = 0; i < len; ++i) {
      std::vector<double> v;
      for (std::size_t j = begin; j < end; ++j) {
        const auto& ee = r.traces[j].ee;
        if (!ee.empty()) v.push_back(ee[std::min(i, ee.size() - 1)]);
      }
      const Stats s = stats(v);
      out << format_number(r.traces[begin].sweep_value) << ',' << method_name(r.traces[begin].method)
          << ',' << i << ',' << format_number(s.mean) << ',' << format_number(s.stderr_) << '\n';
    }
  }
}

nlohmann::json meta_json(const SweepResult& r) {
  const SweepSpec& s = r.spec;
  nlohmann::json j;
  j["toolkit"] = "beamkit";
  j["version"] = BEAMKIT_VERSION;
  j["kind"] = kind_name(s.kind);
  j["grid"] = s.grid;
  j["sweep_values"] = s.sweep_values();
  j["trials"] = s.trials;
  j["seed"] = s.seed;
  std::vector<std::string> methods;
  for (Method m : s.methods) methods.push_back(method_name(m));
  j["methods"] = methods;
  if (s.kind == SweepKind::kBeampattern) j["tau_db"] = s.tau_db;
  j["angle_convention"] = s.angles == AngleConvention::kFigure ? "figure" : "physical";
  j["timing"] = s.timing;
  j["csv_header"] = csv_header();
  j["config"] = to_json(s.base);
  const std::string kind = kind_name(s.kind);
  std::vector<std::string> files = {kind + ".csv", kind + "_agg.csv"};
  if (s.kind == SweepKind::kConvergence || s.kind == SweepKind::kBeampattern) {
    files.push_back(kind + "_trace.csv");
    files.push_back(kind + "_trace_agg.csv");
  }
  j["files"] = files;
  return j;
}

std::vector<std::string> write_outputs(const SweepResult& r, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::string kind = kind_name(r.spec.kind);
  std::vector<std::string> paths;
  auto emit = [&](const std::string& name, auto&& writer) {
    const fs::path p = fs::path(out_dir) / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    writer(f);
    paths.push_back(p.string());
  };
  emit(kind + ".csv", [&](std::ostream& o) { write_rows_csv(r, o); });
  emit(kind + "_agg.csv", [&](std::ostream& o) { write_agg_csv(r, o); });
  if (r.spec.kind == SweepKind::kConvergence || r.spec.kind == SweepKind::kBeampattern) {
    emit(kind + "_trace.csv", [&](std::ostream& o) { write_trace_csv(r, o); });
    emit(kind + "_trace_agg.csv", [&](std::ostream& o) { write_trace_agg_csv(r, o); });
  }
  emit("meta.json", [&](std::ostream& o) { o << meta_json(r).dump(2) << '\n'; });
  return paths;
}

}  // namespace beamkit
