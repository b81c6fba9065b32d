#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bicopter/harness/csv.hpp"
#include "bicopter/harness/preset.hpp"
#include "bicopter/harness/svg.hpp"
#include "bicopter/sim.hpp"

namespace bicopter::harness {

/// Fraction of the run, counted from the end, used for the late-window rmse.
inline constexpr double kLateWindowFraction = 0.25;

struct RunMetrics {
  double rmse_e1{0.0};
  double rmse_e1_late{0.0};
  double max_u{0.0};
  double v4_initial{0.0};
  double v4_final{0.0};
  bool guard_tripped{false};
  SimStatus status{SimStatus::Completed};
  double end_time{0.0};
};

/// Metrics over records; the late window is t >= (1 - late_fraction) * end time.
inline RunMetrics compute_metrics(const SimResult& res, double late_fraction = kLateWindowFraction) {
  RunMetrics m;
  m.status = res.status;
  m.guard_tripped = res.status == SimStatus::SingularGuardTripped;
  const auto& recs = res.records;
  if (recs.empty()) return m;
  m.end_time = recs.back().t;
  m.v4_initial = recs.front().v4;
  m.v4_final = recs.back().v4;
  const double late_start = (1.0 - late_fraction) * recs.back().t;
  double sum = 0.0, sum_late = 0.0;
  std::size_t n_late = 0;
  for (const auto& r : recs) {
    sum += r.e1_norm * r.e1_norm;
    if (r.t >= late_start) {
      sum_late += r.e1_norm * r.e1_norm;
      ++n_late;
    }
    m.max_u = std::max(m.max_u, norm(r.u));
  }
  m.rmse_e1 = std::sqrt(sum / static_cast<double>(recs.size()));
  m.rmse_e1_late = n_late ? std::sqrt(sum_late / static_cast<double>(n_late)) : 0.0;
  return m;
}

inline void write_metrics(std::ostream& os, const std::string& name, const RunMetrics& m) {
  os << "preset = " << name << '\n'
     << "status = " << to_string(m.status) << '\n'
     << "end_time = " << format_g9(m.end_time) << '\n'
     << "rmse_e1 = " << format_g9(m.rmse_e1) << '\n'
     << "rmse_e1_late = " << format_g9(m.rmse_e1_late) << '\n'
     << "max_u = " << format_g9(m.max_u) << '\n'
     << "V4_initial = " << format_g9(m.v4_initial) << '\n'
     << "V4_final = " << format_g9(m.v4_final) << '\n'
     << "guard_tripped = " << (m.guard_tripped ? "true" : "false") << '\n';
}

struct RunOutput {
  RunMetrics metrics;
  SimResult result;
  std::vector<std::string> files;
};

/// Simulates a preset and writes records.csv, metrics.txt and the SVG bundle
/// into out_dir. Simulation failures do not throw: the partial CSV is still
/// written and the status is in the metrics. I/O failures throw.
inline RunOutput run(const Preset& preset, const std::string& out_dir, bool plots = true) {
  std::filesystem::create_directories(out_dir);
  RunOutput out;
  out.result = simulate_preset(preset);
  out.metrics = compute_metrics(out.result);

  const std::string csv_path = out_dir + "/records.csv";
  {
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot write " + csv_path);
    write_records_csv(csv, out.result.records);
    csv.flush();
    if (!csv) throw std::runtime_error("write failed: " + csv_path);
  }
  out.files.push_back("records.csv");

  const std::string metrics_path = out_dir + "/metrics.txt";
  {
    std::ofstream mf(metrics_path);
    if (!mf) throw std::runtime_error("cannot write " + metrics_path);
    write_metrics(mf, preset.name, out.metrics);
    if (!out.result.ok()) mf << "failure = " << out.result.detail << '\n';
  }
  out.files.push_back("metrics.txt");

  if (plots) {
    for (auto& f : write_plot_bundle(out_dir, out.result.records)) out.files.push_back(f);
  }
  return out;
}

}  // namespace bicopter::harness
