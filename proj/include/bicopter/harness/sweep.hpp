#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <istream>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "bicopter/harness/config_file.hpp"
#include "bicopter/harness/csv.hpp"
#include "bicopter/harness/run.hpp"

// Gain sweeps. A grid file is a preset file in which any value may be a
// comma-separated list; the sweep runs the Cartesian product of all lists.
//
//   base = ellipse-slow
//   estimator_gain = 0.1, 1
//   k4 = 10, 20

namespace bicopter::harness {

struct GridAxis {
  std::string key;
  std::vector<std::string> values;
};

struct GridDef {
  std::string base = "ellipse-slow";
  std::vector<std::pair<std::string, std::string>> fixed;
  std::vector<GridAxis> axes;

  std::size_t size() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.values.size();
    return n;
  }
};

inline GridDef parse_grid(std::istream& in) {
  GridDef g;
  for (const auto& line : read_config_lines(in)) {
    if (line.key == "base") {
      g.base = line.value;
      continue;
    }
    std::vector<std::string> values;
    std::size_t pos = 0;
    while (true) {
      const auto comma = line.value.find(',', pos);
      values.push_back(trim(line.value.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos)));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    for (const auto& v : values) {
      if (v.empty()) throw ConfigError("line " + std::to_string(line.line) + ": empty grid value");
    }
    if (values.size() == 1) g.fixed.emplace_back(line.key, values.front());
    else g.axes.push_back({line.key, values});
  }
  if (!find_preset(g.base)) throw ConfigError("unknown base preset '" + g.base + "'");
  return g;
}

struct SweepRow {
  std::size_t index{0};
  std::vector<std::string> values;  // one per axis
  RunMetrics metrics;
  std::string status;  // SimStatus name, or "config-error"
  std::string detail;
};

/// Settings of grid point i (row-major over axes, last axis fastest).
inline std::vector<std::string> grid_point(const GridDef& g, std::size_t i) {
  std::vector<std::string> vals(g.axes.size());
  for (std::size_t k = g.axes.size(); k-- > 0;) {
    const auto n = g.axes[k].values.size();
    vals[k] = g.axes[k].values[i % n];
    i /= n;
  }
  return vals;
}

inline SweepRow run_grid_point(const GridDef& g, std::size_t i) {
  SweepRow row;
  row.index = i;
  row.values = grid_point(g, i);
  try {
    Preset p = *find_preset(g.base);
    for (const auto& [k, v] : g.fixed) apply_setting(p, k, v);
    for (std::size_t k = 0; k < g.axes.size(); ++k) apply_setting(p, g.axes[k].key, row.values[k]);
    const SimResult res = simulate_preset(p);
    row.metrics = compute_metrics(res);
    row.status = to_string(res.status);
    row.detail = res.detail;
  } catch (const std::exception& e) {
    row.status = "config-error";
    row.detail = e.what();
  }
  return row;
}

/// Runs every grid point on up to `jobs` threads. Rows come back in grid order.
inline std::vector<SweepRow> sweep(const GridDef& g, unsigned jobs) {
  const std::size_t n = g.size();
  std::vector<SweepRow> rows(n);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) rows[i] = run_grid_point(g, i);
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

inline void write_sweep_csv(std::ostream& os, const GridDef& g, const std::vector<SweepRow>& rows) {
  os << "index";
  for (const auto& a : g.axes) os << ',' << a.key;
  os << ",status,rmse_e1,rmse_e1_late,max_u,V4_initial,V4_final,guard_tripped\n";
  for (const auto& r : rows) {
    os << r.index;
    for (const auto& v : r.values) os << ',' << v;
    os << ',' << r.status << ',' << format_g9(r.metrics.rmse_e1) << ','
       << format_g9(r.metrics.rmse_e1_late) << ',' << format_g9(r.metrics.max_u) << ','
       << format_g9(r.metrics.v4_initial) << ',' << format_g9(r.metrics.v4_final) << ','
       << (r.metrics.guard_tripped ? 1 : 0) << '\n';
  }
}

}  // namespace bicopter::harness
