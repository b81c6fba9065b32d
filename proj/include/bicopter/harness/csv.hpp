#pragma once

#include <array>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bicopter/sim.hpp"

namespace bicopter::harness {

inline constexpr std::array<const char*, 24> kRecordColumns = {
    "t",          "r1",          "r2",          "r1_dot",          "r2_dot",
    "F",          "phi",         "phi_dot",     "F_dot",           "u_F_ddot",
    "u_M",        "xi1_1",       "xi1_2",       "e1_norm",         "e2_norm",
    "e3_norm",    "e4_norm",     "mass_hat",    "inertia_hat",     "inv_mass_hat",
    "inv_mass_aux_hat", "V4",    "V4_dot_analytic", "V4_dot_findiff"};

inline std::array<double, kRecordColumns.size()> record_fields(const SimRecord& r) {
  return {r.t,         r.plant.x1.x,   r.plant.x1.y,     r.plant.x2.x,      r.plant.x2.y,
          r.plant.x3.x, r.plant.x3.y,  r.plant.x4.x,     r.plant.x4.y,      r.u.x,
          r.u.y,       r.xi1.x,        r.xi1.y,          r.e1_norm,         r.e2_norm,
          r.e3_norm,   r.e4_norm,      r.est.mass,       r.est.inertia,     r.est.inv_mass,
          r.est.inv_mass_aux, r.v4,    r.v4_dot_analytic, r.v4_dot_findiff};
}

inline SimRecord record_from_fields(const std::array<double, kRecordColumns.size()>& f) {
  SimRecord r;
  r.t = f[0];
  r.plant = {{f[1], f[2]}, {f[3], f[4]}, {f[5], f[6]}, {f[7], f[8]}};
  r.u = {f[9], f[10]};
  r.xi1 = {f[11], f[12]};
  r.e1_norm = f[13];
  r.e2_norm = f[14];
  r.e3_norm = f[15];
  r.e4_norm = f[16];
  r.est = {f[17], f[18], f[19], f[20]};
  r.v4 = f[21];
  r.v4_dot_analytic = f[22];
  r.v4_dot_findiff = f[23];
  return r;
}

/// Nine significant digits, as written to every CSV.
inline std::string format_g9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline std::string record_header() {
  std::string h;
  for (std::size_t i = 0; i < kRecordColumns.size(); ++i) {
    if (i) h += ',';
    h += kRecordColumns[i];
  }
  return h;
}

inline void write_record_row(std::ostream& os, const SimRecord& r) {
  const auto f = record_fields(r);
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (i) os << ',';
    os << format_g9(f[i]);
  }
  os << '\n';
}

inline void write_records_csv(std::ostream& os, const std::vector<SimRecord>& recs) {
  os << record_header() << '\n';
  for (const auto& r : recs) write_record_row(os, r);
}

/// Parses a CSV written by write_records_csv. Throws std::runtime_error on a
/// malformed header or row.
inline std::vector<SimRecord> read_records_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("records CSV: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != record_header()) throw std::runtime_error("records CSV: unexpected header");
  std::vector<SimRecord> out;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<double, kRecordColumns.size()> f{};
    std::size_t pos = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const auto comma = line.find(',', pos);
      const bool last = i + 1 == f.size();
      if (last != (comma == std::string::npos)) {
        throw std::runtime_error("records CSV: wrong column count on row " + std::to_string(row));
      }
      const std::string cell = line.substr(pos, last ? std::string::npos : comma - pos);
      char* end = nullptr;
      f[i] = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size()) {
        throw std::runtime_error("records CSV: bad number '" + cell + "' on row " + std::to_string(row));
      }
      pos = comma + 1;
    }
    out.push_back(record_from_fields(f));
  }
  return out;
}

}  // namespace bicopter::harness
