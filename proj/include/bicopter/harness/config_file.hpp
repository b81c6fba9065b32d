#pragma once

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bicopter/harness/preset.hpp"

// Key-value preset files.
//
//   # comment
//   base = ellipse-slow      (optional, must come first when present)
//   name = my-run
//   estimator_gain = 0.5
//   hilbert.side = 6
//
// Every key accepted by apply_setting may appear; later lines override earlier
// ones and command-line --set overrides the file.

namespace bicopter::harness {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(d)) {
    throw ConfigError("bad number for '" + key + "': '" + value + "'");
  }
  return d;
}

inline long parse_integer(const std::string& key, const std::string& value) {
  const double d = parse_double(key, value);
  if (d != std::floor(d)) throw ConfigError("'" + key + "' must be an integer");
  return static_cast<long>(d);
}

inline double parse_sign(const std::string& key, const std::string& value) {
  const double d = parse_double(key, value);
  if (d != 1.0 && d != -1.0) throw ConfigError("'" + key + "' must be +1 or -1");
  return d;
}

/// Names of every settable key, in documentation order.
inline const std::vector<std::string>& setting_keys() {
  static const std::vector<std::string> keys = {
      "name", "reference", "ref.x", "ref.y", "ellipse.psi_deg", "ellipse.omega", "ellipse.a",
      "ellipse.b", "hilbert.order", "hilbert.side", "hilbert.origin_x", "hilbert.origin_y",
      "hilbert.v_max", "hilbert.a_max", "hilbert.settle", "k1", "k2", "k3", "k4", "gamma1",
      "gamma2", "alpha1", "alpha2", "estimator_gain", "sign_inv_mass", "sign_inv_inertia",
      "eps_F", "gravity", "mass", "inertia", "F0", "mass_hat0", "inertia_hat0",
      "inv_mass_hat0", "inv_mass_aux_hat0", "dt", "duration", "stride", "seed"};
  return keys;
}

/// Applies one key=value setting. Throws ConfigError on unknown keys or bad values.
inline void apply_setting(Preset& p, const std::string& raw_key, const std::string& value) {
  const std::string key = trim(raw_key);
  const auto num = [&] { return parse_double(key, value); };
  const auto positive = [&] {
    const double d = num();
    if (!(d > 0.0)) throw ConfigError("'" + key + "' must be > 0");
    return d;
  };

  if (key == "name") {
    p.name = trim(value);
  } else if (key == "reference") {
    const std::string v = trim(value);
    if (v == "constant") p.reference.kind = ReferenceKind::Constant;
    else if (v == "ellipse") p.reference.kind = ReferenceKind::Ellipse;
    else if (v == "hilbert") p.reference.kind = ReferenceKind::Hilbert;
    else throw ConfigError("reference must be constant, ellipse or hilbert");
  } else if (key == "ref.x") {
    p.reference.point.x = num();
  } else if (key == "ref.y") {
    p.reference.point.y = num();
  } else if (key == "ellipse.psi_deg") {
    p.reference.ellipse.psi = num() * std::numbers::pi / 180.0;
  } else if (key == "ellipse.omega") {
    p.reference.ellipse.omega = positive();
  } else if (key == "ellipse.a") {
    p.reference.ellipse.a = positive();
  } else if (key == "ellipse.b") {
    p.reference.ellipse.b = positive();
  } else if (key == "hilbert.order") {
    const long o = parse_integer(key, value);
    if (o < 1 || o > 8) throw ConfigError("hilbert.order must be in [1, 8]");
    p.reference.hilbert.order = static_cast<int>(o);
  } else if (key == "hilbert.side") {
    p.reference.hilbert.side = positive();
  } else if (key == "hilbert.origin_x") {
    p.reference.hilbert.origin.x = num();
  } else if (key == "hilbert.origin_y") {
    p.reference.hilbert.origin.y = num();
  } else if (key == "hilbert.v_max") {
    p.reference.hilbert.v_max = positive();
  } else if (key == "hilbert.a_max") {
    p.reference.hilbert.a_max = positive();
  } else if (key == "hilbert.settle") {
    p.reference.hilbert.settle = num();
  } else if (key == "k1") {
    p.cfg.k1 = positive();
  } else if (key == "k2") {
    p.cfg.k2 = positive();
  } else if (key == "k3") {
    p.cfg.k3 = positive();
  } else if (key == "k4") {
    p.cfg.k4 = positive();
  } else if (key == "gamma1") {
    p.cfg.gamma1 = positive();
  } else if (key == "gamma2") {
    p.cfg.gamma2 = positive();
  } else if (key == "alpha1") {
    p.cfg.alpha1 = positive();
  } else if (key == "alpha2") {
    p.cfg.alpha2 = positive();
  } else if (key == "estimator_gain") {
    set_estimator_gains(p.cfg, positive());
  } else if (key == "sign_inv_mass") {
    p.cfg.sign_inv_mass = parse_sign(key, value);
  } else if (key == "sign_inv_inertia") {
    p.cfg.sign_inv_inertia = parse_sign(key, value);
  } else if (key == "eps_F") {
    p.cfg.eps_f = positive();
  } else if (key == "gravity") {
    const double g = num();
    if (g < 0.0) throw ConfigError("gravity must be >= 0");
    p.cfg.gravity = g;
    p.params.gravity = g;
  } else if (key == "mass") {
    p.params.mass = positive();
  } else if (key == "inertia") {
    p.params.inertia = positive();
  } else if (key == "F0") {
    p.initial_thrust = num();
  } else if (key == "mass_hat0") {
    p.initial_estimates.mass = num();
  } else if (key == "inertia_hat0") {
    p.initial_estimates.inertia = num();
  } else if (key == "inv_mass_hat0") {
    p.initial_estimates.inv_mass = num();
  } else if (key == "inv_mass_aux_hat0") {
    p.initial_estimates.inv_mass_aux = num();
  } else if (key == "dt") {
    p.dt = positive();
  } else if (key == "duration") {
    const double d = num();
    if (d < 0.0) throw ConfigError("duration must be >= 0");
    p.duration = d;
  } else if (key == "stride") {
    const long s = parse_integer(key, value);
    if (s < 1) throw ConfigError("stride must be >= 1");
    p.output_stride = static_cast<std::size_t>(s);
  } else if (key == "seed") {
    const long s = parse_integer(key, value);
    if (s < 0) throw ConfigError("seed must be >= 0");
    p.seed = static_cast<std::uint64_t>(s);
  } else {
    throw ConfigError("unknown setting '" + key + "'");
  }
}

/// Splits "key=value". Throws ConfigError when there is no '='.
inline std::pair<std::string, std::string> split_assignment(const std::string& line) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + line + "'");
  return {trim(line.substr(0, eq)), trim(line.substr(eq + 1))};
}

/// Non-comment, non-blank lines of a key-value stream as (key, value, line number).
struct ConfigLine {
  std::string key;
  std::string value;
  int line{0};
};

inline std::vector<ConfigLine> read_config_lines(std::istream& in) {
  std::vector<ConfigLine> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      auto [k, v] = split_assignment(line);
      out.push_back({k, v, n});
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

/// Parses a preset file. A leading 'base = <builtin>' selects the starting point.
inline Preset parse_preset(std::istream& in, const std::string& default_name = "custom") {
  const auto lines = read_config_lines(in);
  Preset p;
  p.name = default_name;
  std::size_t first = 0;
  if (!lines.empty() && lines.front().key == "base") {
    auto base = find_preset(lines.front().value);
    if (!base) throw ConfigError("unknown base preset '" + lines.front().value + "'");
    p = *base;
    p.name = default_name;
    first = 1;
  }
  for (std::size_t i = first; i < lines.size(); ++i) {
    if (lines[i].key == "base") {
      throw ConfigError("line " + std::to_string(lines[i].line) + ": 'base' must be the first setting");
    }
    try {
      apply_setting(p, lines[i].key, lines[i].value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lines[i].line) + ": " + e.what());
    }
  }
  return p;
}

inline Preset load_preset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open preset file '" + path + "'");
  std::string stem = path;
  if (auto slash = stem.find_last_of('/'); slash != std::string::npos) stem = stem.substr(slash + 1);
  if (auto dot = stem.find_last_of('.'); dot != std::string::npos && dot > 0) stem = stem.substr(0, dot);
  return parse_preset(in, stem);
}

/// Builtin name or path to a preset file.
inline Preset resolve_preset(const std::string& name_or_path) {
  if (auto p = find_preset(name_or_path)) return *p;
  std::ifstream probe(name_or_path);
  if (probe) return load_preset_file(name_or_path);
  throw ConfigError("unknown preset '" + name_or_path + "' (not a builtin and not a readable file)");
}

/// Key-value rendering that parse_preset reads back to an equivalent preset.
inline std::string render_preset(const Preset& p) {
  std::ostringstream os;
  os.precision(17);
  os << "name = " << p.name << '\n';
  os << "reference = " << to_string(p.reference.kind) << '\n';
  os << "ref.x = " << p.reference.point.x << "\nref.y = " << p.reference.point.y << '\n';
  os << "ellipse.psi_deg = " << p.reference.ellipse.psi * 180.0 / std::numbers::pi << '\n';
  os << "ellipse.omega = " << p.reference.ellipse.omega << '\n';
  os << "ellipse.a = " << p.reference.ellipse.a << "\nellipse.b = " << p.reference.ellipse.b << '\n';
  const auto& h = p.reference.hilbert;
  os << "hilbert.order = " << h.order << "\nhilbert.side = " << h.side << '\n';
  os << "hilbert.origin_x = " << h.origin.x << "\nhilbert.origin_y = " << h.origin.y << '\n';
  os << "hilbert.v_max = " << h.v_max << "\nhilbert.a_max = " << h.a_max << '\n';
  os << "hilbert.settle = " << h.settle << '\n';
  os << "k1 = " << p.cfg.k1 << "\nk2 = " << p.cfg.k2 << "\nk3 = " << p.cfg.k3 << "\nk4 = " << p.cfg.k4 << '\n';
  os << "gamma1 = " << p.cfg.gamma1 << "\ngamma2 = " << p.cfg.gamma2 << '\n';
  os << "alpha1 = " << p.cfg.alpha1 << "\nalpha2 = " << p.cfg.alpha2 << '\n';
  os << "sign_inv_mass = " << p.cfg.sign_inv_mass << "\nsign_inv_inertia = " << p.cfg.sign_inv_inertia << '\n';
  os << "eps_F = " << p.cfg.eps_f << "\ngravity = " << p.params.gravity << '\n';
  os << "mass = " << p.params.mass << "\ninertia = " << p.params.inertia << '\n';
  os << "F0 = " << p.initial_thrust << '\n';
  os << "mass_hat0 = " << p.initial_estimates.mass << "\ninertia_hat0 = " << p.initial_estimates.inertia << '\n';
  os << "inv_mass_hat0 = " << p.initial_estimates.inv_mass << '\n';
  os << "inv_mass_aux_hat0 = " << p.initial_estimates.inv_mass_aux << '\n';
  os << "dt = " << p.dt << '\n';
  if (p.duration) os << "duration = " << *p.duration << '\n';
  os << "stride = " << p.output_stride << "\nseed = " << p.seed << '\n';
  return os.str();
}

}  // namespace bicopter::harness
