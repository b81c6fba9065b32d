#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "bicopter/harness/config_file.hpp"
#include "bicopter/harness/run.hpp"
#include "bicopter/harness/sweep.hpp"
#include "bicopter/harness/verify.hpp"

namespace {

namespace h = bicopter::harness;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitSimFailure = 2;
constexpr int kExitVerifyFailure = 3;

struct RunArgs {
  std::string preset;
  std::string out;
  double dt{0.0};
  double duration{0.0};
  std::vector<std::string> sets;
  bool no_plots{false};
};

int cmd_run(const RunArgs& a) {
  h::Preset p;
  try {
    p = h::resolve_preset(a.preset);
    if (a.dt > 0.0) p.dt = a.dt;
    if (a.duration > 0.0) p.duration = a.duration;
    for (const auto& s : a.sets) {
      const auto [k, v] = h::split_assignment(s);
      h::apply_setting(p, k, v);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  const std::string out = a.out.empty() ? "out/" + p.name : a.out;
  h::RunOutput r;
  try {
    r = h::run(p, out, !a.no_plots);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSimFailure;
  }
  h::write_metrics(std::cout, p.name, r.metrics);
  std::cout << "output = " << out << '\n';
  if (!r.result.ok()) {
    std::cerr << "simulation failed: " << r.result.detail << '\n';
    return kExitSimFailure;
  }
  return kExitOk;
}

int cmd_verify(std::uint64_t seed, std::size_t samples, bool flip) {
  h::VerifyOptions opt;
  opt.seed = seed;
  opt.samples = samples;
  opt.inject_psi_sign_flip = flip;
  const auto rep = h::verify(opt);
  std::cout << "seed = " << seed << '\n';
  rep.print(std::cout);
  return rep.all_passed() ? kExitOk : kExitVerifyFailure;
}

int cmd_sweep(const std::string& grid_file, unsigned jobs, const std::string& out) {
  h::GridDef g;
  try {
    std::ifstream in(grid_file);
    if (!in) throw h::ConfigError("cannot open grid file '" + grid_file + "'");
    g = h::parse_grid(in);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  const auto rows = h::sweep(g, jobs);
  if (out.empty()) {
    h::write_sweep_csv(std::cout, g, rows);
  } else {
    std::ofstream f(out);
    if (!f) {
      std::cerr << "error: cannot write " << out << '\n';
      return kExitUsage;
    }
    h::write_sweep_csv(f, g, rows);
    std::cerr << rows.size() << " grid points written to " << out << '\n';
  }
  for (const auto& r : rows) {
    if (r.status == "config-error") {
      std::cerr << "grid point " << r.index << ": " << r.detail << '\n';
      return kExitUsage;
    }
  }
  return kExitOk;
}

int cmd_presets(const std::string& show) {
  if (!show.empty()) {
    try {
      std::cout << h::render_preset(h::resolve_preset(show));
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitUsage;
    }
    return kExitOk;
  }
  for (const auto& p : h::builtin_presets()) {
    std::printf("%-14s %s\n", p.name.c_str(), p.description.c_str());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planar bicopter adaptive backstepping simulator"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "simulate a preset, write records.csv, metrics.txt and SVG plots");
  run->add_option("preset", run_args.preset, "builtin preset name or preset file")->required();
  run->add_option("--out", run_args.out, "output directory (default out/<name>)");
  run->add_option("--dt", run_args.dt, "step size [s]")->check(CLI::PositiveNumber);
  run->add_option("--duration", run_args.duration, "run length [s]")->check(CLI::PositiveNumber);
  run->add_option("--set", run_args.sets, "override a preset key, key=value (repeatable)");
  run->add_flag("--no-plots", run_args.no_plots, "skip the SVG bundle");

  std::uint64_t seed = 1;
  std::size_t samples = 10000;
  bool flip = false;
  auto* verify = app.add_subcommand("verify", "run the oracle suite; exit 3 if any check fails");
  verify->add_option("--seed", seed, "seed for the random-state checks");
  verify->add_option("--samples", samples, "random states per check")->check(CLI::PositiveNumber);
  verify->add_flag("--inject-psi-flip", flip, "negate the Psi regressor (mutation check)")->group("");

  std::string grid_file, sweep_out;
  unsigned jobs = 0;
  auto* sweep = app.add_subcommand("sweep", "run every point of a gain grid, print a metrics CSV");
  sweep->add_option("grid", grid_file, "grid file")->required();
  sweep->add_option("--jobs,-j", jobs, "worker threads (default: hardware concurrency)");
  sweep->add_option("--out", sweep_out, "write the CSV here instead of stdout");

  std::string show;
  auto* presets = app.add_subcommand("presets", "list builtin presets");
  presets->add_option("--show", show, "print one preset in config-file form");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*run) return cmd_run(run_args);
  if (*verify) return cmd_verify(seed, samples, flip);
  if (*sweep) return cmd_sweep(grid_file, jobs, sweep_out);
  if (*presets) return cmd_presets(show);
  return kExitUsage;
}
