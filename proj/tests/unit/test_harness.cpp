#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "bicopter/harness/config_file.hpp"
#include "bicopter/harness/csv.hpp"
#include "bicopter/harness/run.hpp"
#include "bicopter/harness/svg.hpp"
#include "bicopter/harness/sweep.hpp"
#include "bicopter/harness/verify.hpp"

using namespace bicopter;
using namespace bicopter::harness;
using Catch::Approx;

namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bicopter_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Preset short_preset(const std::string& name, double duration) {
  Preset p = *find_preset(name);
  p.duration = duration;
  return p;
}

}  // namespace

TEST_CASE("builtin presets", "[harness]") {
  const auto all = builtin_presets();
  std::set<std::string> names;
  for (const auto& p : all) {
    names.insert(p.name);
    CHECK_NOTHROW(p.cfg.validate());
  }
  CHECK(names.size() == all.size());
  for (const char* n : {"ellipse-slow", "ellipse-fast", "hilbert-slow", "hilbert-fast"}) {
    const auto p = find_preset(n);
    REQUIRE(p);
    CHECK(p->cfg.k1 == 1.0);
    CHECK(p->cfg.k2 == 5.0);
    CHECK(p->cfg.k3 == 10.0);
    CHECK(p->cfg.k4 == 20.0);
    CHECK(p->params.mass == 1.0);
    CHECK(p->params.inertia == 0.2);
    CHECK(p->initial_estimates == EstimatorState{});
    const double gain = std::string(n).find("fast") != std::string::npos ? 1.0 : 0.1;
    CHECK(p->cfg.gamma1 == gain);
    CHECK(p->cfg.gamma2 == gain);
    CHECK(p->cfg.alpha1 == gain);
    CHECK(p->cfg.alpha2 == gain);
  }
  const auto e = find_preset("ellipse-slow");
  CHECK(e->reference.ellipse.psi == Approx(std::numbers::pi / 4));
  CHECK(e->reference.ellipse.omega == 0.1);
  const auto h = find_preset("hilbert-slow");
  CHECK(h->reference.hilbert.order == 2);
  CHECK(h->reference.hilbert.v_max == 1.0);
  CHECK(h->reference.hilbert.a_max == 1.0);
  CHECK(resolved_duration(*h) == Approx(35.0 + 10.0));
  CHECK_FALSE(find_preset("no-such-preset"));
}

TEST_CASE("preset files", "[harness]") {
  std::istringstream in(
      "# tuned\n"
      "base = ellipse-slow\n"
      "name = tuned   # trailing comment\n"
      "estimator_gain = 0.5\n"
      "k4 = 30\n"
      "ellipse.psi_deg = 30\n"
      "duration = 12\n");
  const Preset p = parse_preset(in);
  CHECK(p.name == "tuned");
  CHECK(p.cfg.gamma1 == 0.5);
  CHECK(p.cfg.alpha2 == 0.5);
  CHECK(p.cfg.k4 == 30.0);
  CHECK(p.reference.kind == ReferenceKind::Ellipse);
  CHECK(p.reference.ellipse.psi == Approx(std::numbers::pi / 6));
  CHECK(*p.duration == 12.0);

  const auto bad = [](const std::string& text) {
    std::istringstream s(text);
    return parse_preset(s);
  };
  CHECK_THROWS_AS(bad("k1 = -1\n"), ConfigError);
  CHECK_THROWS_AS(bad("k1 = abc\n"), ConfigError);
  CHECK_THROWS_AS(bad("k9 = 1\n"), ConfigError);
  CHECK_THROWS_AS(bad("just words\n"), ConfigError);
  CHECK_THROWS_AS(bad("k1 = 2\nbase = regulation\n"), ConfigError);
  CHECK_THROWS_AS(bad("sign_inv_mass = 0.3\n"), ConfigError);
  CHECK_THROWS_AS(bad("base = nothing\n"), ConfigError);
  try {
    bad("k1 = 1\n\nk2 = x\n");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("rendered presets parse back to the same preset", "[harness]") {
  for (const auto& p : builtin_presets()) {
    std::istringstream in(render_preset(p));
    const Preset q = parse_preset(in);
    CHECK(render_preset(q) == render_preset(p));
    CHECK(q.cfg.eps_f == p.cfg.eps_f);
    CHECK(q.dt == p.dt);
  }
}

TEST_CASE("every documented key is accepted", "[harness]") {
  for (const auto& key : setting_keys()) {
    Preset p = *find_preset("ellipse-slow");
    std::string value = "1";
    if (key == "name") value = "x";
    if (key == "reference") value = "hilbert";
    INFO(key);
    CHECK_NOTHROW(apply_setting(p, key, value));
  }
}

TEST_CASE("records CSV", "[harness]") {
  const auto res = simulate_preset(short_preset("ellipse-slow", 0.5));
  std::ostringstream os;
  write_records_csv(os, res.records);
  const std::string text = os.str();
  CHECK(text.substr(0, text.find('\n')) ==
        "t,r1,r2,r1_dot,r2_dot,F,phi,phi_dot,F_dot,u_F_ddot,u_M,xi1_1,xi1_2,e1_norm,e2_norm,"
        "e3_norm,e4_norm,mass_hat,inertia_hat,inv_mass_hat,inv_mass_aux_hat,V4,V4_dot_analytic,"
        "V4_dot_findiff");

  std::istringstream in(text);
  const auto back = read_records_csv(in);
  REQUIRE(back.size() == res.records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    const auto a = record_fields(res.records[i]);
    const auto b = record_fields(back[i]);
    for (std::size_t k = 0; k < a.size(); ++k) {
      REQUIRE(b[k] == std::strtod(format_g9(a[k]).c_str(), nullptr));
    }
  }
  // re-emitting the parsed records reproduces the bytes
  std::ostringstream again;
  write_records_csv(again, back);
  CHECK(again.str() == text);

  std::istringstream broken("t,r1\n1,2\n");
  CHECK_THROWS(read_records_csv(broken));
  std::istringstream short_row(record_header() + "\n1,2,3\n");
  CHECK_THROWS(read_records_csv(short_row));
}

TEST_CASE("nine significant digits", "[harness]") {
  CHECK(format_g9(1.0) == "1");
  CHECK(format_g9(0.1234567891234) == "0.123456789");
  CHECK(format_g9(-12345.678912345) == "-12345.6789");
  CHECK(format_g9(1e-20) == "1e-20");
}

TEST_CASE("metrics", "[harness]") {
  SimResult res;
  for (int i = 0; i <= 4; ++i) {
    SimRecord r;
    r.t = i;
    r.e1_norm = i;
    r.u = {3.0 * i, 4.0 * i};
    r.v4 = 10.0 - i;
    res.records.push_back(r);
  }
  const auto m = compute_metrics(res);
  CHECK(m.rmse_e1 == Approx(std::sqrt((0 + 1 + 4 + 9 + 16) / 5.0)));
  CHECK(m.rmse_e1_late == Approx(std::sqrt((9 + 16) / 2.0)));  // t >= 3
  CHECK(m.max_u == Approx(20.0));
  CHECK(m.v4_initial == 10.0);
  CHECK(m.v4_final == 6.0);
  CHECK_FALSE(m.guard_tripped);
}

TEST_CASE("svg rendering", "[harness]") {
  PlotDef chart{"T <1>", "t", "y", false, false, {}};
  chart.series.push_back({"a&b", {0, 1, 2}, {1, 4, 9}, false});
  const std::string svg = render_svg(chart);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK(svg.find("T &lt;1&gt;") != std::string::npos);
  CHECK(svg.find("a&amp;b") != std::string::npos);
  chart.log_y = true;
  chart.series[0].y = {0.0, 1e-3, 1e3};  // nonpositive skipped
  CHECK(render_svg(chart).find("nan") == std::string::npos);
  CHECK(decimate(10, 4) == std::vector<std::size_t>{0, 3, 6, 9});
  CHECK(decimate(3, 10).size() == 3);
}

TEST_CASE("run writes the CSV, metrics and plot bundle", "[harness]") {
  const auto dir = scratch_dir("run");
  const auto out = run(short_preset("ellipse-slow", 2.0), dir.string());
  for (const char* f : {"records.csv", "metrics.txt", "trajectory_xy.svg", "states.svg", "inputs.svg",
                        "estimates.svg", "lyapunov.svg"}) {
    INFO(f);
    CHECK(fs::exists(dir / f));
  }
  CHECK(out.result.ok());
  CHECK(out.metrics.rmse_e1 >= 0.0);
  CHECK(out.metrics.v4_final <= out.metrics.v4_initial);
  CHECK(slurp(dir / "metrics.txt").find("status = completed") != std::string::npos);

  // identical preset -> identical bytes
  const auto dir2 = scratch_dir("run2");
  run(short_preset("ellipse-slow", 2.0), dir2.string(), false);
  CHECK(slurp(dir / "records.csv") == slurp(dir2 / "records.csv"));
}

TEST_CASE("run of a tripping preset still writes the partial CSV", "[harness]") {
  const auto dir = scratch_dir("trip");
  const auto out = run(*find_preset("guard-trip"), dir.string(), false);
  CHECK(out.metrics.guard_tripped);
  std::ifstream in(dir / "records.csv");
  const auto recs = read_records_csv(in);
  CHECK_FALSE(recs.empty());
  CHECK(recs.back().t == Approx(out.result.failure_time).margin(1e-9));
  CHECK(slurp(dir / "metrics.txt").find("failure = ") != std::string::npos);
}

TEST_CASE("grid files", "[harness]") {
  std::istringstream in("base = ellipse-slow\nduration = 1\nestimator_gain = 0.1, 1\nk4 = 10,20,30\n");
  const auto g = parse_grid(in);
  CHECK(g.base == "ellipse-slow");
  REQUIRE(g.fixed.size() == 1);
  REQUIRE(g.axes.size() == 2);
  CHECK(g.size() == 6);
  CHECK(grid_point(g, 0) == std::vector<std::string>{"0.1", "10"});
  CHECK(grid_point(g, 5) == std::vector<std::string>{"1", "30"});
  std::istringstream bad("k4 = 1,,2\n");
  CHECK_THROWS_AS(parse_grid(bad), ConfigError);
  std::istringstream bad_base("base = nope\n");
  CHECK_THROWS_AS(parse_grid(bad_base), ConfigError);
}

TEST_CASE("1x1 sweep reproduces run metrics", "[harness]") {
  std::istringstream in("base = regulation\nduration = 3\n");
  const auto g = parse_grid(in);
  const auto rows = sweep(g, 2);
  REQUIRE(rows.size() == 1);
  const auto direct = compute_metrics(simulate_preset(short_preset("regulation", 3.0)));
  CHECK(rows[0].metrics.rmse_e1 == direct.rmse_e1);
  CHECK(rows[0].metrics.max_u == direct.max_u);
  CHECK(rows[0].metrics.v4_final == direct.v4_final);
}

TEST_CASE("sweep records failures as rows", "[harness]") {
  std::istringstream in("base = regulation\nduration = 2\nsign_inv_mass = 1, -1\neps_F = 0.5\n");
  const auto g = parse_grid(in);
  const auto rows = sweep(g, 4);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].status == "completed");
  CHECK(rows[1].status == "singular-guard-tripped");
  CHECK(rows[1].metrics.guard_tripped);
  std::ostringstream os;
  write_sweep_csv(os, g, rows);
  const std::string text = os.str();
  CHECK(text.rfind("index,sign_inv_mass,status,rmse_e1,", 0) == 0);
  CHECK(text.find("\n1,-1,singular-guard-tripped,") != std::string::npos);

  std::istringstream bad("base = regulation\nk1 = 1, -1\nduration = 0.1\n");
  const auto g2 = parse_grid(bad);
  const auto rows2 = sweep(g2, 2);
  CHECK(rows2[0].status == "completed");
  CHECK(rows2[1].status == "config-error");
}

TEST_CASE("parallel sweep matches serial sweep", "[harness]") {
  std::istringstream in("base = ellipse-slow\nduration = 1\nestimator_gain = 0.1, 0.3, 1\nk3 = 5, 10\n");
  const auto g = parse_grid(in);
  const auto a = sweep(g, 1), b = sweep(g, 4);
  std::ostringstream sa, sb;
  write_sweep_csv(sa, g, a);
  write_sweep_csv(sb, g, b);
  CHECK(sa.str() == sb.str());
}

TEST_CASE("verify report is deterministic and mutation-sensitive", "[harness][slow]") {
  VerifyOptions opt;
  opt.seed = 7;
  opt.samples = 500;
  const auto a = verify(opt), b = verify(opt);
  std::ostringstream sa, sb;
  a.print(sa);
  b.print(sb);
  CHECK(sa.str() == sb.str());
  CHECK(a.all_passed());

  opt.inject_psi_sign_flip = true;
  const auto m = verify(opt);
  CHECK_FALSE(m.all_passed());
  bool lyapunov_failed = false;
  for (const auto& c : m.checks) {
    if (!c.passed && c.name.find("V4") != std::string::npos) lyapunov_failed = true;
  }
  CHECK(lyapunov_failed);
}
