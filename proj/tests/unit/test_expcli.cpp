// Copyright 2026 The klsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "klsim/expcli/cli.hpp"
#include "klsim/expcli/config.hpp"
#include "klsim/expcli/io.hpp"
#include "klsim/expcli/runner.hpp"

using namespace klsim;
using namespace klsim::expcli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("klsim-test-" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "klsim");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("minimal config gets defaults and matched rates") {
  const ExperimentConfig c = validate_config("preset: single-run\nN_tot: 2\nU: 100\n");
  CHECK(c.preset == Preset::SingleRun);
  CHECK(c.n_sites == 5);
  CHECK(c.backend == Propagator::DenseExponential);
  CHECK(c.sweep_U == std::vector<double>{100.0});
  const ModelParams p = c.model(c.n_total, c.U);
  CHECK(p.gamma_s == doctest::Approx(0.01));
  CHECK(p.gamma_d == doctest::Approx(0.01));
  const ExperimentConfig eq = validate_config("preset = single-run");
  CHECK(eq.preset == Preset::SingleRun);
}

TEST_CASE("explicit rates override the default") {
  const ExperimentConfig c = validate_config("U: 10\ngamma_s: 0.5\n");
  CHECK(c.model(2, 10.0).gamma_s == 0.5);
  CHECK(c.model(2, 10.0).gamma_d == doctest::Approx(0.1));
}

TEST_CASE("range errors name the field and position") {
  try {
    validate_config("preset: single-run\nU: -5\n");
    FAIL("expected a range error");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "U");
    CHECK(e.line() == 2);
    CHECK(e.column() == 4);
  }
  CHECK_THROWS_AS(validate_config("tau_min: 10\ntau_max: 1\n"), ConfigError);
  CHECK_THROWS_AS(validate_config("N_tot: abc\n"), ConfigError);
}

TEST_CASE("unknown keys are rejected with the valid list") {
  try {
    validate_config("temperature_f: 300\n");
    FAIL("expected rejection");
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    CHECK(e.field() == "temperature_f");
    CHECK(what.find("valid keys") != std::string::npos);
    for (const auto& k : valid_keys()) CHECK(what.find(k) != std::string::npos);
  }
}

TEST_CASE("syntax errors carry line and column") {
  try {
    validate_config("U: 10\nsweep: [1, 2\n");
    FAIL("expected a parse error");
  } catch (const ConfigError& e) {
    CHECK(e.line() >= 2);
    CHECK(e.column() >= 1);
  }
}

TEST_CASE("sweep sections") {
  const ExperimentConfig c = validate_config(
      "preset: occupancy-saturation\nsweep:\n  U: [100, 10]\n  N_tot: [3, 2, 3]\n");
  CHECK(c.sweep_U == std::vector<double>{10.0, 100.0});
  CHECK(c.sweep_n_total == std::vector<int>{2, 3});
  CHECK(cells_of(c).size() == 4);
  try {
    validate_config("preset: occupancy-saturation\nsweep:\n  U: []\n");
    FAIL("expected an empty-axis error");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "sweep.U");
  }
  CHECK_THROWS_AS(validate_config("preset: lag-analysis\nsweep:\n  N_tot: [9, 10, 12, 13, 14]\n"),
                  ConfigError);
}

TEST_CASE("csv round trip") {
  CsvRun run;
  run.record.params = ModelParams::matched_rates(2, 10.0);
  ObservableVector o;
  o.t = 1.0 / 3.0;
  o.tau = 0.1 / 3.0;
  o.populations = {1.5, 0.1, 0.1, 0.1, 0.1, 0.1, 0.0};
  o.n_SF = 0.5;
  o.trace_residual = 1e-17;
  run.record.series.push_back(o);
  const std::string text = render_csv(run);
  CHECK(text.rfind("# klsim-csv/1 ", 0) == 0);
  CHECK(text.find("\nt,tau,n_source,n_site_1,n_site_2,n_site_3,n_site_4,n_site_5,n_SF,n_drain,"
                  "trace_residual,min_eigenvalue\n") != std::string::npos);
  const CsvRun back = parse_csv(text);
  CHECK(back.record.params.U == 10.0);
  CHECK(back.record.params.gamma_s == run.record.params.gamma_s);
  REQUIRE(back.record.series.size() == 1);
  CHECK(back.record.series[0].t == o.t);
  CHECK(back.record.series[0].populations == o.populations);
  CHECK(std::isnan(back.record.series[0].min_eigenvalue));
  CHECK(render_csv(back) == text);
  CHECK_THROWS(parse_csv("t,tau\n1,2\n"));
}

TEST_CASE("single run stays below two particles at U = 100") {
  TempDir dir("single");
  const auto r = cli({"run", "--preset", "single-run", "--ntot", "2", "--u", "100", "--out",
                      dir.path.string()});
  REQUIRE(r.code == kExitOk);
  const CsvRun run = read_csv(dir.path / "runs/U100_N2.csv");
  double mx = 0.0;
  for (const auto& s : run.record.series) mx = std::max(mx, s.n_SF);
  CHECK(mx < 2.0);
  CHECK(mx > 1.0);
  const auto summary = nlohmann::json::parse(slurp(dir.path / "summary.json"));
  CHECK(summary["schema"] == "klsim-summary/1");
  CHECK(summary["runs"][0]["n_SF_max"].get<double>() < 2.0);
  CHECK(fs::exists(dir.path / "plot.gp"));
  CHECK(slurp(dir.path / "plot.gp").find("set logscale x") != std::string::npos);
}

TEST_CASE("identical runs are byte identical and resumable") {
  TempDir a("det-a"), b("det-b");
  const std::string cfg = "preset: rescaling-collapse\nN_tot: 2\ntau_max: 20\ngrid_points: 40\n"
                          "sweep:\n  U: [10, 100]\n";
  write(a.path / "cfg.yaml", cfg);
  const auto ra = cli({"run", "--config", (a.path / "cfg.yaml").string(), "--out", (a.path / "o").string()});
  const auto rb = cli({"run", "--config", (a.path / "cfg.yaml").string(), "--out", (b.path / "o").string()});
  REQUIRE(ra.code == 0);
  REQUIRE(rb.code == 0);
  for (const char* f : {"summary.json", "runs/U10_N2.csv", "runs/U100_N2.csv", "plot.gp"}) {
    CHECK(slurp(a.path / "o" / f) == slurp(b.path / "o" / f));
  }
  // resume: the second run reuses cells and reproduces the summary
  const auto again = cli({"run", "--config", (a.path / "cfg.yaml").string(), "--out", (a.path / "o").string()});
  CHECK(again.err.find("reuse U=10 N_tot=2") != std::string::npos);
  CHECK(again.out == ra.out);
  // every summary value is recomputable from the CSVs
  const auto an = cli({"analyze", "--config", (a.path / "cfg.yaml").string(), "--out", (a.path / "o").string()});
  CHECK(an.code == 0);
  CHECK(an.out == slurp(a.path / "o/summary.json"));
  const auto s = nlohmann::json::parse(an.out);
  CHECK(s["rescaling"]["pairs"][0]["sup_distance"].get<double>() < 0.1);
}

TEST_CASE("lag analysis on fixture data") {
  TempDir dir("lag");
  std::string cfg = "preset: lag-analysis\nfixture:\n";
  for (int n = 9; n <= 14; ++n) {
    cfg += "  " + std::to_string(n) + ": " +
           format_number(195.57 * (1 - std::exp(-n / 8.5)) - 74.23) + "\n";
  }
  write(dir.path / "cfg.yaml", cfg);
  const auto r = cli({"run", "--config", (dir.path / "cfg.yaml").string(), "--out", dir.path.string()});
  REQUIRE(r.code == 0);
  const auto s = nlohmann::json::parse(slurp(dir.path / "summary.json"));
  const auto& lag = s["lag"][0];
  CHECK(lag["fit"]["converged"] == true);
  CHECK(lag["fit"]["asymptote"].get<double>() == doctest::Approx(121.34).epsilon(1e-8));
  CHECK(lag["increasing"] == true);
  CHECK(lag["concave"] == true);
  CHECK(lag["physical_time"]["asymptote_seconds"].get<double>() ==
        doctest::Approx(1.2134e-8).epsilon(1e-8));

  // seeded noise is reproducible and stays near the fixture
  write(dir.path / "noisy.yaml", cfg + "fixture_noise: 0.01\nseed: 5\n");
  const auto n1 = cli({"run", "--config", (dir.path / "noisy.yaml").string(), "--out", (dir.path / "n1").string()});
  const auto n2 = cli({"run", "--config", (dir.path / "noisy.yaml").string(), "--out", (dir.path / "n2").string()});
  CHECK(n1.out == n2.out);
  const auto ns = nlohmann::json::parse(n1.out);
  CHECK(ns["lag"][0]["fit"]["c_sat"].get<double>() > 0.0);
  CHECK(ns["lag"][0]["delta_tau"]["9"].get<double>() != lag["delta_tau"]["9"].get<double>());
}

TEST_CASE("usage errors exit 2 with an error document") {
  TempDir dir("errors");
  write(dir.path / "bad.yaml", "preset: single-run\nU: -5\n");
  const auto r = cli({"run", "--config", (dir.path / "bad.yaml").string(), "--out", dir.path.string()});
  CHECK(r.code == kExitConfig);
  const auto e = nlohmann::json::parse(r.err);
  CHECK(e["schema"] == "klsim-error/1");
  CHECK(e["field"] == "U");
  CHECK(e["line"] == 2);

  const auto empty = cli({"sweep", "--preset", "occupancy-saturation", "--u", "", "--out", dir.path.string()});
  CHECK(empty.code == kExitConfig);
  CHECK(nlohmann::json::parse(empty.err)["field"] == "sweep.U");

  CHECK(cli({"sweep", "--preset", "single-run", "--out", dir.path.string()}).code == kExitConfig);
  CHECK(cli({"run", "--backend", "euler", "--out", dir.path.string()}).code == kExitConfig);
  CHECK(cli({"frobnicate"}).code == kExitConfig);
}

TEST_CASE("integration failure exits 3 and flags partial output") {
  TempDir dir("partial");
  write(dir.path / "cfg.yaml",
        "N_tot: 2\nU: 10\nbackend: adaptive-explicit\nmax_steps: 50\ntau_max: 10\ngrid_points: 20\n");
  const auto r = cli({"run", "--config", (dir.path / "cfg.yaml").string(), "--out", dir.path.string()});
  CHECK(r.code == kExitIntegration);
  const auto s = nlohmann::json::parse(slurp(dir.path / "summary.json"));
  CHECK(s["status"] == "integration-failure");
  CHECK(s["runs"][0]["partial"] == true);
  const CsvRun partial = read_csv(dir.path / "runs/U10_N2.csv");
  CHECK(partial.partial);
  CHECK(partial.t_reached.has_value());
  CHECK(fs::exists(dir.path / "error.json"));
}

TEST_CASE("rate estimate subcommand") {
  const auto r = cli({"estimate-rates"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["tunneling_probability"] == 1.0);
  CHECK(std::abs(j["rate_per_s"].get<double>() - 1.1e13) / 1.1e13 < 0.01);
  const auto narrow = nlohmann::json::parse(cli({"estimate-rates", "--barrier", "4", "--width", "0.05"}).out);
  CHECK(narrow["tunneling_probability"].get<double>() < 1.0);
}

TEST_CASE("worker count honours KLSIM_THREADS") {
  setenv("KLSIM_THREADS", "3", 1);
  CHECK(worker_count(10) == 3);
  CHECK(worker_count(2) == 2);
  setenv("KLSIM_THREADS", "junk", 1);
  CHECK(worker_count(10) >= 1);
  unsetenv("KLSIM_THREADS");
}

TEST_CASE("shipped example configs load") {
  const std::pair<const char*, Preset> files[] = {
      {"single-run.yaml", Preset::SingleRun},
      {"rescaling-collapse.yaml", Preset::RescalingCollapse},
      {"occupancy-saturation.yaml", Preset::OccupancySaturation},
      {"lag-analysis.yaml", Preset::LagAnalysis},
  };
  for (const auto& [name, preset] : files) {
    CAPTURE(name);
    const auto cfg = load_config(std::filesystem::path(KLSIM_CONFIG_DIR) / name);
    CHECK(cfg.preset == preset);
  }
}
