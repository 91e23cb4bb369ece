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

#include "klsim/expcli/cli.hpp"

#include <charconv>
#include <iostream>
#include <system_error>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "klsim/expcli/config.hpp"
#include "klsim/expcli/runner.hpp"

namespace klsim::expcli {

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::string preset;
  std::vector<std::string> u;
  std::vector<std::string> ntot;
  std::string backend;
  double tol = 0.0;
};

void add_common(CLI::App& app, CommonFlags& f) {
  app.add_option("--config", f.config, "Configuration file (key: value format)");
  app.add_option("--out", f.out, "Output directory");
  app.add_option("--preset", f.preset,
                 "single-run, rescaling-collapse, occupancy-saturation or lag-analysis");
  app.add_option("--u", f.u, "Comma-separated Coulomb strengths")->delimiter(',');
  app.add_option("--ntot", f.ntot, "Comma-separated particle numbers")->delimiter(',');
  app.add_option("--backend", f.backend,
                 "adaptive-explicit, krylov-exponential or dense-exponential");
  app.add_option("--tol", f.tol, "Relative tolerance (absolute is 1e-2 of it)");
}

template <typename T>
std::vector<T> parse_list(const std::vector<std::string>& raw, const char* field) {
  std::vector<T> out;
  for (const auto& tok : raw) {
    if (tok.empty()) continue;
    T v{};
    const auto* end = tok.data() + tok.size();
    const auto [ptr, ec] = std::from_chars(tok.data(), end, v);
    if (ec != std::errc() || ptr != end) {
      throw ConfigError(field, std::string(field) + ": cannot parse '" + tok + "'");
    }
    out.push_back(v);
  }
  return out;
}

ExperimentConfig resolve(const CLI::App& app, const CommonFlags& f) {
  ExperimentConfig c = f.config.empty() ? validate_config("") : load_config(f.config);
  Overrides o;
  if (!f.preset.empty()) o.preset = f.preset;
  if (app.count("--u")) o.U = parse_list<double>(f.u, "sweep.U");
  if (app.count("--ntot")) o.n_total = parse_list<int>(f.ntot, "sweep.N_tot");
  if (!f.backend.empty()) o.backend = f.backend;
  if (app.count("--tol")) o.tol = f.tol;
  if (!f.out.empty()) o.output = f.out;
  apply_overrides(c, o);
  return c;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"klsim: open-chain ion transport simulator"};
  app.require_subcommand(1);

  CommonFlags run_flags, sweep_flags, analyze_flags;
  auto* run = app.add_subcommand("run", "Run the configured preset");
  add_common(*run, run_flags);
  auto* sweep = app.add_subcommand("sweep", "Run a sweep preset over the U x N_tot grid");
  add_common(*sweep, sweep_flags);
  auto* analyze = app.add_subcommand("analyze", "Recompute the summary from existing CSVs");
  add_common(*analyze, analyze_flags);

  PhysicalParams phys;
  bool hbar = false;
  auto* rates = app.add_subcommand("estimate-rates", "Barrier-tunnelling rate estimate");
  rates->add_option("--barrier", phys.barrier_height, "Barrier height in k_B T");
  rates->add_option("--kinetic", phys.kinetic_energy, "Kinetic energy K in k_B T");
  rates->add_option("--width", phys.barrier_width_nm, "Barrier width in nm");
  rates->add_option("--temperature", phys.temperature_K, "Temperature in K");
  rates->add_option("--mass", phys.mass_kg, "Particle mass in kg");
  rates->add_flag("--hbar", hbar, "Use hbar instead of h in the exponent");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << dump(error_json("usage", e.what()));
    return kExitConfig;
  }

  const CLI::App* active = app.get_subcommands().front();
  const CommonFlags& flags = active == run ? run_flags : active == sweep ? sweep_flags : analyze_flags;
  std::filesystem::path out_dir;
  try {
    if (active == rates) {
      phys.hbar_exponent = hbar;
      out << dump(estimate_rates_json(phys));
      return kExitOk;
    }
    ExperimentConfig config = resolve(*active, flags);
    out_dir = config.output;
    if (active == sweep && config.preset == Preset::SingleRun) {
      throw ConfigError("preset", "preset: sweep needs a sweep preset, got single-run");
    }
    if (active == analyze) {
      out << dump(analyze_directory(config));
      return kExitOk;
    }
    RunOptions opts;
    opts.log = &err;
    const RunOutcome outcome = run_preset(config, opts);
    out << dump(outcome.summary);
    return outcome.exit_code;
  } catch (const ConfigError& e) {
    const auto j = error_json("config", e.what(), e.field(), e.line(), e.column());
    err << dump(j);
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    err << dump(error_json("config", e.what()));
    return kExitConfig;
  } catch (const std::exception& e) {
    err << dump(error_json("failure", e.what()));
    return kExitFailure;
  }
}

}  // namespace klsim::expcli
