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

#include "klsim/expcli/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <map>
#include <mutex>
#include <ostream>
#include <random>
#include <thread>

#include "klsim/density_matrix.hpp"
#include "klsim/errors.hpp"
#include "klsim/propagators.hpp"

namespace klsim::expcli {

using json = nlohmann::ordered_json;

namespace {

constexpr double kMonotoneSlack = 1e-9;

std::string statistics_name(SiteStatistics s) {
  return s == SiteStatistics::HardCore ? "hard-core" : "jordan-wigner";
}

json number_or_null(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

CellResult simulate(const ExperimentConfig& config, const Cell& cell) {
  CellResult r;
  r.cell = cell;
  r.csv = cell_csv_name(cell.U, cell.n_total);
  const ModelParams params = config.model(cell.n_total, cell.U);
  const ModelOperators ops = build_model_operators(params, config.statistics);
  const EvolutionConfig ec = config.evolution(params);
  r.run.record.params = params;
  try {
    TimeSeries ts = propagate(initial_state(ops.basis), ops, ec);
    r.run.record.series = std::move(ts.samples);
  } catch (const PropagationFailure& e) {
    r.run.record.series = e.partial().samples;
    r.run.partial = true;
    r.run.t_reached = e.time_reached();
    r.error = e.what();
  }
  return r;
}

std::map<int, double> noisy_fixture(const ExperimentConfig& config) {
  std::map<int, double> data = config.fixture;
  if (config.fixture_noise > 0.0) {
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> noise(0.0, config.fixture_noise);
    for (auto& [n, v] : data) v *= 1.0 + noise(rng);
  }
  return data;
}

json fit_json(const FitResult& f) {
  json j;
  j["a"] = f.a;
  j["b"] = f.b;
  j["c_sat"] = f.c_sat;
  j["asymptote"] = f.asymptote();
  j["residual_norm"] = f.residual_norm;
  j["converged"] = f.converged;
  j["iterations"] = f.iterations;
  return j;
}

json int_map_json(const std::map<int, double>& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[std::to_string(k)] = v;
  return j;
}

json lag_block(const ExperimentConfig& config, const std::map<int, double>& delta_tau,
               json block) {
  block["delta_tau"] = int_map_json(delta_tau);
  bool increasing = delta_tau.size() >= 2;
  bool concave = delta_tau.size() >= 3;
  std::vector<double> v;
  for (const auto& [n, d] : delta_tau) v.push_back(d);
  for (std::size_t i = 1; i < v.size(); ++i) increasing = increasing && v[i] > v[i - 1];
  for (std::size_t i = 2; i < v.size(); ++i) {
    concave = concave && (v[i] - v[i - 1]) <= (v[i - 1] - v[i - 2]) + kMonotoneSlack;
  }
  block["increasing"] = increasing;
  block["concave"] = concave;
  if (delta_tau.size() >= 4) {
    const FitResult fit = fit_saturation(delta_tau);
    block["fit"] = fit_json(fit);
    json phys;
    phys["U_phys"] = config.U_phys;
    phys["c_phys"] = config.c_phys;
    phys["asymptote_seconds"] = physical_time(fit.asymptote(), config.U_phys, config.c_phys);
    block["physical_time"] = phys;
  } else {
    block["fit"] = nullptr;
  }
  return block;
}

}  // namespace

std::vector<Cell> cells_of(const ExperimentConfig& config) {
  if (config.preset == Preset::SingleRun) return {{config.U, config.n_total}};
  if (config.preset == Preset::LagAnalysis && !config.fixture.empty()) return {};
  std::vector<Cell> cells;
  for (double u : config.sweep_U) {
    for (int n : config.sweep_n_total) cells.push_back({u, n});
  }
  return cells;
}

unsigned worker_count(std::size_t cells) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("KLSIM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) n = static_cast<unsigned>(v);
  }
  return static_cast<unsigned>(std::clamp<std::size_t>(cells, 1, n));
}

json config_json(const ExperimentConfig& c) {
  json j;
  j["preset"] = std::string(to_string(c.preset));
  j["N_sites"] = c.n_sites;
  j["N_tot"] = c.n_total;
  j["U"] = c.U;
  j["hbar"] = c.hbar;
  j["c_hop"] = c.c_hop;
  j["gamma_s"] = c.gamma_s ? json(*c.gamma_s) : json("c_eff");
  j["gamma_d"] = c.gamma_d ? json(*c.gamma_d) : json("c_eff");
  j["statistics"] = statistics_name(c.statistics);
  j["backend"] = std::string(to_string(c.backend));
  j["rel_tol"] = c.rel_tol;
  j["abs_tol"] = c.abs_tol;
  j["tau_min"] = c.tau_min;
  j["tau_max"] = c.tau_max;
  j["grid_points"] = c.grid_points;
  j["krylov_dim"] = c.krylov_dim;
  j["eigen_stride"] = c.eigen_stride;
  j["max_steps"] = c.max_steps;
  j["level"] = c.level;
  j["U_phys"] = c.U_phys;
  j["c_phys"] = c.c_phys;
  j["seed"] = c.seed;
  j["fixture_noise"] = c.fixture_noise;
  j["sweep"] = {{"U", c.sweep_U}, {"N_tot", c.sweep_n_total}};
  j["fixture"] = int_map_json(c.fixture);
  return j;
}

json summarize(const ExperimentConfig& config, const std::vector<CellResult>& cells) {
  json s;
  s["schema"] = std::string(kSummarySchema);
  s["preset"] = std::string(to_string(config.preset));
  const bool failed = std::any_of(cells.begin(), cells.end(),
                                  [](const CellResult& c) { return c.run.partial; });
  s["status"] = failed ? "integration-failure" : "ok";
  s["config"] = config_json(config);

  // Per-run extraction, keyed for the aggregations below.
  std::map<std::pair<double, int>, std::optional<double>> maxima, crossings;
  json runs = json::array();
  for (const auto& c : cells) {
    json r;
    r["U"] = c.cell.U;
    r["N_tot"] = c.cell.n_total;
    r["csv"] = c.csv.generic_string();
    r["samples"] = c.run.record.series.size();
    r["partial"] = c.run.partial;
    if (c.run.partial) r["t_reached"] = number_or_null(c.run.t_reached);
    std::optional<double> mx, cross;
    if (!c.run.record.series.empty()) {
      mx = max_occupancy(c.run.record);
      try {
        cross = crossing_time(c.run.record, config.level);
      } catch (const NoCrossing&) {
      }
    }
    r["n_SF_max"] = number_or_null(mx);
    r["tau_star"] = number_or_null(cross);
    const auto& series = c.run.record.series;
    double worst_trace = 0.0, worst_eig = 0.0;
    for (const auto& o : series) {
      worst_trace = std::max(worst_trace, o.trace_residual);
      if (!std::isnan(o.min_eigenvalue)) worst_eig = std::min(worst_eig, o.min_eigenvalue);
    }
    r["max_trace_residual"] = worst_trace;
    r["min_eigenvalue"] = worst_eig;
    runs.push_back(r);
    maxima[{c.cell.U, c.cell.n_total}] = mx;
    crossings[{c.cell.U, c.cell.n_total}] = cross;
  }
  s["runs"] = runs;

  switch (config.preset) {
    case Preset::SingleRun:
      break;
    case Preset::RescalingCollapse: {
      json pairs = json::array();
      for (int n : config.sweep_n_total) {
        const CellResult* prev = nullptr;
        for (const auto& c : cells) {
          if (c.cell.n_total != n || c.run.record.series.empty()) continue;
          if (prev) {
            json p;
            p["N_tot"] = n;
            p["U_a"] = prev->cell.U;
            p["U_b"] = c.cell.U;
            p["sup_distance"] = sup_distance(c.run.record, prev->run.record);
            pairs.push_back(p);
          }
          prev = &c;
        }
      }
      s["rescaling"] = {{"pairs", pairs}};
      break;
    }
    case Preset::OccupancySaturation: {
      json table = json::object();
      bool up_in_n = true, down_in_u = true;
      for (double u : config.sweep_U) {
        json row = json::object();
        std::optional<double> last;
        for (int n : config.sweep_n_total) {
          const auto v = maxima[{u, n}];
          row[std::to_string(n)] = number_or_null(v);
          if (v && last && *v < *last - kMonotoneSlack) up_in_n = false;
          if (v) last = v;
        }
        table[format_number(u)] = row;
      }
      for (int n : config.sweep_n_total) {
        std::optional<double> last;
        for (double u : config.sweep_U) {
          const auto v = maxima[{u, n}];
          if (v && last && *v > *last + kMonotoneSlack) down_in_u = false;
          if (v) last = v;
        }
      }
      s["saturation"] = {{"n_SF_max", table},
                         {"nondecreasing_in_N_tot", up_in_n},
                         {"nonincreasing_in_U", down_in_u}};
      break;
    }
    case Preset::LagAnalysis: {
      json blocks = json::array();
      if (!config.fixture.empty()) {
        json b;
        b["source"] = "fixture";
        blocks.push_back(lag_block(config, noisy_fixture(config), b));
      } else {
        for (double u : config.sweep_U) {
          json b;
          b["source"] = "simulation";
          b["U"] = u;
          std::map<int, double> tau_star;
          json missing = json::array();
          for (int n : config.sweep_n_total) {
            if (const auto v = crossings[{u, n}]) {
              tau_star[n] = *v;
            } else {
              missing.push_back(n);
            }
          }
          b["tau_star"] = int_map_json(tau_star);
          if (!missing.empty()) {
            b["missing_crossings"] = missing;
            b["delta_tau"] = json::object();
            b["fit"] = nullptr;
          } else {
            b = lag_block(config, lag_increments(tau_star), b);
          }
          blocks.push_back(b);
        }
      }
      s["lag"] = blocks;
      break;
    }
  }
  return s;
}

RunOutcome run_preset(const ExperimentConfig& config, const RunOptions& options) {
  config.check();
  const auto cells = cells_of(config);
  RunOutcome out;
  out.cells.resize(cells.size());

  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto log = [&](const std::string& line) {
    if (!options.log) return;
    std::lock_guard lock(log_mutex);
    *options.log << line << '\n' << std::flush;
  };

  std::exception_ptr first_error;
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        const Cell& cell = cells[i];
        const auto rel = cell_csv_name(cell.U, cell.n_total);
        const auto path = config.output / rel;
        const std::string tag =
            "U=" + format_number(cell.U) + " N_tot=" + std::to_string(cell.n_total);
        if (options.resume && std::filesystem::exists(path)) {
          try {
            CsvRun cached = read_csv(path);
            if (!cached.partial) {
              out.cells[i] = CellResult{cell, rel, std::move(cached), true, std::nullopt};
              log("reuse " + tag);
              continue;
            }
          } catch (const std::exception&) {
            // unreadable leftovers are recomputed
          }
        }
        const auto t0 = std::chrono::steady_clock::now();
        CellResult r = simulate(config, cell);
        write_atomic(path, render_csv(r.run));
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        log((r.error ? "FAILED " : "done ") + tag + " (" + format_number(std::round(secs * 10) / 10) +
            " s)" + (r.error ? ": " + *r.error : ""));
        out.cells[i] = std::move(r);
      } catch (...) {
        std::lock_guard lock(log_mutex);
        if (!first_error) first_error = std::current_exception();
        next = cells.size();
      }
    }
  };

  {
    std::vector<std::jthread> pool;
    const unsigned n = worker_count(cells.size());
    for (unsigned k = 1; k < n; ++k) pool.emplace_back(worker);
    worker();
  }
  if (first_error) std::rethrow_exception(first_error);

  out.summary = summarize(config, out.cells);
  std::vector<std::filesystem::path> csvs;
  for (const auto& c : out.cells) csvs.push_back(c.csv);
  std::filesystem::create_directories(config.output);
  write_atomic(config.output / "summary.json", dump(out.summary));
  if (!csvs.empty()) {
    write_atomic(config.output / "plot.gp",
                 render_plot_script(csvs, config.n_sites, to_string(config.preset)));
  }

  const auto failed = std::find_if(out.cells.begin(), out.cells.end(),
                                   [](const CellResult& c) { return c.run.partial; });
  if (failed != out.cells.end()) {
    out.exit_code = kExitIntegration;
    write_atomic(config.output / "error.json",
                 dump(error_json("integration-failure", failed->error.value_or("integration failed"))));
  } else {
    std::filesystem::remove(config.output / "error.json");
  }
  return out;
}

json analyze_directory(const ExperimentConfig& config) {
  config.check();
  std::vector<CellResult> results;
  for (const auto& cell : cells_of(config)) {
    CellResult r;
    r.cell = cell;
    r.csv = cell_csv_name(cell.U, cell.n_total);
    r.run = read_csv(config.output / r.csv);
    r.reused = true;
    results.push_back(std::move(r));
  }
  return summarize(config, results);
}

json estimate_rates_json(const PhysicalParams& p) {
  const TunnelingEstimate e = tunneling_rate(p);
  json j;
  j["barrier_height_kT"] = p.barrier_height;
  j["kinetic_energy_kT"] = p.kinetic_energy;
  j["barrier_width_nm"] = p.barrier_width_nm;
  j["mass_kg"] = p.mass_kg;
  j["temperature_K"] = p.temperature_K;
  j["constant"] = p.hbar_exponent ? "hbar" : "h";
  j["trapping_frequency_per_s"] = e.trapping_frequency;
  j["tunneling_probability"] = e.probability;
  j["rate_per_s"] = e.rate;
  return j;
}

json error_json(std::string_view kind, std::string_view message, std::string_view field, int line,
                int column) {
  json j;
  j["schema"] = std::string(kErrorSchema);
  j["kind"] = std::string(kind);
  j["message"] = std::string(message);
  if (!field.empty()) j["field"] = std::string(field);
  if (line > 0) {
    j["line"] = line;
    j["column"] = column;
  }
  return j;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace klsim::expcli
