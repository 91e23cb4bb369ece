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

#include "klsim/expcli/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace klsim::expcli {

namespace {

const std::map<std::string_view, Preset>& preset_names() {
  static const std::map<std::string_view, Preset> names{
      {"single-run", Preset::SingleRun},
      {"rescaling-collapse", Preset::RescalingCollapse},
      {"occupancy-saturation", Preset::OccupancySaturation},
      {"lag-analysis", Preset::LagAnalysis},
  };
  return names;
}

int line_of(const YAML::Node& n) { return n.Mark().is_null() ? 0 : n.Mark().line + 1; }
int column_of(const YAML::Node& n) { return n.Mark().is_null() ? 0 : n.Mark().column + 1; }

[[noreturn]] void fail_at(const std::string& field, const std::string& msg, const YAML::Node& n) {
  throw ConfigError(field, msg, line_of(n), column_of(n));
}

template <typename T>
T scalar(const YAML::Node& n, const std::string& field, const char* kind) {
  if (!n.IsScalar()) fail_at(field, std::string("expected ") + kind, n);
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    fail_at(field, std::string("expected ") + kind + ", got '" + n.Scalar() + "'", n);
  }
}

template <typename T>
std::vector<T> list(const YAML::Node& n, const std::string& field, const char* kind) {
  if (n.IsScalar()) return {scalar<T>(n, field, kind)};
  if (!n.IsSequence()) fail_at(field, std::string("expected a list of ") + kind, n);
  std::vector<T> out;
  for (const auto& item : n) out.push_back(scalar<T>(item, field, kind));
  return out;
}

std::string join_keys() {
  std::string out;
  for (const auto& k : valid_keys()) {
    if (!out.empty()) out += ", ";
    out += k;
  }
  return out;
}

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw ConfigError(field, std::string(field) + ": " + what);
}

// "key = value" lines become "key : value" so the YAML reader accepts them
// without shifting any column.
std::string normalize_assignments(std::string_view text) {
  std::string out(text);
  std::size_t start = 0;
  while (start < out.size()) {
    std::size_t end = out.find('\n', start);
    if (end == std::string::npos) end = out.size();
    const auto eq = out.find('=', start);
    if (eq < end) {
      const auto colon = out.find(':', start);
      const auto hash = out.find('#', start);
      if ((colon >= eq) && (hash >= eq)) out[eq] = ':';
    }
    start = end + 1;
  }
  return out;
}

}  // namespace

std::string_view to_string(Preset p) noexcept {
  for (const auto& [name, value] : preset_names()) {
    if (value == p) return name;
  }
  return "?";
}

Preset parse_preset(std::string_view name) {
  const auto it = preset_names().find(name);
  if (it == preset_names().end()) {
    throw ConfigError("preset", "preset: unknown preset '" + std::string(name) +
                                    "' (single-run, rescaling-collapse, occupancy-saturation, "
                                    "lag-analysis)");
  }
  return it->second;
}

ConfigError::ConfigError(std::string field, const std::string& message, int line, int column)
    : InvalidArgument(line > 0 ? "line " + std::to_string(line) + ", column " +
                                     std::to_string(column) + ": " + message
                               : message),
      field_(std::move(field)),
      line_(line),
      column_(column) {}

const std::vector<std::string>& valid_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k{"preset",    "N_sites",     "N_tot",      "U",
                               "hbar",      "c_hop",       "gamma_s",    "gamma_d",
                               "statistics", "backend",    "rel_tol",    "abs_tol",
                               "tau_min",   "tau_max",     "grid_points", "krylov_dim",
                               "eigen_stride", "level",    "U_phys",     "c_phys",    "max_steps",
                               "output",    "seed",        "fixture_noise", "sweep",
                               "fixture"};
    std::sort(k.begin(), k.end());
    return k;
  }();
  return keys;
}

ModelParams ExperimentConfig::model(int n_tot, double u) const {
  ModelParams p;
  p.n_sites = n_sites;
  p.n_total = n_tot;
  p.hbar = hbar;
  p.c_hop = c_hop;
  p.U = u;
  p.gamma_s = gamma_s.value_or(p.c_eff());
  p.gamma_d = gamma_d.value_or(p.c_eff());
  p.validate();
  return p;
}

EvolutionConfig ExperimentConfig::evolution(const ModelParams& params) const {
  EvolutionConfig ec;
  ec.propagator = backend;
  ec.rel_tol = rel_tol;
  ec.abs_tol = abs_tol;
  ec.krylov_dim = krylov_dim;
  ec.eigen_stride = eigen_stride;
  ec.max_steps = max_steps;
  ec.output_grid = rescaled_log_grid(params, tau_min, tau_max, grid_points);
  ec.t_max = ec.output_grid.back();
  return ec;
}

void ExperimentConfig::check() const {
  require(n_sites >= 1 && n_sites <= 24, "N_sites", "must be in [1, 24]");
  require(n_total >= 1, "N_tot", "must be >= 1");
  require(U > 0.0, "U", "must be > 0");
  require(hbar > 0.0, "hbar", "must be > 0");
  require(c_hop > 0.0, "c_hop", "must be > 0");
  require(!gamma_s || *gamma_s >= 0.0, "gamma_s", "must be >= 0");
  require(!gamma_d || *gamma_d >= 0.0, "gamma_d", "must be >= 0");
  require(rel_tol > 0.0, "rel_tol", "must be > 0");
  require(abs_tol > 0.0, "abs_tol", "must be > 0");
  require(tau_min > 0.0, "tau_min", "must be > 0");
  require(tau_max > tau_min, "tau_max", "must exceed tau_min");
  require(grid_points >= 2, "grid_points", "must be >= 2");
  require(krylov_dim >= 2, "krylov_dim", "must be >= 2");
  require(eigen_stride >= 1, "eigen_stride", "must be >= 1");
  require(max_steps >= 1, "max_steps", "must be >= 1");
  require(U_phys > 0.0, "U_phys", "must be > 0");
  require(c_phys > 0.0, "c_phys", "must be > 0");
  require(fixture_noise >= 0.0, "fixture_noise", "must be >= 0");
  require(!output.empty(), "output", "must not be empty");

  require(!sweep_U.empty(), "sweep.U", "sweep axis is empty");
  require(!sweep_n_total.empty(), "sweep.N_tot", "sweep axis is empty");
  for (double u : sweep_U) require(u > 0.0, "sweep.U", "values must be > 0");
  for (int n : sweep_n_total) require(n >= 1, "sweep.N_tot", "values must be >= 1");
  if (preset == Preset::LagAnalysis) {
    if (fixture.empty()) {
      require(sweep_n_total.size() >= 5, "sweep.N_tot", "lag-analysis needs at least 5 values");
      for (std::size_t i = 1; i < sweep_n_total.size(); ++i) {
        require(sweep_n_total[i] == sweep_n_total[i - 1] + 1, "sweep.N_tot",
                "lag-analysis needs consecutive values");
      }
    } else {
      require(fixture.size() >= 4, "fixture", "needs at least 4 points");
    }
  }
}

ExperimentConfig validate_config(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(normalize_assignments(text));
  } catch (const YAML::ParserException& e) {
    throw ConfigError("", "parse error: " + e.msg, e.mark.line + 1, e.mark.column + 1);
  }
  ExperimentConfig c;
  if (root.IsNull()) {
    c.sweep_U = {c.U};
    c.sweep_n_total = {c.n_total};
    c.check();
    return c;
  }
  if (!root.IsMap()) fail_at("", "expected key-value pairs", root);

  bool have_sweep_u = false;
  bool have_sweep_n = false;
  const auto& keys = valid_keys();
  for (const auto& kv : root) {
    const YAML::Node& key_node = kv.first;
    const YAML::Node& v = kv.second;
    const std::string key = key_node.as<std::string>();
    if (!std::binary_search(keys.begin(), keys.end(), key)) {
      fail_at(key, "unknown key '" + key + "'; valid keys: " + join_keys(), key_node);
    }
    if (key == "preset") {
      try {
        c.preset = parse_preset(scalar<std::string>(v, key, "a preset name"));
      } catch (const ConfigError& e) {
        fail_at(key, e.what(), v);
      }
    } else if (key == "N_sites") {
      c.n_sites = scalar<int>(v, key, "an integer");
    } else if (key == "N_tot") {
      c.n_total = scalar<int>(v, key, "an integer");
    } else if (key == "U") {
      c.U = scalar<double>(v, key, "a number");
    } else if (key == "hbar") {
      c.hbar = scalar<double>(v, key, "a number");
    } else if (key == "c_hop") {
      c.c_hop = scalar<double>(v, key, "a number");
    } else if (key == "gamma_s") {
      c.gamma_s = scalar<double>(v, key, "a number");
    } else if (key == "gamma_d") {
      c.gamma_d = scalar<double>(v, key, "a number");
    } else if (key == "statistics") {
      const auto s = scalar<std::string>(v, key, "hard-core or jordan-wigner");
      if (s == "hard-core") {
        c.statistics = SiteStatistics::HardCore;
      } else if (s == "jordan-wigner") {
        c.statistics = SiteStatistics::JordanWigner;
      } else {
        fail_at(key, "statistics: expected hard-core or jordan-wigner, got '" + s + "'", v);
      }
    } else if (key == "backend") {
      try {
        c.backend = parse_propagator(scalar<std::string>(v, key, "a backend name"));
      } catch (const InvalidArgument& e) {
        fail_at(key, std::string("backend: ") + e.what(), v);
      }
    } else if (key == "rel_tol") {
      c.rel_tol = scalar<double>(v, key, "a number");
    } else if (key == "abs_tol") {
      c.abs_tol = scalar<double>(v, key, "a number");
    } else if (key == "tau_min") {
      c.tau_min = scalar<double>(v, key, "a number");
    } else if (key == "tau_max") {
      c.tau_max = scalar<double>(v, key, "a number");
    } else if (key == "grid_points") {
      c.grid_points = scalar<int>(v, key, "an integer");
    } else if (key == "krylov_dim") {
      c.krylov_dim = scalar<int>(v, key, "an integer");
    } else if (key == "eigen_stride") {
      c.eigen_stride = scalar<int>(v, key, "an integer");
    } else if (key == "max_steps") {
      c.max_steps = scalar<std::uint64_t>(v, key, "a positive integer");
    } else if (key == "level") {
      c.level = scalar<double>(v, key, "a number");
    } else if (key == "U_phys") {
      c.U_phys = scalar<double>(v, key, "a number");
    } else if (key == "c_phys") {
      c.c_phys = scalar<double>(v, key, "a number");
    } else if (key == "output") {
      c.output = scalar<std::string>(v, key, "a path");
    } else if (key == "seed") {
      c.seed = scalar<std::uint64_t>(v, key, "a non-negative integer");
    } else if (key == "fixture_noise") {
      c.fixture_noise = scalar<double>(v, key, "a number");
    } else if (key == "sweep") {
      if (!v.IsMap()) fail_at(key, "sweep: expected a section with U and N_tot lists", v);
      for (const auto& axis : v) {
        const auto name = axis.first.as<std::string>();
        if (name == "U") {
          c.sweep_U = list<double>(axis.second, "sweep.U", "numbers");
          have_sweep_u = true;
        } else if (name == "N_tot") {
          c.sweep_n_total = list<int>(axis.second, "sweep.N_tot", "integers");
          have_sweep_n = true;
        } else {
          fail_at("sweep." + name, "unknown sweep axis '" + name + "'; valid axes: N_tot, U",
                  axis.first);
        }
        if (axis.second.size() == 0 && !axis.second.IsScalar()) {
          fail_at("sweep." + name, "sweep." + name + ": sweep axis is empty", axis.second);
        }
      }
    } else if (key == "fixture") {
      if (!v.IsMap()) fail_at(key, "fixture: expected N_tot: delta_tau pairs", v);
      for (const auto& pt : v) {
        c.fixture[scalar<int>(pt.first, "fixture", "an integer N_tot")] =
            scalar<double>(pt.second, "fixture", "a number");
      }
    }
  }
  if (!have_sweep_u) c.sweep_U = {c.U};
  if (!have_sweep_n) c.sweep_n_total = {c.n_total};
  std::sort(c.sweep_U.begin(), c.sweep_U.end());
  c.sweep_U.erase(std::unique(c.sweep_U.begin(), c.sweep_U.end()), c.sweep_U.end());
  std::sort(c.sweep_n_total.begin(), c.sweep_n_total.end());
  c.sweep_n_total.erase(std::unique(c.sweep_n_total.begin(), c.sweep_n_total.end()),
                        c.sweep_n_total.end());

  // Re-run range checks with the value's position attached.
  try {
    c.check();
  } catch (const ConfigError& e) {
    const auto dot = e.field().find('.');
    YAML::Node n = dot == std::string::npos
                       ? root[e.field()]
                       : root[e.field().substr(0, dot)][e.field().substr(dot + 1)];
    if (n.IsDefined() && !n.IsNull()) fail_at(e.field(), e.what(), n);
    throw;
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return validate_config(ss.str());
}

void apply_overrides(ExperimentConfig& c, const Overrides& o) {
  if (o.preset) c.preset = parse_preset(*o.preset);
  if (o.U) {
    if (o.U->empty()) throw ConfigError("sweep.U", "sweep.U: sweep axis is empty");
    c.sweep_U = *o.U;
    std::sort(c.sweep_U.begin(), c.sweep_U.end());
    c.sweep_U.erase(std::unique(c.sweep_U.begin(), c.sweep_U.end()), c.sweep_U.end());
    c.U = c.sweep_U.front();
  }
  if (o.n_total) {
    if (o.n_total->empty()) throw ConfigError("sweep.N_tot", "sweep.N_tot: sweep axis is empty");
    c.sweep_n_total = *o.n_total;
    std::sort(c.sweep_n_total.begin(), c.sweep_n_total.end());
    c.sweep_n_total.erase(std::unique(c.sweep_n_total.begin(), c.sweep_n_total.end()),
                          c.sweep_n_total.end());
    c.n_total = c.sweep_n_total.front();
  }
  if (o.backend) {
    try {
      c.backend = parse_propagator(*o.backend);
    } catch (const InvalidArgument& e) {
      throw ConfigError("backend", std::string("backend: ") + e.what());
    }
  }
  if (o.tol) {
    c.rel_tol = *o.tol;
    c.abs_tol = *o.tol * 1e-2;
  }
  if (o.output) c.output = *o.output;
  c.check();
}

}  // namespace klsim::expcli
