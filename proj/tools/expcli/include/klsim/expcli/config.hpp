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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "klsim/errors.hpp"
#include "klsim/operators.hpp"
#include "klsim/propagators.hpp"

namespace klsim::expcli {

enum class Preset { SingleRun, RescalingCollapse, OccupancySaturation, LagAnalysis };

std::string_view to_string(Preset p) noexcept;
Preset parse_preset(std::string_view name);

/// Bad configuration. Carries the offending field and, when it came from
/// a file, the 1-based position of the value.
class ConfigError : public InvalidArgument {
 public:
  ConfigError(std::string field, const std::string& message, int line = 0, int column = 0);
  const std::string& field() const noexcept { return field_; }
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  std::string field_;
  int line_;
  int column_;
};

struct ExperimentConfig {
  Preset preset = Preset::SingleRun;

  // model
  int n_sites = 5;
  int n_total = 2;
  double U = 10.0;
  double hbar = 1.0;
  double c_hop = 1.0;
  std::optional<double> gamma_s;  ///< unset: c_eff
  std::optional<double> gamma_d;
  SiteStatistics statistics = SiteStatistics::HardCore;

  // evolution
  Propagator backend = Propagator::DenseExponential;
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double tau_min = 1e-2;
  double tau_max = 100.0;
  int grid_points = 200;
  int krylov_dim = 30;
  int eigen_stride = 10;
  std::uint64_t max_steps = 200'000'000;  ///< explicit backend step budget

  // analysis
  double level = 1.0;
  double U_phys = 1e3;   ///< dimensionless Coulomb strength for t_phys
  double c_phys = 1e13;  ///< physical hopping rate, 1/s

  // sweep axes; default to {U} and {N_tot}
  std::vector<double> sweep_U;
  std::vector<int> sweep_n_total;

  /// Injected delta_tau data for lag-analysis (skips simulation).
  std::map<int, double> fixture;
  double fixture_noise = 0.0;  ///< relative, Gaussian
  std::uint64_t seed = 0;

  std::filesystem::path output = "klsim-out";

  /// Model parameters for one sweep cell, rates defaulted to c_eff.
  ModelParams model(int n_total, double U) const;
  /// Evolution settings for one cell, grid laid out in tau.
  EvolutionConfig evolution(const ModelParams& params) const;
  /// Range checks; throws ConfigError naming the field.
  void check() const;
};

/// Top-level keys accepted by validate_config, sorted.
const std::vector<std::string>& valid_keys();

/// Parses the key-value text format (a YAML subset: scalar keys plus the
/// `sweep` and `fixture` sections), applies defaults, and range-checks.
ExperimentConfig validate_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Command-line overrides, applied after the file.
struct Overrides {
  std::optional<std::string> preset;
  std::optional<std::vector<double>> U;
  std::optional<std::vector<int>> n_total;
  std::optional<std::string> backend;
  std::optional<double> tol;
  std::optional<std::filesystem::path> output;
};

void apply_overrides(ExperimentConfig& config, const Overrides& o);

}  // namespace klsim::expcli
