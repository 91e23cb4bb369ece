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

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "klsim/analysis.hpp"
#include "klsim/expcli/config.hpp"
#include "klsim/expcli/io.hpp"

namespace klsim::expcli {

/// Exit statuses of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIntegration = 3;

struct Cell {
  double U = 0.0;
  int n_total = 0;
};

struct CellResult {
  Cell cell;
  std::filesystem::path csv;  ///< relative to the output directory
  CsvRun run;
  bool reused = false;        ///< loaded from an existing CSV
  std::optional<std::string> error;
};

/// Sweep cells in output order (U major, N_tot minor). Empty for a
/// lag-analysis driven by fixture data.
std::vector<Cell> cells_of(const ExperimentConfig& config);

/// Worker count: KLSIM_THREADS if set and positive, else the hardware
/// concurrency, never more than `cells`.
unsigned worker_count(std::size_t cells);

struct RunOptions {
  bool resume = true;
  std::ostream* log = nullptr;  ///< progress lines, may be null
};

struct RunOutcome {
  int exit_code = kExitOk;
  nlohmann::ordered_json summary;
  std::vector<CellResult> cells;
};

/// Runs every cell of the preset, writes runs/*.csv, summary.json and
/// plot.gp under config.output, and returns the summary.
RunOutcome run_preset(const ExperimentConfig& config, const RunOptions& options = {});

/// Rebuilds the summary from CSVs already present under config.output.
nlohmann::ordered_json analyze_directory(const ExperimentConfig& config);

/// Preset-level aggregation shared by run_preset and analyze_directory.
nlohmann::ordered_json summarize(const ExperimentConfig& config,
                                 const std::vector<CellResult>& cells);

nlohmann::ordered_json config_json(const ExperimentConfig& config);

nlohmann::ordered_json estimate_rates_json(const PhysicalParams& p);

nlohmann::ordered_json error_json(std::string_view kind, std::string_view message,
                                  std::string_view field = {}, int line = 0, int column = 0);

/// Serialized form used for every JSON artifact (2-space indent, trailing
/// newline).
std::string dump(const nlohmann::ordered_json& j);

}  // namespace klsim::expcli
