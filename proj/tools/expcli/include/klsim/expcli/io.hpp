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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "klsim/analysis.hpp"

namespace klsim::expcli {

inline constexpr std::string_view kCsvSchema = "klsim-csv/1";
inline constexpr std::string_view kSummarySchema = "klsim-summary/1";
inline constexpr std::string_view kErrorSchema = "klsim-error/1";

/// Shortest round-trip decimal form.
std::string format_number(double x);

/// Writes `content` to a sibling temp file, then renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);

/// One run as stored on disk.
struct CsvRun {
  RunRecord record;
  bool partial = false;
  std::optional<double> t_reached;  ///< only for partial runs
};

/// Column names in file order for a chain of `n_sites`.
std::vector<std::string> csv_columns(int n_sites);

std::string render_csv(const CsvRun& run);
CsvRun parse_csv(std::string_view text);
CsvRun read_csv(const std::filesystem::path& path);

/// Relative file name of one sweep cell, e.g. "runs/U100_N2.csv".
std::filesystem::path cell_csv_name(double U, int n_total);

/// gnuplot script plotting n_SF against tau (log axis) for each CSV.
std::string render_plot_script(const std::vector<std::filesystem::path>& csvs, int n_sites,
                               std::string_view title);

}  // namespace klsim::expcli
