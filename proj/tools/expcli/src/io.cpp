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

#include "klsim/expcli/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "klsim/errors.hpp"

namespace klsim::expcli {

namespace {

double parse_number(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw IntegrityError("csv line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// "key=value" token lookup inside the schema comment line.
std::optional<std::string_view> token(std::string_view line, std::string_view key) {
  for (auto t : split(line, ' ')) {
    if (t.size() > key.size() && t.substr(0, key.size()) == key && t[key.size()] == '=') {
      return t.substr(key.size() + 1);
    }
  }
  return std::nullopt;
}

}  // namespace

std::string format_number(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::string> csv_columns(int n_sites) {
  std::vector<std::string> cols{"t", "tau", "n_source"};
  for (int j = 1; j <= n_sites; ++j) cols.push_back("n_site_" + std::to_string(j));
  for (const char* c : {"n_SF", "n_drain", "trace_residual", "min_eigenvalue"}) cols.emplace_back(c);
  return cols;
}

std::string render_csv(const CsvRun& run) {
  const auto& p = run.record.params;
  std::string out;
  out += "# ";
  out += kCsvSchema;
  out += " N_sites=" + std::to_string(p.n_sites) + " N_tot=" + std::to_string(p.n_total) +
         " U=" + format_number(p.U) + " hbar=" + format_number(p.hbar) +
         " c_hop=" + format_number(p.c_hop) + " gamma_s=" + format_number(p.gamma_s) +
         " gamma_d=" + format_number(p.gamma_d);
  out += run.partial ? " partial=1" : " partial=0";
  if (run.partial && run.t_reached) out += " t_reached=" + format_number(*run.t_reached);
  out += '\n';

  const auto cols = csv_columns(p.n_sites);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) out += ',';
    out += cols[i];
  }
  out += '\n';
  for (const auto& s : run.record.series) {
    out += format_number(s.t) + ',' + format_number(s.tau);
    for (int j = 0; j <= p.n_sites; ++j) out += ',' + format_number(s.populations[j]);
    out += ',' + format_number(s.n_SF) + ',' + format_number(s.n_drain()) + ',' +
           format_number(s.trace_residual) + ',' + format_number(s.min_eigenvalue) + '\n';
  }
  return out;
}

CsvRun parse_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line.rfind("# " + std::string(kCsvSchema), 0) != 0) {
    throw IntegrityError("csv: missing '" + std::string(kCsvSchema) + "' schema line");
  }
  auto need = [&](std::string_view key) {
    const auto v = token(line, key);
    if (!v) throw IntegrityError("csv: schema line lacks " + std::string(key));
    return *v;
  };
  CsvRun run;
  auto& p = run.record.params;
  p.n_sites = static_cast<int>(parse_number(need("N_sites"), 1));
  p.n_total = static_cast<int>(parse_number(need("N_tot"), 1));
  p.U = parse_number(need("U"), 1);
  p.hbar = parse_number(need("hbar"), 1);
  p.c_hop = parse_number(need("c_hop"), 1);
  p.gamma_s = parse_number(need("gamma_s"), 1);
  p.gamma_d = parse_number(need("gamma_d"), 1);
  run.partial = need("partial") == "1";
  if (const auto t = token(line, "t_reached")) run.t_reached = parse_number(*t, 1);

  const auto cols = csv_columns(p.n_sites);
  if (!std::getline(in, line)) throw IntegrityError("csv: missing header row");
  const auto header = split(line, ',');
  if (header.size() != cols.size() || !std::equal(cols.begin(), cols.end(), header.begin())) {
    throw IntegrityError("csv: header does not match " + std::string(kCsvSchema));
  }
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != cols.size()) {
      throw IntegrityError("csv line " + std::to_string(line_no) + ": expected " +
                           std::to_string(cols.size()) + " fields");
    }
    ObservableVector s;
    s.t = parse_number(f[0], line_no);
    s.tau = parse_number(f[1], line_no);
    for (int j = 0; j <= p.n_sites; ++j) s.populations.push_back(parse_number(f[2 + j], line_no));
    const std::size_t k = 3 + static_cast<std::size_t>(p.n_sites);
    s.n_SF = parse_number(f[k], line_no);
    s.populations.push_back(parse_number(f[k + 1], line_no));
    s.trace_residual = parse_number(f[k + 2], line_no);
    s.min_eigenvalue = parse_number(f[k + 3], line_no);
    run.record.series.push_back(std::move(s));
  }
  return run;
}

CsvRun read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

std::filesystem::path cell_csv_name(double U, int n_total) {
  return std::filesystem::path("runs") /
         ("U" + format_number(U) + "_N" + std::to_string(n_total) + ".csv");
}

std::string render_plot_script(const std::vector<std::filesystem::path>& csvs, int n_sites,
                               std::string_view title) {
  // Two header lines: schema comment and column names.
  const int col = 4 + n_sites;  // n_SF, 1-based
  std::string out;
  out += "# gnuplot script, run from the output directory\n";
  out += "set datafile separator ','\n";
  out += "set logscale x\n";
  out += "set xlabel 'tau'\n";
  out += "set ylabel 'n_SF'\n";
  out += "set title '" + std::string(title) + "'\n";
  out += "set key outside right\n";
  out += "plot \\\n";
  for (std::size_t i = 0; i < csvs.size(); ++i) {
    const auto name = csvs[i].generic_string();
    out += "  '" + name + "' skip 2 using 2:" + std::to_string(col) + " with lines title '" +
           csvs[i].stem().generic_string() + "'";
    out += i + 1 < csvs.size() ? ", \\\n" : "\n";
  }
  return out;
}

}  // namespace klsim::expcli
