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

#include "klsim/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "klsim/errors.hpp"

namespace klsim {

namespace {

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_double(const std::string& token) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') throw InvalidArgument("checkpoint: bad number '" + token + "'");
  return v;
}

std::string expect_line(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument(std::string("checkpoint: missing ") + what);
  return line;
}

}  // namespace

void write_checkpoint(std::ostream& out, const DensityMatrix& rho, double t) {
  const SectorBasis& b = rho.basis();
  out << kCheckpointMagic << '\n';
  out << "basis " << b.n_sites() << ' ' << b.n_total() << ' ' << b.size() << '\n';
  out << "t " << hex(t) << '\n';
  const DenseMatrix& m = rho.matrix();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      out << hex(m(r, c).real()) << ' ' << hex(m(r, c).imag()) << '\n';
  out << "end\n";
}

Checkpoint read_checkpoint(std::istream& in) {
  if (expect_line(in, "magic") != kCheckpointMagic) {
    throw InvalidArgument("checkpoint: bad magic header (expected KLSIM1)");
  }
  std::istringstream basis_line(expect_line(in, "basis descriptor"));
  std::string tag;
  int n_sites = 0;
  int n_total = 0;
  std::size_t dim = 0;
  if (!(basis_line >> tag >> n_sites >> n_total >> dim) || tag != "basis") {
    throw InvalidArgument("checkpoint: malformed basis descriptor");
  }
  SectorBasisPtr basis = enumerate_sector(n_sites, n_total);
  if (basis->size() != dim) throw InvalidArgument("checkpoint: dimension does not match the sector");

  std::istringstream t_line(expect_line(in, "time"));
  std::string t_token;
  if (!(t_line >> tag >> t_token) || tag != "t") throw InvalidArgument("checkpoint: malformed time line");
  const double t = parse_double(t_token);

  const auto n = static_cast<Eigen::Index>(dim);
  DenseMatrix m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      std::istringstream entry(expect_line(in, "matrix entry"));
      std::string re, im;
      if (!(entry >> re >> im)) throw InvalidArgument("checkpoint: malformed matrix entry");
      m(r, c) = cplx(parse_double(re), parse_double(im));
    }
  }
  if (expect_line(in, "end marker") != "end") throw InvalidArgument("checkpoint: missing end marker");
  return Checkpoint{DensityMatrix(std::move(basis), std::move(m)), t};
}

void save_checkpoint(const std::filesystem::path& path, const DensityMatrix& rho, double t) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot open " + path.string() + " for writing");
  write_checkpoint(out, rho, t);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace klsim
