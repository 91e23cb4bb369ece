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

#include "klsim/observables.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "klsim/errors.hpp"

namespace klsim {

double ObservableVector::total() const {
  return std::accumulate(populations.begin(), populations.end(), 0.0);
}

ObservableVector measure(const DensityMatrix& rho, const ModelParams& params, double t,
                         const MeasureOptions& opts) {
  const SectorBasis& basis = rho.basis();
  if (basis.n_sites() != params.n_sites || basis.n_total() != params.n_total) {
    throw InvalidArgument("measure: state and params describe different sectors");
  }
  const auto n_modes = static_cast<std::size_t>(basis.n_sites()) + 2;
  std::vector<cplx> acc(n_modes, cplx(0.0, 0.0));

  // Number operators are diagonal in the occupation basis.
  for (std::size_t a = 0; a < basis.size(); ++a) {
    const cplx p = rho.matrix()(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a));
    const OccupationState& s = basis.state(a);
    acc.front() += p * static_cast<double>(s.n_source);
    for (std::size_t j = 0; j < s.sites.size(); ++j) acc[j + 1] += p * static_cast<double>(s.sites[j]);
    acc.back() += p * static_cast<double>(s.n_drain);
  }

  ObservableVector out;
  out.t = t;
  out.tau = t * params.c_eff();
  out.populations.resize(n_modes);
  for (std::size_t m = 0; m < n_modes; ++m) {
    if (std::abs(acc[m].imag()) > opts.imaginary_tolerance) {
      throw IntegrityError("imaginary part " + std::to_string(acc[m].imag()) +
                           " in population of mode " + std::to_string(m));
    }
    out.populations[m] = acc[m].real();
  }
  out.n_SF = std::accumulate(out.populations.begin() + 1, out.populations.end() - 1, 0.0);
  out.trace_residual = rho.trace_residual();
  out.hermiticity_residual = rho.hermiticity_residual();
  if (opts.spectrum) out.min_eigenvalue = rho.min_eigenvalue();
  return out;
}

}  // namespace klsim
