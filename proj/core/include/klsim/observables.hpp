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

#include <limits>
#include <vector>

#include "klsim/density_matrix.hpp"
#include "klsim/operators.hpp"

namespace klsim {

/// One sample of the quantities plotted against rescaled time, plus the
/// numerical-health diagnostics that travel with it.
struct ObservableVector {
  double t = 0.0;
  double tau = 0.0;
  /// <n_mode> in mode order: source, site 1..N, drain.
  std::vector<double> populations;
  double n_SF = 0.0;
  double trace_residual = 0.0;
  double hermiticity_residual = 0.0;
  /// NaN when the spectrum was not evaluated for this sample.
  double min_eigenvalue = std::numeric_limits<double>::quiet_NaN();

  double n_source() const { return populations.front(); }
  double n_drain() const { return populations.back(); }
  double site(int label) const { return populations.at(static_cast<std::size_t>(label)); }
  double total() const;
};

struct MeasureOptions {
  bool spectrum = true;
  double imaginary_tolerance = 1e-10;
};

/// Populations Tr(rho n_mode) and n_SF. Throws IntegrityError if any
/// expectation has an imaginary part above the tolerance.
ObservableVector measure(const DensityMatrix& rho, const ModelParams& params, double t = 0.0,
                         const MeasureOptions& opts = {});

}  // namespace klsim
