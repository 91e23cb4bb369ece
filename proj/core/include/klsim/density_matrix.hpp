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

#include "klsim/fockspace.hpp"
#include "klsim/operators.hpp"

namespace klsim {

/// Tolerances a physical state is held to.
struct StateTolerances {
  double trace = 1e-8;
  double hermiticity = 1e-10;
  double min_eigenvalue = -1e-8;
};

/// rho(t) over a SectorBasis.
class DensityMatrix {
 public:
  DensityMatrix(SectorBasisPtr basis, DenseMatrix entries);

  const SectorBasis& basis() const noexcept { return *basis_; }
  const SectorBasisPtr& basis_ptr() const noexcept { return basis_; }
  const DenseMatrix& matrix() const noexcept { return rho_; }
  std::size_t dim() const noexcept { return basis_->size(); }

  cplx trace() const { return rho_.trace(); }
  double trace_residual() const { return std::abs(rho_.trace() - cplx(1.0, 0.0)); }
  /// max |rho_ij - conj(rho_ji)|
  double hermiticity_residual() const;
  /// Smallest eigenvalue of the Hermitian part. Decomposes rho into the
  /// connected components of its nonzero pattern first, so block-diagonal
  /// states only pay for their blocks.
  double min_eigenvalue() const;
  double purity() const;

  /// rho <- (rho + rho^dag)/2. Returns the residual before the update.
  double symmetrize();

  bool satisfies(const StateTolerances& tol = {}) const;

 private:
  SectorBasisPtr basis_;
  DenseMatrix rho_;
};

/// Pure state with the source fully loaded and chain and drain empty.
DensityMatrix initial_state(const SectorBasisPtr& basis);

/// Identity / dim.
DensityMatrix maximally_mixed(const SectorBasisPtr& basis);

/// Smallest eigenvalue of the Hermitian part of `m`, block by block.
double min_hermitian_eigenvalue(const DenseMatrix& m);

}  // namespace klsim
