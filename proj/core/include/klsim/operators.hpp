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

#include <complex>
#include <cstddef>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "klsim/fockspace.hpp"

namespace klsim {

using cplx = std::complex<double>;
using DenseMatrix = Eigen::MatrixXcd;
using SparseMatrix = Eigen::SparseMatrix<cplx>;
using Triplet = Eigen::Triplet<cplx>;

/// Operators with dimension above this are stored sparse.
inline constexpr std::size_t kDenseCrossover = 64;

/// Physical parameters of the chain model. Energies are in units where the
/// numeric value of U is the dimensionless Coulomb strength when
/// hbar = c_hop = 1.
struct ModelParams {
  int n_sites = 5;
  int n_total = 1;
  double hbar = 1.0;
  double c_hop = 1.0;
  double U = 10.0;
  double gamma_s = 0.1;
  double gamma_d = 0.1;

  /// Effective hopping hbar c_hop^2 / U; the inverse sets the time scale.
  double c_eff() const noexcept { return hbar * c_hop * c_hop / U; }
  double gamma_s_rescaled() const noexcept { return gamma_s / c_eff(); }
  double gamma_d_rescaled() const noexcept { return gamma_d / c_eff(); }

  /// Source and drain rates equal to c_eff (rescaled rates of 1).
  static ModelParams matched_rates(int n_total, double U, int n_sites = 5);

  /// Throws InvalidArgument naming the first offending field.
  void validate() const;
};

/// How a chain-site ladder operator is signed.
enum class SiteStatistics {
  HardCore,      ///< string-free two-level raising/lowering
  JordanWigner,  ///< fermionic sign (-1)^(occupied sites before j)
};

/// A complex square matrix over a SectorBasis. Dimensions up to
/// kDenseCrossover are held dense, larger ones sparse.
class SectorOperator {
 public:
  SectorOperator(SectorBasisPtr basis, const SparseMatrix& m,
                 std::size_t crossover = kDenseCrossover);
  SectorOperator(SectorBasisPtr basis, const std::vector<Triplet>& entries,
                 std::size_t crossover = kDenseCrossover);

  const SectorBasis& basis() const noexcept { return *basis_; }
  const SectorBasisPtr& basis_ptr() const noexcept { return basis_; }
  std::size_t dim() const noexcept { return basis_->size(); }
  bool is_sparse() const noexcept { return std::holds_alternative<SparseMatrix>(data_); }

  DenseMatrix dense() const;
  SparseMatrix sparse() const;
  cplx coeff(std::size_t row, std::size_t col) const;

  SectorOperator adjoint() const;

  /// A * rho and rho * A for a dense rho over the same basis.
  DenseMatrix apply_left(const DenseMatrix& rho) const;
  DenseMatrix apply_right(const DenseMatrix& rho) const;

  /// max |A_ij - conj(A_ji)|
  double hermiticity_defect() const;
  double max_abs() const;

  friend SectorOperator operator*(const SectorOperator& a, const SectorOperator& b);
  friend SectorOperator operator+(const SectorOperator& a, const SectorOperator& b);
  friend SectorOperator operator-(const SectorOperator& a, const SectorOperator& b);
  friend SectorOperator operator*(cplx s, const SectorOperator& a);

 private:
  SectorBasisPtr basis_;
  std::variant<DenseMatrix, SparseMatrix> data_;
};

/// A linear map between two sectors (typically N_tot -> N_tot - 1).
/// Bare ladder operators live here; only number-conserving compositions
/// become SectorOperators.
struct SectorMap {
  SectorBasisPtr domain;
  SectorBasisPtr codomain;
  SparseMatrix matrix;  ///< codomain.size() x domain.size()

  SectorMap adjoint() const;
  /// Vector in the codomain.
  Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const;
  /// Interpret a number-conserving map as an operator on its domain.
  SectorOperator as_operator() const;
};

/// `second` after `first`. The intermediate sectors must coincide.
SectorMap compose(const SectorMap& second, const SectorMap& first);

/// Lowering operator of `mode`, from sector N_tot to N_tot - 1. Bosonic
/// modes carry sqrt(n); sites map 1 -> 0 with unit amplitude (signed under
/// JordanWigner) and annihilate an empty site.
SectorMap ladder_down(const SectorBasisPtr& basis, const Mode& mode,
                      SiteStatistics stats = SiteStatistics::HardCore);

/// Raising operator of `mode` into `basis` from the sector below it.
SectorMap ladder_up(const SectorBasisPtr& basis, const Mode& mode,
                    SiteStatistics stats = SiteStatistics::HardCore);

/// Chain Hamiltonian: nearest-neighbour hopping -hbar c_hop plus the full
/// 1/|j - j'| Coulomb tail between occupied sites. Source and drain enter
/// neither term.
SectorOperator build_hamiltonian(const ModelParams& params, const SectorBasisPtr& basis,
                                 SiteStatistics stats = SiteStatistics::HardCore);

/// Source jump sigma_1^dag sigma_0: moves a particle from the source onto
/// site 1.
SectorOperator build_jump_source(const SectorBasisPtr& basis,
                                 SiteStatistics stats = SiteStatistics::HardCore);

/// Drain jump sigma_{N+1}^dag sigma_N: moves a particle from site N into
/// the drain.
SectorOperator build_jump_drain(const SectorBasisPtr& basis,
                                SiteStatistics stats = SiteStatistics::HardCore);

/// Diagonal occupation operator of `mode`.
SectorOperator number_operator(const SectorBasisPtr& basis, const Mode& mode);

/// Everything the master equation needs for one sector, built once.
struct ModelOperators {
  ModelParams params;
  SectorBasisPtr basis;
  SiteStatistics statistics;
  SectorOperator hamiltonian;
  SectorOperator jump_source;
  SectorOperator jump_drain;
  SectorOperator decay_source;  ///< L_s^dag L_s
  SectorOperator decay_drain;   ///< L_d^dag L_d
};

ModelOperators build_model_operators(const ModelParams& params, SectorBasisPtr basis,
                                     SiteStatistics stats = SiteStatistics::HardCore);

/// Convenience: enumerate the sector for `params` and build its operators.
ModelOperators build_model_operators(const ModelParams& params,
                                     SiteStatistics stats = SiteStatistics::HardCore);

}  // namespace klsim
