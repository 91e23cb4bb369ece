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

#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "klsim/density_matrix.hpp"
#include "klsim/operators.hpp"

namespace klsim {

/// d rho / dt = -(i/hbar)[H, rho]
///              + gamma_s (-{L_s^dag L_s, rho} + 2 L_s rho L_s^dag)
///              + gamma_d (-{L_d^dag L_d, rho} + 2 L_d rho L_d^dag)
///
/// The anticommutator carries no 1/2 and the sandwich term carries an
/// explicit 2.
DenseMatrix lindblad_rhs(const DenseMatrix& rho, const ModelParams& params,
                         const ModelOperators& ops);
DenseMatrix lindblad_rhs(const DensityMatrix& rho, const ModelParams& params,
                         const ModelOperators& ops);

inline constexpr std::size_t kDenseLiouvillianCap = 64;

/// Full superoperator on column-major vec(rho): column k is
/// vec(lindblad_rhs(E_k)). Refuses sectors above `cap` with CapExceeded.
DenseMatrix dense_liouvillian(const ModelParams& params, const ModelOperators& ops,
                              std::size_t cap = kDenseLiouvillianCap);

/// Difference (n_source(a) - n_source(b), n_drain(a) - n_drain(b)) of a
/// matrix element |a><b|. The generator never changes it.
struct CoherenceLabel {
  int d_source = 0;
  int d_drain = 0;
  bool operator==(const CoherenceLabel&) const = default;
  auto operator<=>(const CoherenceLabel&) const = default;
  /// Representative of {label, -label}: the lexicographically non-negative one.
  CoherenceLabel canonical() const;
};

CoherenceLabel coherence_label(const OccupationState& a, const OccupationState& b);

/// Canonical labels carried by the nonzero entries of `rho`, sorted.
std::vector<CoherenceLabel> labels_present(const DensityMatrix& rho);

/// Row/column partition of a coherence sector into blocks keyed by the
/// (n_source, n_drain) of the row state. Keys sorted by n_source
/// descending, then n_drain ascending; the generator only moves weight
/// toward smaller n_source or larger n_drain, so it is block lower
/// triangular and block j can reach block i only if reachable(i, j).
struct BlockLayout {
  std::vector<Eigen::Index> offsets;       ///< size = blocks + 1
  std::vector<std::pair<int, int>> keys;  ///< (n_source, n_drain)

  std::size_t blocks() const noexcept { return keys.size(); }
  Eigen::Index size(std::size_t b) const noexcept { return offsets[b + 1] - offsets[b]; }
  Eigen::Index dim() const noexcept { return offsets.back(); }
  bool reachable(std::size_t to, std::size_t from) const noexcept {
    return keys[to].first <= keys[from].first && keys[to].second >= keys[from].second;
  }
};

/// Real Hermitian coordinates of one Hermitian-closed coherence sector
/// {delta, -delta} and the real generator acting on them.
///
/// Coordinates are (Re rho_ab, Im rho_ab) for every oriented pair with
/// coherence_label(a, b) == delta (a < b when delta = 0) plus Re rho_aa on
/// the diagonal when delta = 0. Hermiticity holds exactly in these
/// coordinates.
class CoherenceSector {
 public:
  struct Coordinate {
    Eigen::Index row;
    Eigen::Index col;
    bool imaginary;
  };

  CoherenceSector(const ModelOperators& ops, CoherenceLabel label);

  CoherenceLabel label() const noexcept { return label_; }
  Eigen::Index dim() const noexcept { return static_cast<Eigen::Index>(coords_.size()); }
  const std::vector<Coordinate>& coordinates() const noexcept { return coords_; }
  const BlockLayout& layout() const noexcept { return layout_; }
  const Eigen::SparseMatrix<double, Eigen::RowMajor>& generator() const noexcept { return gen_; }
  /// max column abs sum of the generator
  double norm1() const noexcept { return norm1_; }

  Eigen::VectorXd pack(const DenseMatrix& rho) const;
  /// Adds the Hermitian matrix described by `x` into `rho`.
  void unpack_add(const Eigen::VectorXd& x, DenseMatrix& rho) const;

 private:
  CoherenceLabel label_;
  std::vector<Coordinate> coords_;
  BlockLayout layout_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> gen_;
  double norm1_ = 0.0;
};

}  // namespace klsim
