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

#include "klsim/density_matrix.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "klsim/errors.hpp"

namespace klsim {

DensityMatrix::DensityMatrix(SectorBasisPtr basis, DenseMatrix entries)
    : basis_(std::move(basis)), rho_(std::move(entries)) {
  const auto n = static_cast<Eigen::Index>(basis_->size());
  if (rho_.rows() != n || rho_.cols() != n) {
    throw InvalidArgument("density matrix shape " + std::to_string(rho_.rows()) + "x" +
                          std::to_string(rho_.cols()) + " does not match basis size " +
                          std::to_string(n));
  }
}

double DensityMatrix::hermiticity_residual() const {
  if (rho_.size() == 0) return 0.0;
  return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::min_eigenvalue() const { return min_hermitian_eigenvalue(rho_); }

double DensityMatrix::purity() const {
  // Tr(rho^2) = sum_ij rho_ij rho_ji
  return (rho_.cwiseProduct(rho_.transpose())).sum().real();
}

double DensityMatrix::symmetrize() {
  const double before = hermiticity_residual();
  DenseMatrix sym = 0.5 * (rho_ + rho_.adjoint());
  rho_ = std::move(sym);
  return before;
}

bool DensityMatrix::satisfies(const StateTolerances& tol) const {
  return trace_residual() <= tol.trace && hermiticity_residual() <= tol.hermiticity &&
         min_eigenvalue() >= tol.min_eigenvalue;
}

DensityMatrix initial_state(const SectorBasisPtr& basis) {
  const auto n = static_cast<Eigen::Index>(basis->size());
  DenseMatrix rho = DenseMatrix::Zero(n, n);
  rho(0, 0) = 1.0;  // canonical order puts (N_tot|0..0|0) first
  return DensityMatrix(basis, std::move(rho));
}

DensityMatrix maximally_mixed(const SectorBasisPtr& basis) {
  const auto n = static_cast<Eigen::Index>(basis->size());
  DenseMatrix rho = DenseMatrix::Identity(n, n) / static_cast<double>(n);
  return DensityMatrix(basis, std::move(rho));
}

namespace {

struct DisjointSets {
  std::vector<Eigen::Index> parent;
  explicit DisjointSets(Eigen::Index n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), Eigen::Index{0});
  }
  Eigen::Index find(Eigen::Index x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      auto& p = parent[static_cast<std::size_t>(x)];
      p = parent[static_cast<std::size_t>(p)];
      x = p;
    }
    return x;
  }
  void unite(Eigen::Index a, Eigen::Index b) { parent[static_cast<std::size_t>(find(a))] = find(b); }
};

}  // namespace

double min_hermitian_eigenvalue(const DenseMatrix& m) {
  const Eigen::Index n = m.rows();
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  const DenseMatrix herm = 0.5 * (m + m.adjoint());

  DisjointSets sets(n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < j; ++i)
      if (herm(i, j) != cplx(0.0, 0.0)) sets.unite(i, j);

  std::vector<std::vector<Eigen::Index>> groups(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) groups[static_cast<std::size_t>(sets.find(i))].push_back(i);

  double best = std::numeric_limits<double>::infinity();
  for (const auto& g : groups) {
    if (g.empty()) continue;
    if (g.size() == 1) {
      best = std::min(best, herm(g[0], g[0]).real());
      continue;
    }
    const auto k = static_cast<Eigen::Index>(g.size());
    DenseMatrix sub(k, k);
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = 0; b < k; ++b)
        sub(a, b) = herm(g[static_cast<std::size_t>(a)], g[static_cast<std::size_t>(b)]);
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(sub, Eigen::EigenvaluesOnly);
    best = std::min(best, es.eigenvalues().minCoeff());
  }
  return best;
}

}  // namespace klsim
