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

#include "klsim/operators.hpp"

#include <cmath>
#include <string>

#include "klsim/errors.hpp"

namespace klsim {

ModelParams ModelParams::matched_rates(int n_total, double U, int n_sites) {
  ModelParams p;
  p.n_sites = n_sites;
  p.n_total = n_total;
  p.U = U;
  p.gamma_s = p.c_eff();
  p.gamma_d = p.c_eff();
  return p;
}

void ModelParams::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw InvalidArgument(field + ": " + why);
  };
  if (n_sites < 1) fail("n_sites", "must be >= 1");
  if (n_total < 1) fail("n_total", "must be >= 1");
  if (!(hbar > 0.0) || !std::isfinite(hbar)) fail("hbar", "must be > 0");
  if (!(c_hop > 0.0) || !std::isfinite(c_hop)) fail("c_hop", "must be > 0");
  if (!(U > 0.0) || !std::isfinite(U)) fail("U", "must be > 0");
  if (!(gamma_s >= 0.0) || !std::isfinite(gamma_s)) fail("gamma_s", "must be >= 0");
  if (!(gamma_d >= 0.0) || !std::isfinite(gamma_d)) fail("gamma_d", "must be >= 0");
}

// ---------------------------------------------------------------------------
// SectorOperator

namespace {

std::variant<DenseMatrix, SparseMatrix> choose_storage(const SparseMatrix& m,
                                                       std::size_t crossover) {
  if (static_cast<std::size_t>(m.rows()) > crossover) {
    SparseMatrix s = m;
    s.prune(cplx(0.0, 0.0));
    s.makeCompressed();
    return s;
  }
  return DenseMatrix(m);
}

}  // namespace

SectorOperator::SectorOperator(SectorBasisPtr basis, const SparseMatrix& m, std::size_t crossover)
    : basis_(std::move(basis)) {
  const auto n = static_cast<Eigen::Index>(basis_->size());
  if (m.rows() != n || m.cols() != n) {
    throw InvalidArgument("operator shape " + std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()) + " does not match basis size " +
                          std::to_string(n));
  }
  data_ = choose_storage(m, crossover);
}

SectorOperator::SectorOperator(SectorBasisPtr basis, const std::vector<Triplet>& entries,
                               std::size_t crossover)
    : basis_(std::move(basis)) {
  const auto n = static_cast<Eigen::Index>(basis_->size());
  SparseMatrix m(n, n);
  m.setFromTriplets(entries.begin(), entries.end());
  data_ = choose_storage(m, crossover);
}

DenseMatrix SectorOperator::dense() const {
  if (const auto* d = std::get_if<DenseMatrix>(&data_)) return *d;
  return DenseMatrix(std::get<SparseMatrix>(data_));
}

SparseMatrix SectorOperator::sparse() const {
  if (const auto* s = std::get_if<SparseMatrix>(&data_)) return *s;
  SparseMatrix s = std::get<DenseMatrix>(data_).sparseView();
  s.makeCompressed();
  return s;
}

cplx SectorOperator::coeff(std::size_t row, std::size_t col) const {
  if (row >= dim() || col >= dim()) throw InvalidArgument("operator index out of range");
  const auto r = static_cast<Eigen::Index>(row);
  const auto c = static_cast<Eigen::Index>(col);
  if (const auto* d = std::get_if<DenseMatrix>(&data_)) return (*d)(r, c);
  return std::get<SparseMatrix>(data_).coeff(r, c);
}

SectorOperator SectorOperator::adjoint() const {
  SparseMatrix adj = sparse().adjoint();
  return SectorOperator(basis_, adj);
}

DenseMatrix SectorOperator::apply_left(const DenseMatrix& rho) const {
  if (static_cast<std::size_t>(rho.rows()) != dim()) throw InvalidArgument("apply_left: shape mismatch");
  return std::visit([&](const auto& m) -> DenseMatrix { return m * rho; }, data_);
}

DenseMatrix SectorOperator::apply_right(const DenseMatrix& rho) const {
  if (static_cast<std::size_t>(rho.cols()) != dim()) throw InvalidArgument("apply_right: shape mismatch");
  return std::visit([&](const auto& m) -> DenseMatrix { return rho * m; }, data_);
}

double SectorOperator::hermiticity_defect() const {
  const DenseMatrix d = dense();
  return (d - d.adjoint()).cwiseAbs().maxCoeff();
}

double SectorOperator::max_abs() const {
  return std::visit(
      [](const auto& m) -> double {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, DenseMatrix>) {
          return m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
        } else {
          double best = 0.0;
          for (Eigen::Index k = 0; k < m.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(m, k); it; ++it) best = std::max(best, std::abs(it.value()));
          return best;
        }
      },
      data_);
}

namespace {

void require_same_basis(const SectorOperator& a, const SectorOperator& b) {
  if (!a.basis().same_sector(b.basis())) throw InvalidArgument("operators live on different sectors");
}

}  // namespace

SectorOperator operator*(const SectorOperator& a, const SectorOperator& b) {
  require_same_basis(a, b);
  SparseMatrix p = a.sparse() * b.sparse();
  return SectorOperator(a.basis_, p);
}

SectorOperator operator+(const SectorOperator& a, const SectorOperator& b) {
  require_same_basis(a, b);
  SparseMatrix s = a.sparse() + b.sparse();
  return SectorOperator(a.basis_, s);
}

SectorOperator operator-(const SectorOperator& a, const SectorOperator& b) {
  require_same_basis(a, b);
  SparseMatrix s = a.sparse() - b.sparse();
  return SectorOperator(a.basis_, s);
}

SectorOperator operator*(cplx s, const SectorOperator& a) {
  SparseMatrix m = s * a.sparse();
  return SectorOperator(a.basis_, m);
}

// ---------------------------------------------------------------------------
// Sector maps and ladder operators

SectorMap SectorMap::adjoint() const {
  SectorMap out;
  out.domain = codomain;
  out.codomain = domain;
  out.matrix = matrix.adjoint();
  return out;
}

Eigen::VectorXcd SectorMap::apply(const Eigen::VectorXcd& v) const {
  if (v.size() != matrix.cols()) throw InvalidArgument("SectorMap::apply: vector size mismatch");
  return matrix * v;
}

SectorOperator SectorMap::as_operator() const {
  if (!domain->same_sector(*codomain)) {
    throw InvalidArgument("map changes the particle number; it is not a sector operator");
  }
  return SectorOperator(domain, matrix);
}

SectorMap compose(const SectorMap& second, const SectorMap& first) {
  if (!first.codomain->same_sector(*second.domain)) {
    throw InvalidArgument("compose: intermediate sectors differ");
  }
  SectorMap out;
  out.domain = first.domain;
  out.codomain = second.codomain;
  out.matrix = second.matrix * first.matrix;
  out.matrix.prune(cplx(0.0, 0.0));
  return out;
}

SectorMap ladder_down(const SectorBasisPtr& basis, const Mode& mode, SiteStatistics stats) {
  if (!basis->has_mode(mode)) {
    throw InvalidArgument("invalid mode " + mode.name() + " for a chain of " +
                          std::to_string(basis->n_sites()) + " sites");
  }
  SectorMap out;
  out.domain = basis;
  out.codomain = build_sector(basis->n_sites(), basis->n_total() - 1, true);

  std::vector<Triplet> entries;
  for (std::size_t col = 0; col < basis->size(); ++col) {
    const OccupationState& s = basis->state(col);
    const int n = occupation(s, mode);
    if (n == 0) continue;
    OccupationState t = s;
    double amp = 1.0;
    switch (mode.kind()) {
      case Mode::Kind::Source:
        t.n_source -= 1;
        amp = std::sqrt(static_cast<double>(n));
        break;
      case Mode::Kind::Drain:
        t.n_drain -= 1;
        amp = std::sqrt(static_cast<double>(n));
        break;
      case Mode::Kind::Site: {
        const auto j = static_cast<std::size_t>(mode.site_label() - 1);
        t.sites[j] = 0;
        if (stats == SiteStatistics::JordanWigner) {
          int before = 0;
          for (std::size_t i = 0; i < j; ++i) before += s.sites[i];
          if (before % 2) amp = -1.0;
        }
        break;
      }
    }
    entries.emplace_back(static_cast<Eigen::Index>(out.codomain->index_of(t)),
                         static_cast<Eigen::Index>(col), cplx(amp, 0.0));
  }
  out.matrix.resize(static_cast<Eigen::Index>(out.codomain->size()),
                    static_cast<Eigen::Index>(basis->size()));
  out.matrix.setFromTriplets(entries.begin(), entries.end());
  return out;
}

SectorMap ladder_up(const SectorBasisPtr& basis, const Mode& mode, SiteStatistics stats) {
  return ladder_down(basis, mode, stats).adjoint();
}

namespace {

void require_basis_matches(const ModelParams& params, const SectorBasis& basis) {
  if (params.n_sites != basis.n_sites() || params.n_total != basis.n_total()) {
    throw InvalidArgument("basis (N_sites=" + std::to_string(basis.n_sites()) + ", N_tot=" +
                          std::to_string(basis.n_total()) + ") does not match params (N_sites=" +
                          std::to_string(params.n_sites) + ", N_tot=" +
                          std::to_string(params.n_total) + ")");
  }
}

// a_i^dag a_k within the sector of `basis`.
SparseMatrix transfer(const SectorBasisPtr& basis, const Mode& to, const Mode& from,
                      SiteStatistics stats) {
  const SectorMap down = ladder_down(basis, from, stats);
  const SectorMap up = ladder_up(basis, to, stats);
  return compose(up, down).matrix;
}

}  // namespace

SectorOperator build_hamiltonian(const ModelParams& params, const SectorBasisPtr& basis,
                                 SiteStatistics stats) {
  params.validate();
  require_basis_matches(params, *basis);
  const auto n = static_cast<Eigen::Index>(basis->size());
  const int sites = basis->n_sites();

  SparseMatrix hop(n, n);
  for (int j = 1; j < sites; ++j) hop += transfer(basis, Mode::site(j), Mode::site(j + 1), stats);
  // Symmetric by construction: the reverse hop is the exact adjoint.
  SparseMatrix kinetic = -(params.hbar * params.c_hop) * (hop + SparseMatrix(hop.adjoint()));

  std::vector<Triplet> diag;
  for (Eigen::Index a = 0; a < n; ++a) {
    const auto& occ = basis->state(static_cast<std::size_t>(a)).sites;
    double e = 0.0;
    for (int j = 0; j < sites; ++j) {
      if (!occ[static_cast<std::size_t>(j)]) continue;
      for (int k = j + 1; k < sites; ++k) {
        if (occ[static_cast<std::size_t>(k)]) e += params.U / static_cast<double>(k - j);
      }
    }
    if (e != 0.0) diag.emplace_back(a, a, cplx(e, 0.0));
  }
  SparseMatrix coulomb(n, n);
  coulomb.setFromTriplets(diag.begin(), diag.end());

  SparseMatrix h = kinetic + coulomb;
  return SectorOperator(basis, h);
}

SectorOperator build_jump_source(const SectorBasisPtr& basis, SiteStatistics stats) {
  return SectorOperator(basis, transfer(basis, Mode::site(1), Mode::source(), stats));
}

SectorOperator build_jump_drain(const SectorBasisPtr& basis, SiteStatistics stats) {
  return SectorOperator(basis, transfer(basis, Mode::drain(), Mode::site(basis->n_sites()), stats));
}

SectorOperator number_operator(const SectorBasisPtr& basis, const Mode& mode) {
  if (!basis->has_mode(mode)) throw InvalidArgument("invalid mode " + mode.name());
  std::vector<Triplet> diag;
  for (std::size_t a = 0; a < basis->size(); ++a) {
    const int n = occupation(basis->state(a), mode);
    if (n) diag.emplace_back(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a), cplx(n, 0.0));
  }
  return SectorOperator(basis, diag);
}

ModelOperators build_model_operators(const ModelParams& params, SectorBasisPtr basis,
                                     SiteStatistics stats) {
  params.validate();
  require_basis_matches(params, *basis);
  SectorOperator h = build_hamiltonian(params, basis, stats);
  SectorOperator ls = build_jump_source(basis, stats);
  SectorOperator ld = build_jump_drain(basis, stats);
  SectorOperator as = ls.adjoint() * ls;
  SectorOperator ad = ld.adjoint() * ld;
  return ModelOperators{params, std::move(basis), stats, std::move(h), std::move(ls),
                        std::move(ld), std::move(as), std::move(ad)};
}

ModelOperators build_model_operators(const ModelParams& params, SiteStatistics stats) {
  params.validate();
  return build_model_operators(params, enumerate_sector(params.n_sites, params.n_total), stats);
}

}  // namespace klsim
