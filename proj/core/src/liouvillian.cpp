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

#include "klsim/liouvillian.hpp"

#include <algorithm>
#include <set>
#include <string>
#include <unordered_map>

#include "klsim/errors.hpp"

namespace klsim {

namespace {

void require_shape(const DenseMatrix& rho, const ModelOperators& ops) {
  const auto n = static_cast<Eigen::Index>(ops.basis->size());
  if (rho.rows() != n || rho.cols() != n) {
    throw InvalidArgument("lindblad_rhs: rho is " + std::to_string(rho.rows()) + "x" +
                          std::to_string(rho.cols()) + ", sector dimension is " +
                          std::to_string(n));
  }
}

// gamma (-{A, rho} + 2 L rho L^dag)
DenseMatrix dissipator(const DenseMatrix& rho, double gamma, const SectorOperator& jump,
                       const SectorOperator& decay) {
  const DenseMatrix l_rho = jump.apply_left(rho);
  const DenseMatrix sandwich = jump.apply_left(l_rho.adjoint()).adjoint();  // L rho L^dag
  return gamma * (2.0 * sandwich - decay.apply_left(rho) - decay.apply_right(rho));
}

}  // namespace

DenseMatrix lindblad_rhs(const DenseMatrix& rho, const ModelParams& params,
                         const ModelOperators& ops) {
  require_shape(rho, ops);
  const cplx minus_i_over_hbar(0.0, -1.0 / params.hbar);
  DenseMatrix out =
      minus_i_over_hbar * (ops.hamiltonian.apply_left(rho) - ops.hamiltonian.apply_right(rho));
  if (params.gamma_s != 0.0) out += dissipator(rho, params.gamma_s, ops.jump_source, ops.decay_source);
  if (params.gamma_d != 0.0) out += dissipator(rho, params.gamma_d, ops.jump_drain, ops.decay_drain);
  return out;
}

DenseMatrix lindblad_rhs(const DensityMatrix& rho, const ModelParams& params,
                         const ModelOperators& ops) {
  return lindblad_rhs(rho.matrix(), params, ops);
}

DenseMatrix dense_liouvillian(const ModelParams& params, const ModelOperators& ops,
                              std::size_t cap) {
  const std::size_t n = ops.basis->size();
  if (n > cap) {
    throw CapExceeded("dense_liouvillian: sector dimension " + std::to_string(n) +
                          " exceeds the cap of " + std::to_string(cap),
                      cap);
  }
  const auto ni = static_cast<Eigen::Index>(n);
  DenseMatrix L(ni * ni, ni * ni);
  DenseMatrix unit = DenseMatrix::Zero(ni, ni);
  for (Eigen::Index b = 0; b < ni; ++b) {
    for (Eigen::Index a = 0; a < ni; ++a) {
      unit(a, b) = 1.0;
      const DenseMatrix col = lindblad_rhs(unit, params, ops);
      L.col(a + b * ni) = col.reshaped();
      unit(a, b) = 0.0;
    }
  }
  return L;
}

// ---------------------------------------------------------------------------
// Coherence sectors

CoherenceLabel CoherenceLabel::canonical() const {
  const CoherenceLabel neg{-d_source, -d_drain};
  return *this < neg ? neg : *this;
}

CoherenceLabel coherence_label(const OccupationState& a, const OccupationState& b) {
  return {a.n_source - b.n_source, a.n_drain - b.n_drain};
}

std::vector<CoherenceLabel> labels_present(const DensityMatrix& rho) {
  std::set<CoherenceLabel> found;
  const SectorBasis& basis = rho.basis();
  const DenseMatrix& m = rho.matrix();
  for (Eigen::Index b = 0; b < m.cols(); ++b)
    for (Eigen::Index a = 0; a < m.rows(); ++a)
      if (m(a, b) != cplx(0.0, 0.0))
        found.insert(coherence_label(basis.state(static_cast<std::size_t>(a)),
                                     basis.state(static_cast<std::size_t>(b)))
                         .canonical());
  return {found.begin(), found.end()};
}

namespace {

using RowMajorSparse = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

struct PairHash {
  std::size_t operator()(const std::pair<Eigen::Index, Eigen::Index>& p) const noexcept {
    return std::hash<long long>{}(static_cast<long long>(p.first) * 1000003LL + p.second);
  }
};

using EntryMap = std::unordered_map<std::pair<Eigen::Index, Eigen::Index>, cplx, PairHash>;

// Sparse action of the Lindblad generator on z |c><d|, accumulated into out.
class UnitAction {
 public:
  explicit UnitAction(const ModelOperators& ops) : params_(ops.params) {
    h_col_ = ops.hamiltonian.sparse();
    h_row_ = ops.hamiltonian.sparse();
    as_col_ = ops.decay_source.sparse();
    as_row_ = ops.decay_source.sparse();
    ad_col_ = ops.decay_drain.sparse();
    ad_row_ = ops.decay_drain.sparse();
    ls_col_ = ops.jump_source.sparse();
    ld_col_ = ops.jump_drain.sparse();
  }

  void apply(Eigen::Index c, Eigen::Index d, cplx z, EntryMap& out) const {
    const cplx mi(0.0, -1.0 / params_.hbar);
    left(h_col_, c, d, mi * z, out);
    right(h_row_, c, d, -mi * z, out);
    if (params_.gamma_s != 0.0) {
      left(as_col_, c, d, -params_.gamma_s * z, out);
      right(as_row_, c, d, -params_.gamma_s * z, out);
      sandwich(ls_col_, c, d, 2.0 * params_.gamma_s * z, out);
    }
    if (params_.gamma_d != 0.0) {
      left(ad_col_, c, d, -params_.gamma_d * z, out);
      right(ad_row_, c, d, -params_.gamma_d * z, out);
      sandwich(ld_col_, c, d, 2.0 * params_.gamma_d * z, out);
    }
  }

 private:
  // w A |c><d|
  static void left(const SparseMatrix& a, Eigen::Index c, Eigen::Index d, cplx w, EntryMap& out) {
    for (SparseMatrix::InnerIterator it(a, c); it; ++it) out[{it.row(), d}] += w * it.value();
  }
  // w |c><d| A
  static void right(const RowMajorSparse& a, Eigen::Index c, Eigen::Index d, cplx w, EntryMap& out) {
    for (RowMajorSparse::InnerIterator it(a, d); it; ++it) out[{c, it.col()}] += w * it.value();
  }
  // w L |c><d| L^dag
  static void sandwich(const SparseMatrix& l, Eigen::Index c, Eigen::Index d, cplx w, EntryMap& out) {
    for (SparseMatrix::InnerIterator ia(l, c); ia; ++ia)
      for (SparseMatrix::InnerIterator ib(l, d); ib; ++ib)
        out[{ia.row(), ib.row()}] += w * ia.value() * std::conj(ib.value());
  }

  ModelParams params_;
  SparseMatrix h_col_, as_col_, ad_col_, ls_col_, ld_col_;
  RowMajorSparse h_row_, as_row_, ad_row_;
};

}  // namespace

CoherenceSector::CoherenceSector(const ModelOperators& ops, CoherenceLabel label)
    : label_(label.canonical()) {
  const SectorBasis& basis = *ops.basis;
  const auto n = static_cast<Eigen::Index>(basis.size());
  const bool diagonal = label_ == CoherenceLabel{};

  auto is_representative = [&](Eigen::Index a, Eigen::Index b) {
    if (coherence_label(basis.state(static_cast<std::size_t>(a)),
                        basis.state(static_cast<std::size_t>(b))) != label_) {
      return false;
    }
    return !diagonal || a <= b;
  };

  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      if (!is_representative(a, b)) continue;
      coords_.push_back({a, b, false});
      if (a != b) coords_.push_back({a, b, true});
    }
  }

  auto key_of = [&](const Coordinate& c) {
    const OccupationState& s = basis.state(static_cast<std::size_t>(c.row));
    return std::pair<int, int>{s.n_source, s.n_drain};
  };
  // n_source descending, n_drain ascending, then row, col, Re before Im.
  std::stable_sort(coords_.begin(), coords_.end(), [&](const Coordinate& x, const Coordinate& y) {
    const auto kx = key_of(x);
    const auto ky = key_of(y);
    if (kx.first != ky.first) return kx.first > ky.first;
    if (kx.second != ky.second) return kx.second < ky.second;
    return false;
  });

  layout_.offsets.push_back(0);
  for (std::size_t i = 0; i < coords_.size(); ++i) {
    const auto k = key_of(coords_[i]);
    if (layout_.keys.empty() || layout_.keys.back() != k) {
      if (!layout_.keys.empty()) layout_.offsets.push_back(static_cast<Eigen::Index>(i));
      layout_.keys.push_back(k);
    }
  }
  if (!coords_.empty()) layout_.offsets.push_back(static_cast<Eigen::Index>(coords_.size()));

  std::unordered_map<std::pair<Eigen::Index, Eigen::Index>, Eigen::Index, PairHash> re_index;
  for (std::size_t i = 0; i < coords_.size(); ++i) {
    if (!coords_[i].imaginary) re_index[{coords_[i].row, coords_[i].col}] = static_cast<Eigen::Index>(i);
  }

  const UnitAction action(ops);
  std::vector<Eigen::Triplet<double>> triplets;
  EntryMap out;
  for (std::size_t j = 0; j < coords_.size(); ++j) {
    const Coordinate& c = coords_[j];
    out.clear();
    // Hermitian unit input for this coordinate.
    if (c.row == c.col) {
      action.apply(c.row, c.col, 1.0, out);
    } else if (!c.imaginary) {
      action.apply(c.row, c.col, 1.0, out);
      action.apply(c.col, c.row, 1.0, out);
    } else {
      action.apply(c.row, c.col, cplx(0.0, 1.0), out);
      action.apply(c.col, c.row, cplx(0.0, -1.0), out);
    }
    for (const auto& [ab, v] : out) {
      if (v == cplx(0.0, 0.0) || !is_representative(ab.first, ab.second)) continue;
      const auto it = re_index.find(ab);
      if (it == re_index.end()) {
        throw IntegrityError("coherence sector is not closed under the generator");
      }
      const auto col = static_cast<Eigen::Index>(j);
      if (v.real() != 0.0) triplets.emplace_back(it->second, col, v.real());
      if (ab.first != ab.second && v.imag() != 0.0) triplets.emplace_back(it->second + 1, col, v.imag());
    }
  }
  gen_.resize(dim(), dim());
  gen_.setFromTriplets(triplets.begin(), triplets.end());
  gen_.makeCompressed();

  Eigen::VectorXd colsum = Eigen::VectorXd::Zero(dim());
  for (Eigen::Index r = 0; r < gen_.outerSize(); ++r)
    for (decltype(gen_)::InnerIterator it(gen_, r); it; ++it) colsum[it.col()] += std::abs(it.value());
  norm1_ = dim() ? colsum.maxCoeff() : 0.0;
}

Eigen::VectorXd CoherenceSector::pack(const DenseMatrix& rho) const {
  Eigen::VectorXd x(dim());
  for (std::size_t i = 0; i < coords_.size(); ++i) {
    const cplx v = rho(coords_[i].row, coords_[i].col);
    x[static_cast<Eigen::Index>(i)] = coords_[i].imaginary ? v.imag() : v.real();
  }
  return x;
}

void CoherenceSector::unpack_add(const Eigen::VectorXd& x, DenseMatrix& rho) const {
  for (std::size_t i = 0; i < coords_.size(); ++i) {
    const Coordinate& c = coords_[i];
    const double v = x[static_cast<Eigen::Index>(i)];
    if (c.row == c.col) {
      rho(c.row, c.col) += v;
    } else if (!c.imaginary) {
      rho(c.row, c.col) += v;
      rho(c.col, c.row) += v;
    } else {
      rho(c.row, c.col) += cplx(0.0, v);
      rho(c.col, c.row) -= cplx(0.0, v);
    }
  }
}

}  // namespace klsim
