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

#include "klsim/block_matrix.hpp"

#include <cmath>
#include <limits>

#include "klsim/errors.hpp"

namespace klsim {

BlockTriangularMatrix::BlockTriangularMatrix(std::shared_ptr<const BlockLayout> layout)
    : layout_(std::move(layout)) {
  const std::size_t nb = layout_->blocks();
  panels_.resize(nb);
  for (std::size_t j = 0; j < nb; ++j) {
    Panel& p = panels_[j];
    p.offset_of.assign(nb, -1);
    Eigen::Index rows = 0;
    for (std::size_t i = j; i < nb; ++i) {
      if (!layout_->reachable(i, j)) continue;
      p.row_blocks.push_back(i);
      p.offset_of[i] = rows;
      rows += layout_->size(i);
    }
    p.data = Eigen::MatrixXd::Zero(rows, layout_->size(j));
  }
}

BlockTriangularMatrix BlockTriangularMatrix::identity(std::shared_ptr<const BlockLayout> layout) {
  BlockTriangularMatrix m(std::move(layout));
  for (std::size_t j = 0; j < m.panels_.size(); ++j) {
    const Eigen::Index w = m.layout_->size(j);
    m.panels_[j].data.topRows(w).setIdentity();  // block j is first in its own panel
  }
  return m;
}

void BlockTriangularMatrix::conserve(const Eigen::VectorXd& w) {
  const auto& offsets = layout_->offsets;
  for (std::size_t b = 0; b < panels_.size(); ++b) {
    Panel& p = panels_[b];
    // Gather the functional on this panel's rows.
    Eigen::VectorXd wp(p.data.rows());
    for (std::size_t rb : p.row_blocks) {
      const Eigen::Index len = offsets[rb + 1] - offsets[rb];
      wp.segment(p.offset_of[rb], len) = w.segment(offsets[rb], len);
    }
    if (wp.isZero(0.0)) continue;
    for (Eigen::Index c = 0; c < p.data.cols(); ++c) {
      auto col = p.data.col(c);
      const double defect = w[offsets[b] + c] - wp.dot(col);
      const Eigen::ArrayXd weight = wp.array().abs() * col.array().abs();
      const double denom = (weight * wp.array().abs()).sum();
      if (defect == 0.0 || denom == 0.0) continue;
      col.array() += (defect / denom) * weight * wp.array().sign();
    }
  }
}

std::size_t BlockTriangularMatrix::stored_entries() const noexcept {
  std::size_t n = 0;
  for (const auto& p : panels_) n += static_cast<std::size_t>(p.data.size());
  return n;
}

BlockTriangularMatrix BlockTriangularMatrix::exp_taylor(
    const Eigen::SparseMatrix<double, Eigen::RowMajor>& s,
    std::shared_ptr<const BlockLayout> layout, double h) {
  if (s.rows() != layout->dim() || s.cols() != layout->dim()) {
    throw InvalidArgument("exp_taylor: generator does not match the layout");
  }
  BlockTriangularMatrix out(layout);
  const Eigen::Index n = layout->dim();
  constexpr int kMaxTerms = 60;
  const double eps = std::numeric_limits<double>::epsilon();

  for (std::size_t j = 0; j < layout->blocks(); ++j) {
    const Eigen::Index c0 = layout->offsets[j];
    const Eigen::Index w = layout->size(j);
    Eigen::MatrixXd term = Eigen::MatrixXd::Zero(n, w);
    term.middleRows(c0, w).setIdentity();
    Eigen::MatrixXd sum = term;
    for (int k = 1; k <= kMaxTerms; ++k) {
      Eigen::MatrixXd next = (h / k) * (s * term);
      term.swap(next);
      sum += term;
      if (term.cwiseAbs().maxCoeff() <= eps * sum.cwiseAbs().maxCoeff()) break;
    }
    Panel& p = out.panels_[j];
    for (std::size_t i : p.row_blocks) {
      p.data.middleRows(p.offset_of[i], layout->size(i)) =
          sum.middleRows(layout->offsets[i], layout->size(i));
    }
  }
  return out;
}

BlockTriangularMatrix BlockTriangularMatrix::operator*(const BlockTriangularMatrix& rhs) const {
  if (layout_ != rhs.layout_ && layout_->offsets != rhs.layout_->offsets) {
    throw InvalidArgument("block product: layouts differ");
  }
  BlockTriangularMatrix out(layout_);
  Eigen::MatrixXd tmp;
  for (std::size_t j = 0; j < panels_.size(); ++j) {
    const Panel& b = rhs.panels_[j];
    Panel& c = out.panels_[j];
    for (std::size_t k : b.row_blocks) {
      const Panel& a = panels_[k];
      const auto bkj = b.data.middleRows(b.offset_of[k], layout_->size(k));
      tmp.noalias() = a.data * bkj;
      for (std::size_t i : a.row_blocks) {
        c.data.middleRows(c.offset_of[i], layout_->size(i)) +=
            tmp.middleRows(a.offset_of[i], layout_->size(i));
      }
    }
  }
  return out;
}

Eigen::VectorXd BlockTriangularMatrix::operator*(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) throw InvalidArgument("block matvec: size mismatch");
  Eigen::VectorXd y = Eigen::VectorXd::Zero(dim());
  Eigen::VectorXd tmp;
  for (std::size_t j = 0; j < panels_.size(); ++j) {
    const Panel& p = panels_[j];
    tmp.noalias() = p.data * x.segment(layout_->offsets[j], layout_->size(j));
    for (std::size_t i : p.row_blocks) {
      y.segment(layout_->offsets[i], layout_->size(i)) += tmp.segment(p.offset_of[i], layout_->size(i));
    }
  }
  return y;
}

Eigen::MatrixXd BlockTriangularMatrix::to_dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim(), dim());
  for (std::size_t j = 0; j < panels_.size(); ++j) {
    const Panel& p = panels_[j];
    for (std::size_t i : p.row_blocks) {
      m.block(layout_->offsets[i], layout_->offsets[j], layout_->size(i), layout_->size(j)) =
          p.data.middleRows(p.offset_of[i], layout_->size(i));
    }
  }
  return m;
}

}  // namespace klsim
