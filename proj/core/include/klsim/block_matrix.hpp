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

#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "klsim/liouvillian.hpp"

namespace klsim {

/// Real matrix over a BlockLayout that only stores the blocks (i, j) with
/// layout.reachable(i, j). Products of such matrices stay in the same
/// pattern, which is what makes repeated squaring of exp(h S) affordable.
///
/// Storage is one dense column panel per block column, holding the
/// reachable row blocks stacked in layout order.
class BlockTriangularMatrix {
 public:
  explicit BlockTriangularMatrix(std::shared_ptr<const BlockLayout> layout);

  static BlockTriangularMatrix identity(std::shared_ptr<const BlockLayout> layout);

  /// exp(h S) by a Taylor series applied column panel by column panel.
  /// Requires h * ||S||_1 <= 1; the series is summed to machine precision.
  static BlockTriangularMatrix exp_taylor(const Eigen::SparseMatrix<double, Eigen::RowMajor>& s,
                                          std::shared_ptr<const BlockLayout> layout, double h);

  const BlockLayout& layout() const noexcept { return *layout_; }
  Eigen::Index dim() const noexcept { return layout_->dim(); }
  std::size_t stored_entries() const noexcept;

  BlockTriangularMatrix operator*(const BlockTriangularMatrix& rhs) const;
  Eigen::VectorXd operator*(const Eigen::VectorXd& x) const;

  Eigen::MatrixXd to_dense() const;

  /// Restores w^T M = w^T column by column, spreading each column's defect
  /// over the rows where w is nonzero in proportion to |M_rj|. Used to keep
  /// a conserved linear functional exact under repeated squaring.
  void conserve(const Eigen::VectorXd& w);

 private:
  struct Panel {
    std::vector<std::size_t> row_blocks;   ///< reachable block rows, ascending
    std::vector<Eigen::Index> offset_of;   ///< per block: row offset in panel, -1 if absent
    Eigen::MatrixXd data;
  };

  std::shared_ptr<const BlockLayout> layout_;
  std::vector<Panel> panels_;
};

}  // namespace klsim
