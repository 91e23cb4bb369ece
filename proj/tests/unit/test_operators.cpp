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

#include <doctest.h>

#include <cmath>

#include "klsim/errors.hpp"
#include "klsim/operators.hpp"
#include "oracle.hpp"

using namespace klsim;

namespace {

double max_diff(const DenseMatrix& a, const Eigen::MatrixXcd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

OccupationState st(int s, std::vector<std::uint8_t> sites, int d) { return {s, std::move(sites), d}; }

}  // namespace

TEST_CASE("bosonic source lowering") {
  const auto b = enumerate_sector(1, 1);
  const SectorMap a = ladder_down(b, Mode::source());
  const auto& img = *a.codomain;
  REQUIRE(img.n_total() == 0);
  CHECK(a.matrix.coeff(static_cast<Eigen::Index>(img.index_of(st(0, {0}, 0))),
                       static_cast<Eigen::Index>(b->index_of(st(1, {0}, 0)))) == cplx(1.0));

  const auto b2 = enumerate_sector(1, 2);
  const SectorMap a1 = ladder_down(b2, Mode::source());
  const SectorMap a2 = ladder_down(a1.codomain, Mode::source());
  const SectorMap twice = compose(a2, a1);
  const auto from = static_cast<Eigen::Index>(b2->index_of(st(2, {0}, 0)));
  const auto to = static_cast<Eigen::Index>(twice.codomain->index_of(st(0, {0}, 0)));
  CHECK(std::abs(twice.matrix.coeff(to, from) - std::sqrt(2.0)) < 1e-15);
}

TEST_CASE("hard-core site lowering") {
  const auto b = enumerate_sector(3, 2);
  const SectorMap a = ladder_down(b, Mode::site(2));
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(b->size()));
  v[static_cast<Eigen::Index>(b->index_of(st(1, {1, 0, 0}, 0)))] = 1.0;
  CHECK(a.apply(v).norm() == 0.0);
  const SectorMap again = ladder_down(a.codomain, Mode::site(2));
  CHECK(compose(again, a).matrix.norm() == 0.0);
  CHECK_THROWS_AS(ladder_down(b, Mode::site(4)), InvalidArgument);
}

TEST_CASE("two-site hop block") {
  ModelParams p;
  p.n_sites = 2;
  p.n_total = 1;
  p.U = 7.0;
  const auto b = enumerate_sector(2, 1);
  const DenseMatrix h = build_hamiltonian(p, b).dense();
  const auto i = static_cast<Eigen::Index>(b->index_of(st(0, {1, 0}, 0)));
  const auto j = static_cast<Eigen::Index>(b->index_of(st(0, {0, 1}, 0)));
  CHECK(h(i, i) == cplx(0.0));
  CHECK(h(j, j) == cplx(0.0));
  CHECK(h(i, j) == cplx(-1.0));
  CHECK(h(j, i) == cplx(-1.0));
}

TEST_CASE("Coulomb diagonal") {
  ModelParams p;
  p.n_total = 2;
  p.U = 10.0;
  const auto b = enumerate_sector(5, 2);
  const SectorOperator h = build_hamiltonian(p, b);
  const auto i13 = b->index_of(st(0, {1, 0, 1, 0, 0}, 0));
  const auto i23 = b->index_of(st(0, {0, 1, 1, 0, 0}, 0));
  CHECK(h.coeff(i13, i13) == cplx(5.0));
  CHECK(h.coeff(i23, i23) == cplx(10.0));
  CHECK(h.hermiticity_defect() == 0.0);
  // diagonal Coulomb: off-diagonal entries are pure hops
  const DenseMatrix d = h.dense();
  for (Eigen::Index r = 0; r < d.rows(); ++r) {
    for (Eigen::Index c = 0; c < d.cols(); ++c) {
      if (r != c) CHECK((d(r, c) == cplx(0.0) || d(r, c) == cplx(-1.0)));
    }
  }
}

TEST_CASE("Hamiltonian and jumps match the tensor-product oracle") {
  for (auto stats : {SiteStatistics::HardCore, SiteStatistics::JordanWigner}) {
    for (int m : {1, 2, 3}) {
      CAPTURE(m);
      const ModelParams p = ModelParams::matched_rates(m, 10.0);
      const auto ops = build_model_operators(p, stats);
      oracle::Model om{5, m, 10.0, p.gamma_s, p.gamma_d, stats == SiteStatistics::JordanWigner};
      const auto ref = oracle::build(om);
      CHECK(max_diff(ops.hamiltonian.dense(), ref.H) < 1e-14);
      CHECK(max_diff(ops.jump_source.dense(), ref.Ls) < 1e-14);
      CHECK(max_diff(ops.jump_drain.dense(), ref.Ld) < 1e-14);
      CHECK(max_diff(ops.decay_source.dense(), ref.Ls.adjoint() * ref.Ls) < 1e-14);
      CHECK(max_diff(ops.decay_drain.dense(), ref.Ld.adjoint() * ref.Ld) < 1e-14);
    }
  }
}

TEST_CASE("jump amplitudes") {
  const auto b = enumerate_sector(5, 3);
  const SectorOperator ls = build_jump_source(b);
  const SectorOperator ld = build_jump_drain(b);
  const auto init = b->index_of(st(3, {0, 0, 0, 0, 0}, 0));
  const auto moved = b->index_of(st(2, {1, 0, 0, 0, 0}, 0));
  CHECK(std::abs(ls.coeff(moved, init) - std::sqrt(3.0)) < 1e-15);
  // site 1 occupied: blocked
  const auto blocked = b->index_of(st(2, {1, 0, 0, 0, 0}, 0));
  for (std::size_t r = 0; r < b->size(); ++r) CHECK(ls.coeff(r, blocked) == cplx(0.0));
  for (int k : {0, 1, 2}) {
    const auto from = b->index_of(st(2 - k, {0, 0, 0, 0, 1}, k));
    const auto to = b->index_of(st(2 - k, {0, 0, 0, 0, 0}, k + 1));
    CHECK(std::abs(ld.coeff(to, from) - std::sqrt(k + 1.0)) < 1e-15);
  }
}

TEST_CASE("number operators") {
  const auto b = enumerate_sector(5, 4);
  DenseMatrix sum = DenseMatrix::Zero(static_cast<Eigen::Index>(b->size()),
                                      static_cast<Eigen::Index>(b->size()));
  for (const Mode& m : b->modes()) sum += number_operator(b, m).dense();
  CHECK((sum - 4.0 * DenseMatrix::Identity(sum.rows(), sum.cols())).norm() == 0.0);
  for (int j = 1; j <= 5; ++j) {
    const DenseMatrix n = number_operator(b, Mode::site(j)).dense();
    CHECK((n * n - n).norm() == 0.0);
  }
  const auto b11 = enumerate_sector(1, 1);
  CHECK(number_operator(b11, Mode::source()).dense().trace() == cplx(1.0));
  CHECK_THROWS_AS(number_operator(b11, Mode::site(2)), InvalidArgument);
}

TEST_CASE("generators conserve particle number") {
  const ModelParams p = ModelParams::matched_rates(4, 30.0);
  const auto ops = build_model_operators(p);
  DenseMatrix ntot = DenseMatrix::Zero(static_cast<Eigen::Index>(ops.basis->size()),
                                       static_cast<Eigen::Index>(ops.basis->size()));
  for (const Mode& m : ops.basis->modes()) ntot += number_operator(ops.basis, m).dense();
  const DenseMatrix h = ops.hamiltonian.dense();
  const DenseMatrix ds = ops.decay_source.dense();
  CHECK((h * ntot - ntot * h).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((ds * ntot - ntot * ds).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("storage follows the dense crossover") {
  CHECK_FALSE(build_hamiltonian(ModelParams::matched_rates(2, 10.0), enumerate_sector(5, 2)).is_sparse());
  CHECK(build_hamiltonian(ModelParams::matched_rates(6, 10.0), enumerate_sector(5, 6)).is_sparse());
}

TEST_CASE("parameter validation names the field") {
  ModelParams p = ModelParams::matched_rates(2, 100.0);
  CHECK(p.c_eff() == doctest::Approx(0.01));
  CHECK(p.gamma_s == p.c_eff());
  CHECK(p.gamma_d_rescaled() == doctest::Approx(1.0));
  p.U = -5.0;
  try {
    p.validate();
    FAIL("expected a range error");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("U") != std::string::npos);
  }
  ModelParams q = ModelParams::matched_rates(2, 10.0);
  q.gamma_d = -1.0;
  CHECK_THROWS_AS(q.validate(), InvalidArgument);
  ModelParams r = ModelParams::matched_rates(2, 10.0);
  CHECK_THROWS_AS(build_hamiltonian(r, enumerate_sector(5, 3)), InvalidArgument);
}
