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
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "klsim/checkpoint.hpp"
#include "klsim/errors.hpp"
#include "klsim/liouvillian.hpp"
#include "klsim/observables.hpp"
#include "klsim/propagators.hpp"
#include "oracle.hpp"

using namespace klsim;

namespace {

DenseMatrix random_hermitian(Eigen::Index n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  DenseMatrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = cplx(g(rng), g(rng));
  }
  return a + a.adjoint();
}

DensityMatrix random_state(const SectorBasisPtr& b, unsigned seed) {
  const DenseMatrix h = random_hermitian(static_cast<Eigen::Index>(b->size()), seed);
  DenseMatrix rho = h * h;
  rho /= rho.trace();
  return DensityMatrix(b, rho);
}

EvolutionConfig grid_config(Propagator prop, std::vector<double> times) {
  EvolutionConfig c;
  c.propagator = prop;
  c.output_grid = std::move(times);
  c.t_max = c.output_grid.back();
  c.keep_states = true;
  return c;
}

const Propagator kAll[] = {Propagator::AdaptiveExplicit, Propagator::KrylovExponential,
                           Propagator::DenseExponential};

}  // namespace

TEST_CASE("initial state") {
  const auto b = enumerate_sector(5, 2);
  const DensityMatrix rho = initial_state(b);
  CHECK(rho.matrix()(0, 0) == cplx(1.0));
  CHECK(rho.matrix().cwiseAbs().sum() == 1.0);
  CHECK(rho.purity() == 1.0);
  CHECK(rho.trace() == cplx(1.0));
  const auto obs = measure(rho, ModelParams::matched_rates(2, 10.0));
  CHECK(obs.n_source() == 2.0);
  CHECK(obs.n_SF == 0.0);
  CHECK(obs.n_drain() == 0.0);
}

TEST_CASE("density matrix checks") {
  const auto b = enumerate_sector(1, 1);
  CHECK_THROWS_AS(DensityMatrix(b, DenseMatrix::Identity(2, 2)), InvalidArgument);
  const DensityMatrix mixed = maximally_mixed(b);
  CHECK(mixed.min_eigenvalue() == doctest::Approx(1.0 / 3.0));
  CHECK(mixed.satisfies());
  DenseMatrix m = mixed.matrix();
  m(0, 1) = cplx(0.0, 1e-3);
  DensityMatrix skew(b, m);
  CHECK(skew.hermiticity_residual() == doctest::Approx(1e-3));
  CHECK(skew.symmetrize() == doctest::Approx(1e-3));
  CHECK(skew.hermiticity_residual() == 0.0);
}

TEST_CASE("right-hand side is traceless and reduces to the commutator") {
  const ModelParams p = ModelParams::matched_rates(3, 10.0);
  const auto ops = build_model_operators(p);
  const DenseMatrix rho = random_hermitian(static_cast<Eigen::Index>(ops.basis->size()), 7);
  CHECK(std::abs(lindblad_rhs(rho, p, ops).trace()) < 1e-12);

  ModelParams closed = p;
  closed.gamma_s = closed.gamma_d = 0.0;
  const DenseMatrix h = ops.hamiltonian.dense();
  const DenseMatrix expected = cplx(0, -1) * (h * rho - rho * h);
  CHECK((lindblad_rhs(rho, closed, ops) - expected).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(lindblad_rhs(DenseMatrix::Zero(3, 3), p, ops), InvalidArgument);
}

TEST_CASE("single-site rate equations") {
  for (auto [gs, gd] : {std::pair{0.3, 0.3}, std::pair{0.5, 0.2}}) {
    ModelParams p;
    p.n_sites = 1;
    p.n_total = 1;
    p.U = 10.0;
    p.gamma_s = gs;
    p.gamma_d = gd;
    const auto ops = build_model_operators(p);

    // rhs populations
    const DensityMatrix mixed = maximally_mixed(ops.basis);
    const DenseMatrix d = lindblad_rhs(mixed, p, ops);
    CHECK(d(0, 0).real() == doctest::Approx(-2 * gs / 3));
    CHECK(d(1, 1).real() == doctest::Approx(2 * gs / 3 - 2 * gd / 3));
    CHECK(d(2, 2).real() == doctest::Approx(2 * gd / 3));

    const std::vector<double> times{0.0, 0.1, 0.7, 1.5, 4.0, 10.0};
    for (Propagator prop : kAll) {
      CAPTURE(to_string(prop));
      const TimeSeries ts = propagate(initial_state(ops.basis), ops, grid_config(prop, times));
      REQUIRE(ts.samples.size() == times.size());
      for (std::size_t i = 0; i < times.size(); ++i) {
        const auto ref = oracle::single_site(gs, gd, times[i]);
        CHECK(std::abs(ts.samples[i].n_source() - ref[0]) < 1e-8);
        CHECK(std::abs(ts.samples[i].site(1) - ref[1]) < 1e-8);
        CHECK(std::abs(ts.samples[i].n_drain() - ref[2]) < 1e-8);
      }
    }
  }
}

TEST_CASE("dense Liouvillian") {
  const ModelParams p = ModelParams::matched_rates(2, 10.0);
  const auto ops = build_model_operators(p);
  const DenseMatrix L = dense_liouvillian(p, ops);
  const auto d = static_cast<Eigen::Index>(ops.basis->size());
  REQUIRE(L.rows() == d * d);

  SUBCASE("columns are the rhs of unit matrices") {
    for (Eigen::Index k = 0; k < d * d; k += 37) {
      DenseMatrix e = DenseMatrix::Zero(d, d);
      e(k % d, k / d) = 1.0;
      const DenseMatrix r = lindblad_rhs(e, p, ops);
      CHECK((L.col(k) - Eigen::Map<const Eigen::VectorXcd>(r.data(), d * d)).norm() == 0.0);
    }
  }
  SUBCASE("agrees with the Kronecker oracle") {
    const oracle::Model om{5, 2, 10.0, p.gamma_s, p.gamma_d};
    CHECK((L - oracle::liouvillian(om, oracle::build(om))).cwiseAbs().maxCoeff() < 1e-13);
  }
  SUBCASE("spectrum is stable") {
    const Eigen::ComplexEigenSolver<DenseMatrix> es(L, false);
    CHECK(es.eigenvalues().real().maxCoeff() <= 1e-10);
  }
  SUBCASE("cap is enforced") {
    const ModelParams big = ModelParams::matched_rates(4, 10.0);
    const auto big_ops = build_model_operators(big);
    REQUIRE(big_ops.basis->size() > kDenseLiouvillianCap);
    try {
      dense_liouvillian(big, big_ops);
      FAIL("expected refusal");
    } catch (const CapExceeded& e) {
      CHECK(e.cap() == kDenseLiouvillianCap);
      CHECK(std::string(e.what()).find("64") != std::string::npos);
    }
  }
}

TEST_CASE("steady state of the single-site chain") {
  ModelParams p;
  p.n_sites = 1;
  p.n_total = 1;
  p.gamma_s = 0.4;
  p.gamma_d = 0.25;
  const auto ops = build_model_operators(p);
  const DenseMatrix L = dense_liouvillian(p, ops);
  const Eigen::FullPivLU<DenseMatrix> lu(L);
  const DenseMatrix kernel = lu.kernel();
  REQUIRE(kernel.cols() >= 1);
  DenseMatrix rho = Eigen::Map<const DenseMatrix>(kernel.col(0).data(), 3, 3);
  rho /= rho.trace();
  CHECK((rho - rho.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(rho(2, 2) - 1.0) < 1e-12);  // everything ends in the drain
}

TEST_CASE("steady state of the five-site chain drains fully") {
  const ModelParams p = ModelParams::matched_rates(2, 10.0);
  const auto ops = build_model_operators(p);
  const DenseMatrix L = dense_liouvillian(p, ops);
  const Eigen::FullPivLU<DenseMatrix> lu(L);
  const DenseMatrix kernel = lu.kernel();
  REQUIRE(kernel.cols() == 1);
  const auto d = static_cast<Eigen::Index>(ops.basis->size());
  DenseMatrix rho = Eigen::Map<const DenseMatrix>(kernel.col(0).data(), d, d);
  rho /= rho.trace();
  const auto obs = measure(DensityMatrix(ops.basis, rho), p);
  CHECK(obs.n_drain() == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(std::abs(obs.n_SF) < 1e-10);
}

TEST_CASE("backends agree with the exponential oracle on the (5,2) sector") {
  const ModelParams p = ModelParams::matched_rates(2, 10.0);
  const auto ops = build_model_operators(p);
  std::vector<double> taus{0.0, 0.05, 0.5, 2.0, 7.5, 20.0, 50.0};
  std::vector<double> times;
  for (double tau : taus) times.push_back(tau / p.c_eff());
  const oracle::Model om{5, 2, 10.0, p.gamma_s, p.gamma_d};
  const auto ref = oracle::populations(om, times);
  for (Propagator prop : kAll) {
    CAPTURE(to_string(prop));
    const TimeSeries ts = propagate(initial_state(ops.basis), ops, grid_config(prop, times));
    double worst = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      for (std::size_t k = 0; k < ref[i].size(); ++k) {
        worst = std::max(worst, std::abs(ts.samples[i].populations[k] - ref[i][k]));
      }
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("string-free and Jordan-Wigner sites give the same populations") {
  const ModelParams p = ModelParams::matched_rates(2, 10.0);
  const auto hc = build_model_operators(p, SiteStatistics::HardCore);
  const auto jw = build_model_operators(p, SiteStatistics::JordanWigner);
  EvolutionConfig c = grid_config(Propagator::DenseExponential,
                                  rescaled_log_grid(p, 1e-2, 50.0, 60));
  const TimeSeries a = propagate(initial_state(hc.basis), hc, c);
  const TimeSeries b = propagate(initial_state(jw.basis), jw, c);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    for (std::size_t k = 0; k < a.samples[i].populations.size(); ++k) {
      worst = std::max(worst, std::abs(a.samples[i].populations[k] - b.samples[i].populations[k]));
    }
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("closed system conserves trace and energy") {
  ModelParams p = ModelParams::matched_rates(2, 10.0);
  p.gamma_s = p.gamma_d = 0.0;
  const auto ops = build_model_operators(p);
  const DensityMatrix rho0 = random_state(ops.basis, 3);
  const DenseMatrix h = ops.hamiltonian.dense();
  const double e0 = (rho0.matrix() * h).trace().real();
  std::vector<double> times{0.0, 1.0, 10.0, 55.0, 100.0};
  for (Propagator prop : kAll) {
    CAPTURE(to_string(prop));
    const TimeSeries ts = propagate(rho0, ops, grid_config(prop, times));
    for (const auto& s : ts.states) {
      CHECK(s.trace_residual() < 1e-8);
      CHECK(std::abs((s.matrix() * h).trace().real() - e0) < 1e-8);
    }
  }
}

TEST_CASE("trajectory invariants") {
  const ModelParams p = ModelParams::matched_rates(4, 100.0);
  const auto ops = build_model_operators(p);
  EvolutionConfig c = grid_config(Propagator::DenseExponential,
                                  rescaled_log_grid(p, 1e-2, 1e3, 80));
  c.eigen_stride = 1;
  const TimeSeries ts = propagate(initial_state(ops.basis), ops, c);
  double last_drain = -1.0;
  for (std::size_t i = 0; i < ts.samples.size(); ++i) {
    const auto& o = ts.samples[i];
    CHECK(o.trace_residual <= 1e-8);
    CHECK(o.hermiticity_residual <= 1e-10);
    CHECK(o.min_eigenvalue >= -1e-8);
    CHECK(std::abs(o.total() - 4.0) <= 1e-8);
    CHECK(ts.states[i].purity() <= 1.0 + 1e-10);
    CHECK(o.n_drain() >= last_drain - 1e-12);
    last_drain = o.n_drain();
  }
}

TEST_CASE("explicit backend logs its symmetrization drift") {
  const ModelParams p = ModelParams::matched_rates(2, 10.0);
  const auto ops = build_model_operators(p);
  const TimeSeries ts = propagate(initial_state(ops.basis), ops,
                                  grid_config(Propagator::AdaptiveExplicit, {0.0, 10.0, 50.0}));
  CHECK(ts.steps > 0);
  CHECK(ts.max_symmetrization_residual < 1e-10);
}

TEST_CASE("Krylov reaches tau = 1e3 at U = 100") {
  const ModelParams p = ModelParams::matched_rates(2, 100.0);
  const auto ops = build_model_operators(p);
  EvolutionConfig c = grid_config(Propagator::KrylovExponential,
                                  rescaled_log_grid(p, 1.0, 1e3, 6));
  c.keep_states = false;
  const TimeSeries ts = propagate(initial_state(ops.basis), ops, c);
  REQUIRE(ts.samples.size() == 7);
  CHECK(ts.samples.back().tau == doctest::Approx(1e3));
  CHECK(ts.samples.back().n_drain() > 1.99);
}

TEST_CASE("violations abort with the partial series") {
  const ModelParams p = ModelParams::matched_rates(2, 10.0);
  const auto ops = build_model_operators(p);
  EvolutionConfig c = grid_config(Propagator::DenseExponential, {0.0, 1.0, 2.0, 3.0});
  c.tolerances.trace = 1e-30;
  DenseMatrix m = initial_state(ops.basis).matrix();
  m(1, 1) = 1e-12;  // trace off by 1e-12
  try {
    propagate(DensityMatrix(ops.basis, m), ops, c);
    FAIL("expected a failure");
  } catch (const PropagationFailure& e) {
    CHECK(e.partial().samples.size() == 1);
    CHECK(e.time_reached() == 0.0);
  }
}

TEST_CASE("configuration checks") {
  EvolutionConfig c;
  c.t_max = -1.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  EvolutionConfig d;
  d.output_grid = {0.0, 2.0, 1.0};
  d.t_max = 2.0;
  CHECK_THROWS_AS(d.validate(), InvalidArgument);
  CHECK(parse_propagator("krylov-exponential") == Propagator::KrylovExponential);
  CHECK_THROWS_AS(parse_propagator("euler"), InvalidArgument);
  const auto g = rescaled_log_grid(ModelParams::matched_rates(2, 10.0), 1e-2, 100.0, 5);
  REQUIRE(g.size() == 6);
  CHECK(g.front() == 0.0);
  CHECK(g[1] == doctest::Approx(0.1));
  CHECK(g.back() == doctest::Approx(1000.0));
}

TEST_CASE("checkpoint round trip is bit exact") {
  const auto b = enumerate_sector(5, 2);
  const DensityMatrix rho = random_state(b, 11);
  std::stringstream ss;
  write_checkpoint(ss, rho, 0.1 + 0.2);
  const std::string text = ss.str();
  CHECK(text.rfind("KLSIM1\n", 0) == 0);
  const Checkpoint cp = read_checkpoint(ss);
  CHECK(cp.t == 0.1 + 0.2);
  CHECK(cp.state.basis().same_sector(*b));
  CHECK((cp.state.matrix().array() == rho.matrix().array()).all());

  std::stringstream bad("KLSIM0\n");
  CHECK_THROWS_AS(read_checkpoint(bad), InvalidArgument);
  std::stringstream truncated(text.substr(0, text.size() / 2));
  CHECK_THROWS_AS(read_checkpoint(truncated), InvalidArgument);
}
