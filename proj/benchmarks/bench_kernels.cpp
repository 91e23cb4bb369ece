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

#include <benchmark/benchmark.h>

#include <memory>

#include "klsim/block_matrix.hpp"
#include "klsim/liouvillian.hpp"
#include "klsim/propagators.hpp"

namespace {

using namespace klsim;

ModelOperators ops_for(int n_total, double U) {
  return build_model_operators(ModelParams::matched_rates(n_total, U));
}

void BM_SectorGenerator(benchmark::State& state) {
  const auto ops = ops_for(static_cast<int>(state.range(0)), 10.0);
  for (auto _ : state) {
    CoherenceSector sector(ops, CoherenceLabel{});
    benchmark::DoNotOptimize(sector.generator().nonZeros());
  }
}
BENCHMARK(BM_SectorGenerator)->Arg(2)->Arg(5)->Arg(9)->Unit(benchmark::kMillisecond);

void BM_BlockSquare(benchmark::State& state) {
  const auto ops = ops_for(static_cast<int>(state.range(0)), 10.0);
  const CoherenceSector sector(ops, CoherenceLabel{});
  auto layout = std::make_shared<BlockLayout>(sector.layout());
  const auto e = BlockTriangularMatrix::exp_taylor(sector.generator(), layout, 0.5 / sector.norm1());
  for (auto _ : state) {
    auto sq = e * e;
    benchmark::DoNotOptimize(sq.stored_entries());
  }
  state.counters["dim"] = static_cast<double>(sector.dim());
  state.counters["stored"] = static_cast<double>(e.stored_entries());
}
BENCHMARK(BM_BlockSquare)->Arg(3)->Arg(5)->Arg(7)->Unit(benchmark::kMillisecond);

void BM_DenseAdvance(benchmark::State& state) {
  const auto ops = ops_for(static_cast<int>(state.range(0)), 10.0);
  const CoherenceSector sector(ops, CoherenceLabel{});
  ExponentialCache cache(sector, 0.5 / sector.norm1());
  const Eigen::VectorXd x0 = sector.pack(initial_state(ops.basis).matrix());
  Eigen::VectorXd warm = x0;
  cache.advance(warm, 1e4);  // build the powers once
  for (auto _ : state) {
    Eigen::VectorXd x = x0;
    cache.advance(x, 1e4);
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(BM_DenseAdvance)->Arg(3)->Arg(5)->Unit(benchmark::kMicrosecond);

void BM_KrylovInterval(benchmark::State& state) {
  const double U = static_cast<double>(state.range(0));
  const auto ops = ops_for(2, U);
  const CoherenceSector sector(ops, CoherenceLabel{});
  const Eigen::VectorXd x0 = sector.pack(initial_state(ops.basis).matrix());
  const double t = 1.0 / ops.params.c_eff();  // one unit of rescaled time
  for (auto _ : state) {
    Eigen::VectorXd x = x0;
    double hint = 0.0;
    KrylovStats stats;
    krylov_expv(sector.generator(), sector.norm1(), t, x, 30, 1e-10, hint, stats);
    state.counters["matvecs"] = static_cast<double>(stats.matvecs);
  }
}
BENCHMARK(BM_KrylovInterval)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
