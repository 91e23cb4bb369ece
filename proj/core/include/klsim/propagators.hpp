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
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "klsim/block_matrix.hpp"
#include "klsim/errors.hpp"
#include "klsim/density_matrix.hpp"
#include "klsim/liouvillian.hpp"
#include "klsim/observables.hpp"
#include "klsim/operators.hpp"

namespace klsim {

enum class Propagator {
  AdaptiveExplicit,   ///< Dormand-Prince 5(4) on the full density matrix
  KrylovExponential,  ///< Arnoldi exp(tS)v on real coherence-sector coordinates
  DenseExponential,   ///< cached block-triangular exp(2^k h S) powers
};

std::string_view to_string(Propagator p) noexcept;
/// Accepts "adaptive-explicit", "krylov-exponential", "dense-exponential".
Propagator parse_propagator(std::string_view name);

struct EvolutionConfig {
  Propagator propagator = Propagator::DenseExponential;
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double t_max = 1.0;
  /// Sample times in [0, t_max], sorted. Empty means default_time_grid(t_max).
  std::vector<double> output_grid;
  int krylov_dim = 30;
  /// Keep the full density matrix at every sample (otherwise only
  /// observables are retained).
  bool keep_states = false;
  /// Evaluate the spectrum diagnostic every k-th sample (and the last).
  int eigen_stride = 10;
  /// Largest coherence-sector dimension the dense backend will square.
  Eigen::Index dense_cap = 4096;
  std::size_t max_steps = 200'000'000;
  StateTolerances tolerances{};

  void validate() const;
};

/// t = 0 followed by `n` log-spaced times from t_max * 10^-decades to t_max.
std::vector<double> default_time_grid(double t_max, int n = 200, double decades = 5.0);

/// t = 0 followed by `n` times whose rescaled values tau = t c_eff are
/// log-spaced over [tau_min, tau_max].
std::vector<double> rescaled_log_grid(const ModelParams& params, double tau_min, double tau_max,
                                      int n = 200);

struct TimeSeries {
  ModelParams params;
  Propagator propagator = Propagator::DenseExponential;
  std::vector<ObservableVector> samples;
  std::vector<DensityMatrix> states;  ///< only with keep_states
  /// Largest Hermiticity drift removed by re-symmetrization (explicit
  /// backend only; the exponential backends are Hermitian by construction).
  double max_symmetrization_residual = 0.0;
  std::size_t steps = 0;
  std::size_t rejected_steps = 0;
  std::size_t matvecs = 0;
};

/// IntegrationFailure that also carries the samples recorded before it.
class PropagationFailure : public IntegrationFailure {
 public:
  PropagationFailure(const std::string& what, double time_reached, TimeSeries partial)
      : IntegrationFailure(what, time_reached), partial_(std::move(partial)) {}
  const TimeSeries& partial() const noexcept { return partial_; }

 private:
  TimeSeries partial_;
};

/// Integrates the master equation from rho0 and samples observables on the
/// configured grid. Throws IntegrationFailure on step-size underflow,
/// Krylov breakdown, or a state that violates its tolerances by more than
/// a factor of 10.
TimeSeries propagate(const DensityMatrix& rho0, const ModelOperators& ops,
                     const EvolutionConfig& config);

/// Sample-to-sample stepping on one coherence sector.
struct KrylovStats {
  std::size_t steps = 0;
  std::size_t rejections = 0;
  std::size_t matvecs = 0;
  double error_estimate = 0.0;
};

/// w <- exp(t S) w (Expokit-style Arnoldi with local error control).
/// `step_hint` carries the step size between calls; pass <= 0 to let the
/// routine pick one.
void krylov_expv(const Eigen::SparseMatrix<double, Eigen::RowMajor>& s, double s_norm, double t,
                 Eigen::VectorXd& w, int krylov_dim, double tol, double& step_hint,
                 KrylovStats& stats, double t_offset = 0.0);

/// exp(t S) applied through cached powers exp(2^k h S) plus a Taylor
/// remainder for the part of t below h. Powers are built lazily.
class ExponentialCache {
 public:
  ExponentialCache(const CoherenceSector& sector, double base_step);

  double base_step() const noexcept { return h_; }
  std::size_t powers() const noexcept { return powers_.size(); }
  std::size_t matvecs() const noexcept { return matvecs_; }

  void advance(Eigen::VectorXd& x, double dt);

 private:
  const BlockTriangularMatrix& power(std::size_t k);

  const CoherenceSector* sector_;
  std::shared_ptr<const BlockLayout> layout_;
  double h_;
  std::vector<BlockTriangularMatrix> powers_;
  Eigen::VectorXd trace_;  ///< trace functional, empty off the diagonal sector
  std::size_t matvecs_ = 0;
};

}  // namespace klsim
