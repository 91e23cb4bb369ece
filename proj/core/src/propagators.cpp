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

#include "klsim/propagators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "klsim/errors.hpp"

namespace klsim {

std::string_view to_string(Propagator p) noexcept {
  switch (p) {
    case Propagator::AdaptiveExplicit:
      return "adaptive-explicit";
    case Propagator::KrylovExponential:
      return "krylov-exponential";
    case Propagator::DenseExponential:
      return "dense-exponential";
  }
  return "unknown";
}

Propagator parse_propagator(std::string_view name) {
  for (Propagator p : {Propagator::AdaptiveExplicit, Propagator::KrylovExponential,
                       Propagator::DenseExponential}) {
    if (name == to_string(p)) return p;
  }
  throw InvalidArgument("unknown propagator '" + std::string(name) +
                        "' (expected adaptive-explicit, krylov-exponential or dense-exponential)");
}

void EvolutionConfig::validate() const {
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw InvalidArgument("t_max: must be > 0");
  if (!(rel_tol > 0.0)) throw InvalidArgument("rel_tol: must be > 0");
  if (!(abs_tol > 0.0)) throw InvalidArgument("abs_tol: must be > 0");
  if (krylov_dim < 2) throw InvalidArgument("krylov_dim: must be >= 2");
  if (eigen_stride < 1) throw InvalidArgument("eigen_stride: must be >= 1");
  for (std::size_t i = 0; i < output_grid.size(); ++i) {
    const double t = output_grid[i];
    if (!(t >= 0.0) || t > t_max * (1.0 + 1e-12)) {
      throw InvalidArgument("output_grid: time " + std::to_string(t) + " outside [0, t_max]");
    }
    if (i && t < output_grid[i - 1]) throw InvalidArgument("output_grid: times must be sorted");
  }
}

std::vector<double> default_time_grid(double t_max, int n, double decades) {
  if (!(t_max > 0.0) || n < 1) throw InvalidArgument("default_time_grid: need t_max > 0 and n >= 1");
  std::vector<double> grid{0.0};
  const double lo = std::log10(t_max) - decades;
  for (int i = 0; i < n; ++i) {
    const double e = n == 1 ? std::log10(t_max) : lo + decades * i / (n - 1);
    grid.push_back(std::pow(10.0, e));
  }
  grid.back() = t_max;
  return grid;
}

std::vector<double> rescaled_log_grid(const ModelParams& params, double tau_min, double tau_max,
                                      int n) {
  if (!(tau_min > 0.0) || !(tau_max > tau_min) || n < 2) {
    throw InvalidArgument("rescaled_log_grid: need 0 < tau_min < tau_max and n >= 2");
  }
  const double scale = 1.0 / params.c_eff();
  std::vector<double> grid{0.0};
  const double a = std::log10(tau_min);
  const double b = std::log10(tau_max);
  for (int i = 0; i < n; ++i) grid.push_back(std::pow(10.0, a + (b - a) * i / (n - 1)) * scale);
  grid.back() = tau_max * scale;
  return grid;
}

// ---------------------------------------------------------------------------
// Krylov

namespace {

double round_step(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) return x;
  const double s = std::pow(10.0, std::floor(std::log10(x)) - 1.0);
  return std::ceil(x / s) * s;
}

}  // namespace

void krylov_expv(const Eigen::SparseMatrix<double, Eigen::RowMajor>& s, double s_norm, double t,
                 Eigen::VectorXd& w, int krylov_dim, double tol, double& step_hint,
                 KrylovStats& stats, double t_offset) {
  const Eigen::Index n = w.size();
  if (t <= 0.0 || n == 0) return;
  double beta = w.norm();
  if (beta == 0.0 || s_norm == 0.0) return;

  const int m = static_cast<int>(std::min<Eigen::Index>(krylov_dim, n));
  constexpr double kGamma = 0.9;
  constexpr double kDelta = 1.2;
  constexpr int kMaxReject = 30;

  double t_new = step_hint;
  if (!(t_new > 0.0)) {
    const double fact = std::pow((m + 1) / std::numbers::e, m + 1) * std::sqrt(2.0 * std::numbers::pi * (m + 1));
    t_new = (1.0 / s_norm) * std::pow((fact * tol) / (4.0 * beta * s_norm), 1.0 / m);
    t_new = round_step(t_new);
  }

  Eigen::MatrixXd V(n, m + 1);
  Eigen::MatrixXd H(m + 2, m + 2);
  Eigen::VectorXd p(n);
  Eigen::MatrixXd F;
  double t_now = 0.0;

  while (t_now < t) {
    double t_step = std::min(t - t_now, t_new);
    V.col(0) = w / beta;
    H.setZero();
    int mb = m;
    int k1 = 2;
    for (int j = 0; j < m; ++j) {
      p.noalias() = s * V.col(j);
      ++stats.matvecs;
      for (int i = 0; i <= j; ++i) {
        H(i, j) = V.col(i).dot(p);
        p -= H(i, j) * V.col(i);
      }
      const double hn = p.norm();
      if (hn <= 1e-12 * s_norm) {  // happy breakdown: the subspace is invariant
        k1 = 0;
        mb = j + 1;
        t_step = t - t_now;
        break;
      }
      H(j + 1, j) = hn;
      V.col(j + 1) = p / hn;
    }
    double av_norm = 0.0;
    if (k1 != 0) {
      H(m + 1, m) = 1.0;
      av_norm = (s * V.col(m)).norm();
      ++stats.matvecs;
    }

    double err_loc = 0.0;
    double xm = 1.0 / m;
    int rejects = 0;
    while (true) {
      const int mx = mb + k1;
      F = (t_step * H.topLeftCorner(mx, mx)).exp();
      if (k1 == 0) {
        err_loc = 1e-12 * s_norm;
        break;
      }
      const double p1 = std::abs(F(m, 0)) * beta;
      const double p2 = std::abs(F(m + 1, 0)) * beta * av_norm;
      if (p1 > 10.0 * p2) {
        err_loc = p2;
        xm = 1.0 / m;
      } else if (p1 > p2) {
        err_loc = (p1 * p2) / (p1 - p2);
        xm = 1.0 / m;
      } else {
        err_loc = p1;
        xm = 1.0 / (m - 1);
      }
      if (err_loc <= kDelta * t_step * tol) break;
      ++stats.rejections;
      if (++rejects > kMaxReject) {
        throw IntegrationFailure("Krylov step rejected " + std::to_string(kMaxReject) + " times",
                                 t_offset + t_now);
      }
      t_step = round_step(kGamma * t_step * std::pow(t_step * tol / err_loc, xm));
      if (!(t_step > 1e-14 * std::max(1.0, t_offset + t_now))) {
        throw IntegrationFailure("Krylov step-size underflow", t_offset + t_now);
      }
    }

    const int mx = mb + std::max(0, k1 - 1);
    w = V.leftCols(mx) * (beta * F.col(0).head(mx));
    beta = w.norm();
    t_now += t_step;
    ++stats.steps;
    stats.error_estimate += std::max(err_loc, s_norm * std::numeric_limits<double>::epsilon());
    t_new = round_step(kGamma * t_step * std::pow(t_step * tol / std::max(err_loc, 1e-300), xm));
    if (!std::isfinite(beta)) throw IntegrationFailure("Krylov iterate diverged", t_offset + t_now);
    if (beta == 0.0) break;
  }
  step_hint = t_new;
}

// ---------------------------------------------------------------------------
// Cached exponentials

ExponentialCache::ExponentialCache(const CoherenceSector& sector, double base_step)
    : sector_(&sector),
      layout_(std::make_shared<BlockLayout>(sector.layout())),
      h_(base_step) {
  if (!(base_step > 0.0)) throw InvalidArgument("ExponentialCache: base step must be > 0");
  if (base_step * sector.norm1() > 1.0) {
    throw InvalidArgument("ExponentialCache: base step too large for the Taylor seed");
  }
  // Squaring errors grow like 2^k eps; pin the trace so they cannot leak
  // into the total population.
  const auto& coords = sector.coordinates();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(sector.dim());
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (coords[i].row == coords[i].col && !coords[i].imaginary) w[static_cast<Eigen::Index>(i)] = 1.0;
  }
  if (!w.isZero(0.0)) trace_ = std::move(w);
}

const BlockTriangularMatrix& ExponentialCache::power(std::size_t k) {
  while (powers_.size() <= k) {
    if (powers_.empty()) {
      powers_.push_back(BlockTriangularMatrix::exp_taylor(sector_->generator(), layout_, h_));
    } else {
      powers_.push_back(powers_.back() * powers_.back());
    }
    if (trace_.size()) powers_.back().conserve(trace_);
  }
  return powers_[k];
}

void ExponentialCache::advance(Eigen::VectorXd& x, double dt) {
  if (!(dt > 0.0)) return;
  const double q = std::floor(dt / h_);
  if (q >= 9.0e15) throw InvalidArgument("ExponentialCache: interval too long for the base step");
  auto n = static_cast<std::uint64_t>(q);
  const double r = std::max(0.0, dt - q * h_);
  for (std::size_t k = 0; n; ++k, n >>= 1) {
    if (n & 1u) {
      x = power(k) * x;
      ++matvecs_;
    }
  }
  if (r > 0.0) {
    const auto& s = sector_->generator();
    Eigen::VectorXd term = x;
    Eigen::VectorXd sum = x;
    for (int j = 1; j <= 60; ++j) {
      term = (r / j) * (s * term);
      ++matvecs_;
      sum += term;
      if (term.lpNorm<Eigen::Infinity>() <=
          std::numeric_limits<double>::epsilon() * sum.lpNorm<Eigen::Infinity>()) {
        break;
      }
    }
    x.swap(sum);
  }
}

// ---------------------------------------------------------------------------
// propagate

namespace {

class Recorder {
 public:
  Recorder(TimeSeries& ts, const EvolutionConfig& cfg, std::size_t n_samples)
      : ts_(ts), cfg_(cfg), n_(n_samples) {}

  void record(std::size_t i, DensityMatrix rho, double t, double hermiticity_drift) {
    const bool spectrum = (i % static_cast<std::size_t>(cfg_.eigen_stride) == 0) || i + 1 == n_;
    ObservableVector obs = measure(rho, ts_.params, t, MeasureOptions{spectrum, 1e-10});
    obs.hermiticity_residual = std::max(obs.hermiticity_residual, hermiticity_drift);

    const StateTolerances& tol = cfg_.tolerances;
    std::string problem;
    if (!(obs.trace_residual <= 10.0 * tol.trace)) problem = "trace residual " + std::to_string(obs.trace_residual);
    else if (!(obs.hermiticity_residual <= 10.0 * tol.hermiticity))
      problem = "hermiticity residual " + std::to_string(obs.hermiticity_residual);
    else if (spectrum && !(obs.min_eigenvalue >= 10.0 * tol.min_eigenvalue))
      problem = "min eigenvalue " + std::to_string(obs.min_eigenvalue);
    else if (!(std::abs(obs.total() - ts_.params.n_total) <= 10.0 * tol.trace))
      problem = "particle number drift " + std::to_string(obs.total() - ts_.params.n_total);

    ts_.samples.push_back(std::move(obs));
    if (cfg_.keep_states) ts_.states.push_back(std::move(rho));
    if (!problem.empty()) throw IntegrationFailure("state invariant violated: " + problem, t);
  }

 private:
  TimeSeries& ts_;
  const EvolutionConfig& cfg_;
  std::size_t n_;
};

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

void run_explicit(const DensityMatrix& rho0, const ModelOperators& ops, const EvolutionConfig& cfg,
                  const std::vector<double>& grid, TimeSeries& ts) {
  const ModelParams& params = ops.params;
  auto f = [&](const DenseMatrix& y) { return lindblad_rhs(y, params, ops); };
  Recorder rec(ts, cfg, grid.size());

  DenseMatrix y = rho0.matrix();
  double t = 0.0;
  DenseMatrix k1 = f(y);
  double h;
  {
    const double d0 = y.cwiseAbs().maxCoeff();
    const double d1 = k1.cwiseAbs().maxCoeff();
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  }
  double drift = 0.0;

  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double target = grid[i];
    while (t < target) {
      if (ts.steps + ts.rejected_steps >= cfg.max_steps) {
        throw IntegrationFailure("explicit integrator exceeded max_steps", t);
      }
      const bool last = h >= target - t;
      const double step = last ? target - t : h;

      const DenseMatrix k2 = f(y + step * (a21 * k1));
      const DenseMatrix k3 = f(y + step * (a31 * k1 + a32 * k2));
      const DenseMatrix k4 = f(y + step * (a41 * k1 + a42 * k2 + a43 * k3));
      const DenseMatrix k5 = f(y + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      const DenseMatrix k6 = f(y + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      DenseMatrix y5 = y + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const DenseMatrix k7 = f(y5);
      ts.matvecs += 6;
      const DenseMatrix err = step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      double err_norm = 0.0;
      for (Eigen::Index c = 0; c < y.cols(); ++c)
        for (Eigen::Index r = 0; r < y.rows(); ++r) {
          const double scale = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y(r, c)), std::abs(y5(r, c)));
          err_norm = std::max(err_norm, std::abs(err(r, c)) / scale);
        }

      const double fac = err_norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
      if (err_norm <= 1.0) {
        t = last ? target : t + step;
        y.swap(y5);
        const double residual = (y - y.adjoint()).cwiseAbs().maxCoeff();
        drift = std::max(drift, residual);
        ts.max_symmetrization_residual = std::max(ts.max_symmetrization_residual, residual);
        DenseMatrix sym = 0.5 * (y + y.adjoint());
        y.swap(sym);
        k1 = f(y);
        ++ts.steps;
        if (!last) h = step * fac;
      } else {
        ++ts.rejected_steps;
        h = step * std::min(1.0, fac);
      }
      if (!(h > 1e-14 * std::max(1.0, std::abs(t)))) {
        throw IntegrationFailure("explicit step-size underflow", t);
      }
    }
    rec.record(i, DensityMatrix(rho0.basis_ptr(), y), target, drift);
    drift = 0.0;
  }
}

void run_sectors(const DensityMatrix& rho0, const ModelOperators& ops, const EvolutionConfig& cfg,
                 const std::vector<double>& grid, TimeSeries& ts) {
  if (rho0.hermiticity_residual() > cfg.tolerances.hermiticity) {
    throw InvalidArgument("initial state is not Hermitian");
  }
  Recorder rec(ts, cfg, grid.size());

  std::vector<CoherenceSector> sectors;
  std::vector<Eigen::VectorXd> xs;
  for (const CoherenceLabel& label : labels_present(rho0)) {
    sectors.emplace_back(ops, label);
    xs.push_back(sectors.back().pack(rho0.matrix()));
  }

  std::vector<ExponentialCache> caches;
  std::vector<double> hints(sectors.size(), 0.0);
  KrylovStats kstats;
  if (cfg.propagator == Propagator::DenseExponential) {
    for (const auto& sec : sectors) {
      if (sec.dim() > cfg.dense_cap) {
        throw CapExceeded("dense-exponential: coherence sector dimension " + std::to_string(sec.dim()) +
                              " exceeds the cap of " + std::to_string(cfg.dense_cap),
                          static_cast<std::size_t>(cfg.dense_cap));
      }
      const double norm = sec.norm1();
      caches.emplace_back(sec, norm > 0.0 ? 0.5 / norm : cfg.t_max);
    }
  }

  const auto n = static_cast<Eigen::Index>(rho0.dim());
  double t_prev = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double dt = grid[i] - t_prev;
    for (std::size_t s = 0; s < sectors.size(); ++s) {
      if (cfg.propagator == Propagator::DenseExponential) {
        caches[s].advance(xs[s], dt);
      } else {
        krylov_expv(sectors[s].generator(), sectors[s].norm1(), dt, xs[s], cfg.krylov_dim,
                    cfg.rel_tol, hints[s], kstats, t_prev);
      }
    }
    t_prev = grid[i];
    DenseMatrix rho = DenseMatrix::Zero(n, n);
    for (std::size_t s = 0; s < sectors.size(); ++s) sectors[s].unpack_add(xs[s], rho);
    ts.steps = kstats.steps;
    ts.rejected_steps = kstats.rejections;
    ts.matvecs = kstats.matvecs;
    for (const auto& c : caches) ts.matvecs += c.matvecs();
    rec.record(i, DensityMatrix(rho0.basis_ptr(), std::move(rho)), grid[i], 0.0);
  }
}

}  // namespace

TimeSeries propagate(const DensityMatrix& rho0, const ModelOperators& ops,
                     const EvolutionConfig& config) {
  config.validate();
  ops.params.validate();
  if (!rho0.basis().same_sector(*ops.basis)) {
    throw InvalidArgument("propagate: initial state and operators live on different sectors");
  }
  const std::vector<double> grid =
      config.output_grid.empty() ? default_time_grid(config.t_max) : config.output_grid;

  TimeSeries ts;
  ts.params = ops.params;
  ts.propagator = config.propagator;
  try {
    if (config.propagator == Propagator::AdaptiveExplicit) {
      run_explicit(rho0, ops, config, grid, ts);
    } else {
      run_sectors(rho0, ops, config, grid, ts);
    }
  } catch (const PropagationFailure&) {
    throw;
  } catch (const IntegrationFailure& e) {
    throw PropagationFailure(e.reason(), e.time_reached(), std::move(ts));
  }
  return ts;
}

}  // namespace klsim
