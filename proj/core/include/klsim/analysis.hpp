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

#include <array>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "klsim/observables.hpp"
#include "klsim/operators.hpp"

namespace klsim {

namespace constants {
inline constexpr double kBoltzmann = 1.380649e-23;      // J/K
inline constexpr double kPlanck = 6.62607015e-34;       // J s
inline constexpr double kHbar = 1.054571817e-34;        // J s
inline constexpr double kAtomicMass = 1.66053906660e-27;  // kg
inline constexpr double kPotassiumMass = 39.0983 * kAtomicMass;
}  // namespace constants

/// A finished run: its parameters and the tau-ordered samples.
struct RunRecord {
  ModelParams params;
  std::vector<ObservableVector> series;

  /// Throws InvalidArgument if empty or tau is not strictly increasing.
  void validate() const;
  std::vector<double> tau() const;
  std::vector<double> n_sf() const;
};

/// tau = t hbar c_hop^2 / U
double rescale_time(double t, const ModelParams& params);

/// Largest n_SF over the samples, refined by the parabola through the
/// discrete maximum and its two neighbours.
double max_occupancy(std::span<const double> tau, std::span<const double> n_sf);
double max_occupancy(const RunRecord& run);

/// tau of the last downward crossing of `level`, linearly interpolated
/// between the bracketing samples. Throws NoCrossing.
double crossing_time(std::span<const double> tau, std::span<const double> values, double level = 1.0);
double crossing_time(const RunRecord& run, double level = 1.0);

/// Largest |a(tau) - b(tau)| over the samples of `a` inside the tau range
/// of `b`, with `b` linearly interpolated.
double sup_distance(std::span<const double> tau_a, std::span<const double> a,
                    std::span<const double> tau_b, std::span<const double> b);
double sup_distance(const RunRecord& a, const RunRecord& b);

/// delta_tau(N) = tau*(N) - tau*(N - 1) for every N above the smallest key.
/// Throws InvalidArgument when the keys are not consecutive.
std::map<int, double> lag_increments(const std::map<int, double>& tau_star);

struct FitResult {
  double a = 0.0;
  double b = 0.0;
  double c_sat = 0.0;
  double residual_norm = 0.0;
  bool converged = false;
  int iterations = 0;

  /// Large-N limit a + b.
  double asymptote() const noexcept { return a + b; }
  double operator()(double n) const;
};

struct FitOptions {
  int max_iterations = 500;
  double step_tolerance = 1e-10;      ///< relative parameter step
  double gradient_tolerance = 1e-13;  ///< relative to the residual scale
  /// (a, b, c_sat); defaults to (max - min, min, median N).
  std::optional<std::array<double, 3>> initial;
};

/// Least-squares fit of delta_tau = a (1 - exp(-N / c_sat)) + b by damped
/// Gauss-Newton. Needs at least 4 points. Non-convergence is reported
/// through FitResult::converged with the best parameters found.
FitResult fit_saturation(const std::map<int, double>& data, const FitOptions& options = {});

/// t_phys = U tau / c_phys, with U dimensionless and c_phys in 1/s.
double physical_time(double tau, double u_dimensionless, double c_phys);

/// Inputs for the barrier-tunnelling rate estimate. Energies in k_B T.
struct PhysicalParams {
  double barrier_height = 1.7;
  double kinetic_energy = 1.7;
  double barrier_width_nm = 0.24;
  double mass_kg = constants::kPotassiumMass;
  double temperature_K = 310.0;
  /// Use hbar instead of h inside the exponent.
  bool hbar_exponent = false;

  void validate() const;
};

struct TunnelingEstimate {
  double trapping_frequency = 0.0;  ///< nu = K / h, 1/s
  double probability = 0.0;         ///< p_tun, clamped to 1
  double rate = 0.0;                ///< nu p_tun, 1/s
};

/// rate = (K/h) exp(-width sqrt(2 m dE) / h), dE = barrier - K.
TunnelingEstimate tunneling_rate(const PhysicalParams& p);

}  // namespace klsim
