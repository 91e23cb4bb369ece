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

#include "klsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "klsim/errors.hpp"

namespace klsim {

void RunRecord::validate() const {
  if (series.empty()) throw InvalidArgument("run record has no samples");
  for (std::size_t i = 1; i < series.size(); ++i) {
    if (!(series[i].tau > series[i - 1].tau)) {
      throw InvalidArgument("run record: tau must be strictly increasing (sample " +
                            std::to_string(i) + ")");
    }
  }
}

std::vector<double> RunRecord::tau() const {
  std::vector<double> out;
  out.reserve(series.size());
  for (const auto& s : series) out.push_back(s.tau);
  return out;
}

std::vector<double> RunRecord::n_sf() const {
  std::vector<double> out;
  out.reserve(series.size());
  for (const auto& s : series) out.push_back(s.n_SF);
  return out;
}

double rescale_time(double t, const ModelParams& params) { return t * params.c_eff(); }

double max_occupancy(std::span<const double> tau, std::span<const double> n_sf) {
  if (tau.size() != n_sf.size() || tau.empty()) {
    throw InvalidArgument("max_occupancy: need equally sized, nonempty series");
  }
  const auto it = std::max_element(n_sf.begin(), n_sf.end());
  const auto i = static_cast<std::size_t>(it - n_sf.begin());
  const double discrete = *it;
  if (i == 0 || i + 1 == n_sf.size()) return discrete;

  // Lagrange parabola through (x0,y0), (x1,y1), (x2,y2).
  const double x0 = tau[i - 1], x1 = tau[i], x2 = tau[i + 1];
  const double y0 = n_sf[i - 1], y1 = n_sf[i], y2 = n_sf[i + 1];
  const double d01 = (y1 - y0) / (x1 - x0);
  const double d12 = (y2 - y1) / (x2 - x1);
  const double curv = (d12 - d01) / (x2 - x0);  // leading coefficient
  if (!(curv < 0.0)) return discrete;
  // y = y1 + d01 (x - x1) + curv (x - x0)(x - x1), vertex where dy/dx = 0
  const double xv = 0.5 * (x0 + x1) - d01 / (2.0 * curv);
  if (xv < x0 || xv > x2) return discrete;
  const double yv = y1 + d01 * (xv - x1) + curv * (xv - x0) * (xv - x1);
  return std::max(discrete, yv);
}

double max_occupancy(const RunRecord& run) {
  run.validate();
  const auto t = run.tau();
  const auto n = run.n_sf();
  return max_occupancy(t, n);
}

double crossing_time(std::span<const double> tau, std::span<const double> values, double level) {
  if (tau.size() != values.size()) throw InvalidArgument("crossing_time: size mismatch");
  for (std::size_t i = values.size(); i-- > 1;) {
    const double hi = values[i - 1];
    const double lo = values[i];
    if (hi >= level && lo < level) {
      return tau[i - 1] + (hi - level) / (hi - lo) * (tau[i] - tau[i - 1]);
    }
  }
  throw NoCrossing("series never crosses " + std::to_string(level) + " downward");
}

double crossing_time(const RunRecord& run, double level) {
  run.validate();
  const auto t = run.tau();
  const auto n = run.n_sf();
  return crossing_time(t, n, level);
}

double sup_distance(std::span<const double> tau_a, std::span<const double> a,
                    std::span<const double> tau_b, std::span<const double> b) {
  if (tau_a.size() != a.size() || tau_b.size() != b.size() || tau_b.empty()) {
    throw InvalidArgument("sup_distance: mismatched or empty series");
  }
  double worst = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < tau_a.size(); ++i) {
    const double x = tau_a[i];
    if (x < tau_b.front() || x > tau_b.back()) continue;
    while (k + 1 < tau_b.size() && tau_b[k + 1] < x) ++k;
    double v = b[k];
    if (k + 1 < tau_b.size() && tau_b[k + 1] > tau_b[k]) {
      const double w = (x - tau_b[k]) / (tau_b[k + 1] - tau_b[k]);
      v = (1.0 - w) * b[k] + w * b[k + 1];
    }
    worst = std::max(worst, std::abs(a[i] - v));
  }
  return worst;
}

double sup_distance(const RunRecord& a, const RunRecord& b) {
  a.validate();
  b.validate();
  const auto ta = a.tau(), na = a.n_sf(), tb = b.tau(), nb = b.n_sf();
  return sup_distance(ta, na, tb, nb);
}

std::map<int, double> lag_increments(const std::map<int, double>& tau_star) {
  std::map<int, double> out;
  for (auto it = tau_star.begin(); it != tau_star.end(); ++it) {
    if (it == tau_star.begin()) continue;
    const auto prev = std::prev(it);
    if (it->first != prev->first + 1) {
      throw InvalidArgument("lag_increments: N_tot values " + std::to_string(prev->first) + " and " +
                            std::to_string(it->first) + " are not consecutive");
    }
    out[it->first] = it->second - prev->second;
  }
  return out;
}

double FitResult::operator()(double n) const { return a * (1.0 - std::exp(-n / c_sat)) + b; }

FitResult fit_saturation(const std::map<int, double>& data, const FitOptions& options) {
  if (data.size() < 4) throw InvalidArgument("fit_saturation: need at least 4 points");
  const auto m = static_cast<Eigen::Index>(data.size());
  Eigen::VectorXd x(m), y(m);
  {
    Eigen::Index i = 0;
    for (const auto& [n, v] : data) {
      x[i] = n;
      y[i] = v;
      ++i;
    }
  }

  Eigen::Vector3d theta;
  if (options.initial) {
    theta << (*options.initial)[0], (*options.initial)[1], (*options.initial)[2];
  } else {
    std::vector<double> xs(x.data(), x.data() + m);
    std::sort(xs.begin(), xs.end());
    const double median = xs.size() % 2 ? xs[xs.size() / 2]
                                        : 0.5 * (xs[xs.size() / 2 - 1] + xs[xs.size() / 2]);
    theta << y.maxCoeff() - y.minCoeff(), y.minCoeff(), median;
  }
  if (!(theta[2] > 0.0)) throw InvalidArgument("fit_saturation: initial c_sat must be > 0");

  auto residual = [&](const Eigen::Vector3d& p) {
    return Eigen::VectorXd(p[0] * (1.0 - (-x.array() / p[2]).exp()) + p[1] - y.array());
  };
  auto jacobian = [&](const Eigen::Vector3d& p) {
    Eigen::MatrixXd j(m, 3);
    const Eigen::ArrayXd e = (-x.array() / p[2]).exp();
    j.col(0) = (1.0 - e).matrix();
    j.col(1).setOnes();
    j.col(2) = (-p[0] * e * x.array() / (p[2] * p[2])).matrix();
    return j;
  };

  FitResult result;
  Eigen::VectorXd r = residual(theta);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    result.iterations = iter;
    const Eigen::MatrixXd j = jacobian(theta);
    const Eigen::Vector3d grad = j.transpose() * r;
    if (grad.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance * scale * scale) {
      result.converged = true;
      break;
    }
    const Eigen::Vector3d diag = j.colwise().squaredNorm().transpose().cwiseMax(1e-300);

    bool accepted = false;
    Eigen::Vector3d step = Eigen::Vector3d::Zero();
    for (int tries = 0; tries < 60 && !accepted; ++tries) {
      // min || [J; sqrt(lambda D)] s + [r; 0] ||
      Eigen::MatrixXd aug(m + 3, 3);
      aug.topRows(m) = j;
      aug.bottomRows(3) = (lambda * diag).cwiseSqrt().asDiagonal();
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 3);
      rhs.head(m) = -r;
      step = aug.colPivHouseholderQr().solve(rhs);
      const Eigen::Vector3d trial = theta + step;
      if (trial[2] > 0.0 && trial.allFinite()) {
        const Eigen::VectorXd r_trial = residual(trial);
        const double c_trial = r_trial.squaredNorm();
        if (c_trial <= cost) {
          theta = trial;
          r = r_trial;
          cost = c_trial;
          lambda = std::max(lambda / 3.0, 1e-15);
          accepted = true;
          break;
        }
      }
      lambda *= 4.0;
    }
    if (!accepted) break;  // no descent direction left; report as not converged
    if (step.norm() <= options.step_tolerance * (theta.norm() + options.step_tolerance)) {
      result.converged = true;
      break;
    }
  }

  result.a = theta[0];
  result.b = theta[1];
  result.c_sat = theta[2];
  result.residual_norm = std::sqrt(cost);
  if (!(result.c_sat > 0.0)) result.converged = false;
  return result;
}

double physical_time(double tau, double u_dimensionless, double c_phys) {
  if (!(c_phys > 0.0)) throw InvalidArgument("physical_time: c_phys must be > 0");
  return u_dimensionless * tau / c_phys;
}

void PhysicalParams::validate() const {
  if (!(barrier_width_nm >= 0.0)) throw InvalidArgument("barrier_width: must be >= 0");
  if (!(kinetic_energy > 0.0)) throw InvalidArgument("kinetic_energy: must be > 0");
  if (!(mass_kg > 0.0)) throw InvalidArgument("mass: must be > 0");
  if (!(temperature_K > 0.0)) throw InvalidArgument("temperature: must be > 0");
  if (!(barrier_height >= 0.0)) throw InvalidArgument("barrier_height: must be >= 0");
}

TunnelingEstimate tunneling_rate(const PhysicalParams& p) {
  p.validate();
  const double kT = constants::kBoltzmann * p.temperature_K;
  const double kinetic = p.kinetic_energy * kT;
  const double delta_e = (p.barrier_height - p.kinetic_energy) * kT;
  const double width = p.barrier_width_nm * 1e-9;
  const double h = p.hbar_exponent ? constants::kHbar : constants::kPlanck;

  TunnelingEstimate out;
  out.trapping_frequency = kinetic / constants::kPlanck;
  out.probability = (delta_e <= 0.0 || width == 0.0)
                        ? 1.0
                        : std::min(1.0, std::exp(-width * std::sqrt(2.0 * p.mass_kg * delta_e) / h));
  out.rate = out.trapping_frequency * out.probability;
  return out;
}

}  // namespace klsim
