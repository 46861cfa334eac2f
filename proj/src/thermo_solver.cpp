// Copyright 2026 The thermokfac Authors
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

#include "thermokfac/thermo_solver.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include <boost/random/normal_distribution.hpp>

#include "thermokfac/errors.hpp"
#include "thermokfac/random.hpp"

namespace thermokfac {

namespace {

constexpr double kBlowUpNorm = 1e12;
// alpha_min below this fraction of alpha_max is treated as singular.
constexpr double kSingularRatio = 1e-10;

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

struct Plan {
  double alpha_min = 0.0;
  double alpha_max = 0.0;
  double dt = 0.0;
  std::size_t burn_in_steps = 0;
  std::size_t spacing_steps = 1;

  std::size_t total_steps(std::size_t n_samples) const {
    return burn_in_steps + n_samples * spacing_steps;
  }
};

Plan make_plan(std::size_t n, const SymmetricOperator& damped,
               const SolverConfig& cfg) {
  const SpectrumEstimate spectrum = estimate_spectrum(n, damped);
  Plan plan;
  plan.alpha_min = spectrum.report.min_eigenvalue;
  plan.alpha_max = spectrum.report.max_eigenvalue;
  if (!(plan.alpha_max > 0.0) || !(plan.alpha_min > kSingularRatio * plan.alpha_max)) {
    std::ostringstream oss;
    oss << "thermodynamic solver: damped matrix is not positive-definite "
        << "(estimated eigenvalues [" << plan.alpha_min << ", " << plan.alpha_max
        << "])";
    throw NotPositiveDefinite(oss.str());
  }
  plan.dt = cfg.dt.value_or(0.1 / plan.alpha_max);
  const double tau = 1.0 / plan.alpha_min;
  plan.burn_in_steps =
      static_cast<std::size_t>(std::ceil(cfg.burn_in_time * tau / plan.dt));
  plan.spacing_steps = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(cfg.sample_spacing * tau / plan.dt)));
  return plan;
}

// Running first and second moments of the retained samples.
struct Moments {
  explicit Moments(std::size_t n, bool covariance)
      : mean(n, 0.0), m2(n, 0.0), delta(n, 0.0) {
    if (covariance) comoment.assign(n * n, 0.0);
  }

  void add(std::span<const double> x) {
    ++count;
    const double inv = 1.0 / static_cast<double>(count);
    const std::size_t n = mean.size();
    for (std::size_t i = 0; i < n; ++i) {
      delta[i] = x[i] - mean[i];
      mean[i] += delta[i] * inv;
      m2[i] += delta[i] * (x[i] - mean[i]);
    }
    if (!comoment.empty()) {
      for (std::size_t i = 0; i < n; ++i) {
        double* row = comoment.data() + i * n;
        const double di = delta[i];
        for (std::size_t j = 0; j < n; ++j) row[j] += di * (x[j] - mean[j]);
      }
    }
  }

  std::size_t count = 0;
  std::vector<double> mean;
  std::vector<double> m2;
  std::vector<double> comoment;
  std::vector<double> delta;
};

// Integrates one trajectory and accumulates its retained samples.
// Throws InstabilityError if the state norm exceeds kBlowUpNorm.
void run_trajectory(std::size_t n, const SymmetricOperator& damped,
                    std::span<const double> b, const Plan& plan,
                    const SolverConfig& cfg, Rng& rng, Moments& moments) {
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  const double h = plan.dt;
  const double noise = std::sqrt(2.0 * h / cfg.inverse_temperature);
  const double limit = kBlowUpNorm * kBlowUpNorm;
  std::vector<double> x(n, 0.0);
  std::vector<double> drift(n, 0.0);

  auto step = [&](std::size_t index) {
    damped(x, drift);
    double norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double force = b.empty() ? drift[i] : drift[i] - b[i];
      x[i] += -h * force + noise * normal(rng);
      norm2 += x[i] * x[i];
    }
    if (!(norm2 <= limit)) {
      std::ostringstream oss;
      oss << "thermodynamic solver: trajectory diverged at step " << index
          << " (dt = " << h << ", alpha_max = " << plan.alpha_max
          << ", stability requires dt < " << 2.0 / plan.alpha_max << ")";
      throw InstabilityError(oss.str());
    }
  };

  std::size_t index = 0;
  for (std::size_t s = 0; s < plan.burn_in_steps; ++s) step(index++);
  for (std::size_t k = 0; k < cfg.n_samples; ++k) {
    for (std::size_t s = 0; s < plan.spacing_steps; ++s) step(index++);
    moments.add(x);
  }
}

SymmetricOperator dense_operator(const DenseMatrix& m, double damping) {
  // M is symmetric, so M x is the sum of rows scaled by x; this form keeps
  // the inner loop free of reductions.
  return [&m, damping](std::span<const double> x, std::span<double> y) {
    const std::size_t n = m.rows();
    for (std::size_t i = 0; i < n; ++i) y[i] = damping * x[i];
    for (std::size_t j = 0; j < n; ++j) {
      const double xj = x[j];
      const double* row = m.row(j).data();
      for (std::size_t i = 0; i < n; ++i) y[i] += row[i] * xj;
    }
  };
}

void require_vector(const DenseVector& b, std::size_t n, const char* what) {
  if (b.dim() != n) {
    throw InvalidArgument(std::string(what) + ": right-hand side has length " +
                          std::to_string(b.dim()) + ", expected " +
                          std::to_string(n));
  }
  if (!b.all_finite()) {
    throw InvalidArgument(std::string(what) + ": non-finite right-hand side");
  }
}

VectorEstimate solve_with(std::size_t n, const SymmetricOperator& damped,
                          const DenseVector& b, const SolverConfig& cfg,
                          const HardwareModel& hw) {
  cfg.validate();
  hw.validate();
  const Plan plan = make_plan(n, damped, cfg);
  Rng rng(cfg.seed);
  Moments moments(n, false);
  run_trajectory(n, damped, b.span(), plan, cfg, rng, moments);

  VectorEstimate est;
  est.solution = DenseVector(std::move(moments.mean));
  est.sample_variance = DenseVector(n);
  const double denom = static_cast<double>(std::max<std::size_t>(moments.count, 2) - 1);
  for (std::size_t i = 0; i < n; ++i) est.sample_variance[i] = moments.m2[i] / denom;
  est.samples_used = moments.count;
  est.alpha_min = plan.alpha_min;
  est.alpha_max = plan.alpha_max;
  est.dt = plan.dt;
  est.analog_time =
      static_cast<double>(plan.total_steps(cfg.n_samples)) * plan.dt * hw.rc_time;
  return est;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

void SolverConfig::validate() const {
  if (dt && !(*dt > 0.0)) throw InvalidArgument("solver: dt must be positive");
  if (!(inverse_temperature > 0.0)) {
    throw InvalidArgument("solver: inverse_temperature must be positive");
  }
  if (n_samples < 1) throw InvalidArgument("solver: n_samples must be >= 1");
  if (!(damping >= 0.0)) throw InvalidArgument("solver: damping must be >= 0");
  if (!(burn_in_time >= 0.0)) throw InvalidArgument("solver: burn_in_time must be >= 0");
  if (!(sample_spacing > 0.0)) {
    throw InvalidArgument("solver: sample_spacing must be positive");
  }
}

HardwareModel HardwareModel::from_rc(double r, double c) {
  HardwareModel hw;
  hw.resistance = r;
  hw.capacitance = c;
  hw.rc_time = r * c;
  return hw;
}

void HardwareModel::validate() const {
  if (!(rc_time > 0.0)) throw InvalidArgument("hardware: rc_time must be positive");
  if (!(transfer_bandwidth > 0.0)) {
    throw InvalidArgument("hardware: transfer_bandwidth must be positive");
  }
  if (io_bits < 1) throw InvalidArgument("hardware: io_bits must be >= 1");
  if (parallel_solves < 1) {
    throw InvalidArgument("hardware: parallel_solves must be >= 1");
  }
  if (!(settle_time >= 0.0)) throw InvalidArgument("hardware: settle_time must be >= 0");
}

// ---------------------------------------------------------------------------
// GramOperator

GramOperator::GramOperator(DenseMatrix factor, double damping, double scale)
    : factor_(std::move(factor)), damping_(damping), scale_(scale) {
  if (!(damping_ >= 0.0)) throw InvalidArgument("GramOperator: damping must be >= 0");
  if (!(scale_ > 0.0)) throw InvalidArgument("GramOperator: scale must be positive");
}

void GramOperator::apply(std::span<const double> x, std::span<double> y) const {
  const std::size_t n = factor_.rows();
  const std::size_t m = factor_.cols();
  // t = Phi^T x, accumulated row by row to stay cache friendly.
  std::vector<double> t(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = factor_.row(i);
    const double xi = x[i];
    for (std::size_t k = 0; k < m; ++k) t[k] += row[k] * xi;
  }
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = scale_ * dot(factor_.row(i), t) + damping_ * x[i];
  }
}

DenseMatrix GramOperator::materialize() const {
  const std::size_t n = factor_.rows();
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = scale_ * dot(factor_.row(i), factor_.row(j));
      m(i, j) = v;
      m(j, i) = v;
    }
    m(i, i) += damping_;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Solves

VectorEstimate thermo_solve(const DenseMatrix& m, const DenseVector& b,
                            const SolverConfig& cfg, const HardwareModel& hw) {
  require_symmetric(m, "thermo_solve");
  require_vector(b, m.rows(), "thermo_solve");
  return solve_with(m.rows(), dense_operator(m, cfg.damping), b, cfg, hw);
}

VectorEstimate thermo_solve_operator(std::size_t n, const SymmetricOperator& op,
                                     const DenseVector& b,
                                     const SolverConfig& cfg,
                                     const HardwareModel& hw) {
  require_vector(b, n, "thermo_solve_operator");
  const double damping = cfg.damping;
  const SymmetricOperator damped = [&op, damping](std::span<const double> x,
                                                  std::span<double> y) {
    op(x, y);
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += damping * x[i];
  };
  return solve_with(n, damped, b, cfg, hw);
}

VectorEstimate thermo_solve_gram(const GramOperator& op, const DenseVector& b,
                                 const SolverConfig& cfg,
                                 const HardwareModel& hw) {
  const SymmetricOperator apply = [&op](std::span<const double> x,
                                        std::span<double> y) { op.apply(x, y); };
  return thermo_solve_operator(op.dim(), apply, b, cfg, hw);
}

MatrixEstimate thermo_solve_columns(const DenseMatrix& m, const DenseMatrix& b,
                                    const SolverConfig& cfg,
                                    const HardwareModel& hw) {
  require_symmetric(m, "thermo_solve_columns");
  if (b.rows() != m.rows()) {
    throw InvalidArgument("thermo_solve_columns: right-hand side has " +
                          std::to_string(b.rows()) + " rows, expected " +
                          std::to_string(m.rows()));
  }
  cfg.validate();
  hw.validate();
  const std::size_t n = m.rows();
  const SymmetricOperator damped = dense_operator(m, cfg.damping);
  const Plan plan = make_plan(n, damped, cfg);

  MatrixEstimate est;
  est.solution = DenseMatrix(n, b.cols());
  est.sample_variance = DenseMatrix(n, b.cols());
  std::vector<std::size_t> failed;
  std::string first_failure;
  std::vector<double> rhs(n);
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t r = 0; r < n; ++r) rhs[r] = b(r, c);
    Rng rng(derive_seed(cfg.seed, c));
    Moments moments(n, false);
    try {
      run_trajectory(n, damped, rhs, plan, cfg, rng, moments);
    } catch (const InstabilityError& e) {
      if (failed.empty()) first_failure = e.what();
      failed.push_back(c);
      continue;
    }
    const double denom =
        static_cast<double>(std::max<std::size_t>(moments.count, 2) - 1);
    for (std::size_t r = 0; r < n; ++r) {
      est.solution(r, c) = moments.mean[r];
      est.sample_variance(r, c) = moments.m2[r] / denom;
    }
  }
  if (!failed.empty()) throw ColumnSolveError(std::move(failed), first_failure);

  est.samples_used = cfg.n_samples;
  est.alpha_min = plan.alpha_min;
  est.alpha_max = plan.alpha_max;
  est.dt = plan.dt;
  est.analog_time = static_cast<double>(b.cols()) *
                    static_cast<double>(plan.total_steps(cfg.n_samples)) *
                    plan.dt * hw.rc_time;
  return est;
}

MatrixEstimate thermo_inverse(const DenseMatrix& m, const SolverConfig& cfg,
                              const HardwareModel& hw) {
  require_symmetric(m, "thermo_inverse");
  cfg.validate();
  hw.validate();
  const std::size_t n = m.rows();
  const SymmetricOperator damped = dense_operator(m, cfg.damping);
  const Plan plan = make_plan(n, damped, cfg);
  Rng rng(cfg.seed);
  Moments moments(n, true);
  run_trajectory(n, damped, {}, plan, cfg, rng, moments);

  const double beta = cfg.inverse_temperature;
  const double denom = static_cast<double>(std::max<std::size_t>(moments.count, 2) - 1);
  DenseMatrix cov(n, n, std::move(moments.comoment));
  cov *= 1.0 / denom;
  cov = symmetrize(cov);

  // Euler-Maruyama's stationary covariance is beta^-1 M^-1 (I - dt M / 2)^-1
  // rather than beta^-1 M^-1; undo the O(dt) factor so the estimate targets
  // the continuous-time equilibrium.
  DenseMatrix cov_m(n, n);
  for (std::size_t i = 0; i < n; ++i) damped(cov.row(i), cov_m.row(i));
  DenseMatrix inverse = cov;
  inverse -= (0.5 * plan.dt) * cov_m;
  inverse *= beta;

  MatrixEstimate est;
  est.solution = symmetrize(inverse);
  est.sample_variance = DenseMatrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      est.sample_variance(i, j) =
          beta * beta * (cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j));
    }
  }
  est.samples_used = moments.count;
  est.alpha_min = plan.alpha_min;
  est.alpha_max = plan.alpha_max;
  est.dt = plan.dt;
  est.analog_time =
      static_cast<double>(plan.total_steps(cfg.n_samples)) * plan.dt * hw.rc_time;
  return est;
}

// ---------------------------------------------------------------------------
// Timing model

double relaxation_time(double alpha_min, const HardwareModel& hw) {
  if (!(alpha_min > 0.0)) {
    throw InvalidArgument("relaxation_time: alpha_min must be positive");
  }
  hw.validate();
  return hw.rc_time / alpha_min;
}

double analog_runtime_estimate(std::size_t n, std::size_t n_systems,
                               double alpha_min, const HardwareModel& hw) {
  if (n < 1) throw InvalidArgument("analog_runtime_estimate: n must be >= 1");
  if (n_systems < 1) {
    throw InvalidArgument("analog_runtime_estimate: n_systems must be >= 1");
  }
  const double tau = relaxation_time(alpha_min, hw);
  const double nd = static_cast<double>(n);
  const double ks = static_cast<double>(n_systems);
  const double bits = static_cast<double>(hw.io_bits);
  const double input_seconds = (nd * nd + nd * ks) * bits / hw.transfer_bandwidth;
  const double output_seconds = nd * ks * bits / hw.transfer_bandwidth;
  const std::size_t rounds = (n_systems + hw.parallel_solves - 1) / hw.parallel_solves;
  return input_seconds + output_seconds +
         static_cast<double>(rounds) * hw.settle_time * tau;
}

}  // namespace thermokfac
