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

// Simulated thermodynamic linear-algebra solver.
//
// The hardware is a network of coupled, noisy RC oscillators whose state x
// follows the Ornstein-Uhlenbeck process
//
//     dx = -((M + lambda I) x - b) dt + N(0, 2 dt / beta),
//
// with time measured in units of the circuit's RC constant. At equilibrium
// x ~ N((M + lambda I)^-1 b, (M + lambda I)^-1 / beta), so the time average
// of x solves a linear system and beta times its covariance is the inverse.
// The process is integrated with Euler-Maruyama from x(0) = 0.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "thermokfac/linalg.hpp"
#include "thermokfac/matrix.hpp"

namespace thermokfac {

/// Simulation knobs. Times are dimensionless (units of RC); burn-in and
/// sample spacing are multiples of the relaxation time tau = 1 / alpha_min.
struct SolverConfig {
  /// Integrator step; defaults to 0.1 / alpha_max(M + lambda I).
  std::optional<double> dt;
  double inverse_temperature = 10.0;
  double burn_in_time = 5.0;
  std::size_t n_samples = 10000;
  double sample_spacing = 0.1;
  double damping = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Analog timing parameters. Defaults: R = 1 kOhm, C = 1 nF, RC = 1 us,
/// 50 Gb/s digital transfer, 16-bit I/O.
struct HardwareModel {
  double resistance = 1e3;
  double capacitance = 1e-9;
  double rc_time = 1e-6;
  double transfer_bandwidth = 5e10;
  unsigned io_bits = 16;
  std::size_t parallel_solves = 1;
  /// Equilibration time charged per solve, in multiples of tau.
  double settle_time = 5.0;

  /// Model with rc_time = r * c.
  static HardwareModel from_rc(double r, double c);
  void validate() const;
};

/// M = scale * Phi Phi^T + damping * I, applied without forming M.
class GramOperator {
 public:
  GramOperator(DenseMatrix factor, double damping, double scale = 1.0);

  std::size_t dim() const noexcept { return factor_.rows(); }
  const DenseMatrix& factor() const noexcept { return factor_; }
  double damping() const noexcept { return damping_; }
  double scale() const noexcept { return scale_; }

  /// y = M x.
  void apply(std::span<const double> x, std::span<double> y) const;
  /// Dense n x n copy of M, for oracles.
  DenseMatrix materialize() const;

 private:
  DenseMatrix factor_;
  double damping_;
  double scale_;
};

template <class Solution>
struct SolveEstimate {
  Solution solution;
  /// Per-entry variance of the per-sample quantity that was averaged into
  /// `solution` (raw state variance for solves; Gaussian estimate of the
  /// variance of beta * x_i x_j for inverses).
  Solution sample_variance;
  /// Simulated trajectory length converted to seconds via rc_time.
  double analog_time = 0.0;
  std::size_t samples_used = 0;
  // Diagnostics of the damped matrix actually simulated.
  double alpha_min = 0.0;
  double alpha_max = 0.0;
  double dt = 0.0;
};

using VectorEstimate = SolveEstimate<DenseVector>;
using MatrixEstimate = SolveEstimate<DenseMatrix>;

/// Estimate (M + lambda I)^-1 b from the time average of the trajectory.
VectorEstimate thermo_solve(const DenseMatrix& m, const DenseVector& b,
                            const SolverConfig& cfg, const HardwareModel& hw);

/// One independent trajectory per column of `b`; column j runs on RNG
/// stream (cfg.seed, j) and equals thermo_solve with seed
/// derive_seed(cfg.seed, j). Failed columns are reported together in a
/// ColumnSolveError.
MatrixEstimate thermo_solve_columns(const DenseMatrix& m, const DenseMatrix& b,
                                    const SolverConfig& cfg,
                                    const HardwareModel& hw);

/// Estimate (M + lambda I)^-1 as beta times the sample covariance of the
/// b = 0 trajectory.
MatrixEstimate thermo_inverse(const DenseMatrix& m, const SolverConfig& cfg,
                              const HardwareModel& hw);

/// thermo_solve for M = scale * Phi Phi^T + lambda I; never forms M. The
/// operator's own damping and cfg.damping are both added.
VectorEstimate thermo_solve_gram(const GramOperator& op, const DenseVector& b,
                                 const SolverConfig& cfg,
                                 const HardwareModel& hw);

/// thermo_solve against an arbitrary symmetric operator of dimension n.
VectorEstimate thermo_solve_operator(std::size_t n, const SymmetricOperator& op,
                                     const DenseVector& b,
                                     const SolverConfig& cfg,
                                     const HardwareModel& hw);

/// tau = RC / alpha_min, in seconds.
double relaxation_time(double alpha_min, const HardwareModel& hw);

/// Seconds to move n^2 + n * n_systems values in, n * n_systems values out,
/// and settle ceil(n_systems / parallel_solves) times for settle_time * tau.
double analog_runtime_estimate(std::size_t n, std::size_t n_systems,
                               double alpha_min, const HardwareModel& hw);

}  // namespace thermokfac
