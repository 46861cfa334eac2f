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

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>

#include "thermokfac/matrix.hpp"

namespace thermokfac {

/// Absolute tolerance on max |M - M^T| for "symmetric" inputs.
inline constexpr double kSymmetryTolerance = 1e-10;

/// Throws InvalidArgument when `m` is not square or not symmetric within
/// kSymmetryTolerance.
void require_symmetric(const DenseMatrix& m, const char* what);

/// Lower-triangular Cholesky factor L with M = L L^T.
class CholeskyFactor {
 public:
  /// Throws InvalidArgument for non-symmetric input and
  /// NotPositiveDefinite when a pivot is not strictly positive.
  explicit CholeskyFactor(const DenseMatrix& m);

  std::size_t dim() const noexcept { return lower_.rows(); }
  const DenseMatrix& lower() const noexcept { return lower_; }

  DenseVector solve(const DenseVector& b) const;
  DenseMatrix solve(const DenseMatrix& b) const;
  DenseMatrix inverse() const;

 private:
  void solve_in_place(std::span<double> x) const;

  DenseMatrix lower_;
};

/// X with M X = B for symmetric positive-definite M.
DenseMatrix cholesky_solve(const DenseMatrix& m, const DenseMatrix& b);
DenseVector cholesky_solve(const DenseMatrix& m, const DenseVector& b);

/// Extreme eigenvalues of a symmetric matrix.
struct SpdReport {
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  /// max / min, or +inf when min_eigenvalue <= 0.
  double condition_number = 0.0;
};

/// Power iteration ran out of iterations; carries the best estimate.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, SpdReport best)
      : std::runtime_error(what), best_(best) {}
  const SpdReport& best_estimate() const noexcept { return best_; }

 private:
  SpdReport best_;
};

struct SpectrumOptions {
  std::size_t max_iterations = 10000;
  /// Stop once the Rayleigh quotient moves by less than this (relative).
  double tolerance = 1e-13;
};

/// y = M x for an implicitly represented symmetric matrix.
using SymmetricOperator =
    std::function<void(std::span<const double> x, std::span<double> y)>;

struct SpectrumEstimate {
  SpdReport report;
  bool converged = false;
  std::size_t iterations = 0;
};

/// Power iteration for the largest eigenvalue, then power iteration on
/// (sigma I - M) with sigma the largest estimate for the smallest one.
/// Never throws on non-convergence; see `converged`.
SpectrumEstimate estimate_spectrum(std::size_t n, const SymmetricOperator& op,
                                   const SpectrumOptions& options = {});

/// Extreme eigenvalues of symmetric `m`. Throws ConvergenceError if either
/// power iteration hits the iteration cap.
SpdReport spd_report(const DenseMatrix& m, const SpectrumOptions& options = {});

/// (A kron G) x computed as vec(G X A^T), X = unvec(x).
DenseVector kron_matvec(const DenseMatrix& a, const DenseMatrix& g,
                        const DenseVector& x);

/// Explicit Kronecker product; O((mn)^2) memory, meant for oracles.
DenseMatrix kronecker(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace thermokfac
