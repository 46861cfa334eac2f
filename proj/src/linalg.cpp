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

#include "thermokfac/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "thermokfac/errors.hpp"
#include "thermokfac/random.hpp"

namespace thermokfac {

void require_symmetric(const DenseMatrix& m, const char* what) {
  if (!m.is_square()) {
    throw InvalidArgument(std::string(what) + ": matrix is not square");
  }
  const double asym = m.asymmetry();
  if (asym > kSymmetryTolerance) {
    std::ostringstream oss;
    oss << what << ": matrix is not symmetric (max |M - M^T| = " << asym << ")";
    throw InvalidArgument(oss.str());
  }
}

// ---------------------------------------------------------------------------
// Cholesky

CholeskyFactor::CholeskyFactor(const DenseMatrix& m) : lower_(m.rows(), m.cols()) {
  require_symmetric(m, "cholesky");
  const std::size_t n = m.rows();
  for (std::size_t j = 0; j < n; ++j) {
    double diag = m(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= lower_(j, k) * lower_(j, k);
    if (!(diag > 0.0)) {
      std::ostringstream oss;
      oss << "cholesky: non-positive pivot " << diag << " at index " << j;
      throw NotPositiveDefinite(oss.str());
    }
    const double ljj = std::sqrt(diag);
    lower_(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = m(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= lower_(i, k) * lower_(j, k);
      lower_(i, j) = v / ljj;
    }
  }
}

void CholeskyFactor::solve_in_place(std::span<double> x) const {
  const std::size_t n = dim();
  // L y = b
  for (std::size_t i = 0; i < n; ++i) {
    double v = x[i];
    for (std::size_t k = 0; k < i; ++k) v -= lower_(i, k) * x[k];
    x[i] = v / lower_(i, i);
  }
  // L^T x = y
  for (std::size_t i = n; i-- > 0;) {
    double v = x[i];
    for (std::size_t k = i + 1; k < n; ++k) v -= lower_(k, i) * x[k];
    x[i] = v / lower_(i, i);
  }
}

DenseVector CholeskyFactor::solve(const DenseVector& b) const {
  if (b.dim() != dim()) throw InvalidArgument("cholesky solve: length mismatch");
  DenseVector x = b;
  solve_in_place(x.span());
  return x;
}

DenseMatrix CholeskyFactor::solve(const DenseMatrix& b) const {
  if (b.rows() != dim()) {
    throw InvalidArgument("cholesky solve: right-hand side has " +
                          std::to_string(b.rows()) + " rows, expected " +
                          std::to_string(dim()));
  }
  DenseMatrix x(b.rows(), b.cols());
  std::vector<double> column(b.rows());
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t r = 0; r < b.rows(); ++r) column[r] = b(r, c);
    solve_in_place(column);
    for (std::size_t r = 0; r < b.rows(); ++r) x(r, c) = column[r];
  }
  return x;
}

DenseMatrix CholeskyFactor::inverse() const {
  return symmetrize(solve(DenseMatrix::identity(dim())));
}

DenseMatrix cholesky_solve(const DenseMatrix& m, const DenseMatrix& b) {
  return CholeskyFactor(m).solve(b);
}

DenseVector cholesky_solve(const DenseMatrix& m, const DenseVector& b) {
  return CholeskyFactor(m).solve(b);
}

// ---------------------------------------------------------------------------
// Extreme eigenvalues

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double normalize(std::span<double> v) {
  const double nrm = std::sqrt(dot(v, v));
  if (nrm > 0.0) {
    for (double& x : v) x /= nrm;
  }
  return nrm;
}

std::vector<double> start_vector(std::size_t n) {
  // Fixed pseudo-random start keeps the estimate deterministic while
  // avoiding accidental orthogonality to the dominant eigenvector.
  SplitMix64 gen(0x5eedULL);
  std::vector<double> v(n);
  for (double& x : v) x = 0.5 + gen.next_unit();
  normalize(v);
  return v;
}

struct PowerResult {
  double value = 0.0;
  std::vector<double> vector;
  bool converged = false;
  std::size_t iterations = 0;
};

// Power iteration on y = shift * x + sign * M x.
PowerResult power_iterate(std::size_t n, const SymmetricOperator& op,
                          double shift, double sign,
                          const SpectrumOptions& options) {
  PowerResult res;
  res.vector = start_vector(n);
  std::vector<double> mx(n);
  std::vector<double> y(n);
  double previous = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    op(res.vector, mx);
    for (std::size_t i = 0; i < n; ++i) y[i] = shift * res.vector[i] + sign * mx[i];
    const double rq = dot(res.vector, y);
    res.value = rq;
    res.iterations = it;
    const double nrm = normalize(y);
    const double scale = std::max({std::abs(rq), std::abs(shift), 1e-300});
    if (nrm <= 1e-15 * scale) {
      // The operator annihilates the iterate: every eigenvalue of M equals
      // -shift * sign to working precision, so any vector is exact.
      res.converged = true;
      return res;
    }
    if (std::abs(rq - previous) <= options.tolerance * scale) {
      res.converged = true;
      return res;
    }
    previous = rq;
    res.vector.swap(y);
  }
  return res;
}

double rayleigh(const SymmetricOperator& op, std::span<const double> v,
                std::vector<double>& scratch) {
  op(v, scratch);
  return dot(v, scratch);
}

}  // namespace

SpectrumEstimate estimate_spectrum(std::size_t n, const SymmetricOperator& op,
                                   const SpectrumOptions& options) {
  SpectrumEstimate est;
  if (n == 0) {
    est.converged = true;
    return est;
  }
  std::vector<double> scratch(n);

  // Dominant-magnitude eigenvalue first; its sign decides which end of the
  // spectrum the shifted iteration has to look for.
  const PowerResult top = power_iterate(n, op, 0.0, 1.0, options);
  const double dominant = rayleigh(op, top.vector, scratch);
  const double sigma = std::abs(dominant);

  double low = 0.0;
  double high = 0.0;
  PowerResult other;
  if (dominant >= 0.0) {
    other = power_iterate(n, op, sigma, -1.0, options);  // sigma I - M
    high = dominant;
    low = rayleigh(op, other.vector, scratch);
  } else {
    other = power_iterate(n, op, sigma, 1.0, options);  // M + sigma I
    low = dominant;
    high = rayleigh(op, other.vector, scratch);
  }
  if (low > high) std::swap(low, high);

  est.report.min_eigenvalue = low;
  est.report.max_eigenvalue = high;
  est.report.condition_number =
      low > 0.0 ? high / low : std::numeric_limits<double>::infinity();
  est.converged = top.converged && other.converged;
  est.iterations = top.iterations + other.iterations;
  return est;
}

SpdReport spd_report(const DenseMatrix& m, const SpectrumOptions& options) {
  require_symmetric(m, "spd_report");
  const std::size_t n = m.rows();
  const SymmetricOperator op = [&m](std::span<const double> x,
                                    std::span<double> y) {
    for (std::size_t i = 0; i < m.rows(); ++i) y[i] = dot(m.row(i), x);
  };
  const SpectrumEstimate est = estimate_spectrum(n, op, options);
  if (!est.converged) {
    throw ConvergenceError("spd_report: power iteration did not converge in " +
                               std::to_string(options.max_iterations) +
                               " iterations",
                           est.report);
  }
  return est.report;
}

// ---------------------------------------------------------------------------
// Kronecker products

DenseVector kron_matvec(const DenseMatrix& a, const DenseMatrix& g,
                        const DenseVector& x) {
  if (x.dim() != a.cols() * g.cols()) {
    throw InvalidArgument("kron_matvec: vector length " +
                          std::to_string(x.dim()) + " does not match " +
                          std::to_string(a.cols()) + "*" +
                          std::to_string(g.cols()));
  }
  const DenseMatrix xm = unvec(x, g.cols(), a.cols());
  return vec(matmul(matmul(g, xm), a.transpose()));
}

DenseMatrix kronecker(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double aij = a(i, j);
      for (std::size_t p = 0; p < b.rows(); ++p) {
        for (std::size_t q = 0; q < b.cols(); ++q) {
          k(i * b.rows() + p, j * b.cols() + q) = aij * b(p, q);
        }
      }
    }
  }
  return k;
}

}  // namespace thermokfac
