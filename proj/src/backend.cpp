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

#include "thermokfac/backend.hpp"

#include <cmath>
#include <utility>

#include "thermokfac/errors.hpp"
#include "thermokfac/linalg.hpp"
#include "thermokfac/random.hpp"

namespace thermokfac {

namespace {

double cube(std::size_t n) {
  const double x = static_cast<double>(n);
  return x * x * x;
}

}  // namespace

DenseMatrix ExactBackend::inverse(const DenseMatrix& m, double damping) {
  const CholeskyFactor chol(add_diagonal(m, damping));
  digital_ops_ += cube(m.rows());
  return chol.inverse();
}

DenseMatrix ExactBackend::solve(const DenseMatrix& m, double damping,
                                const DenseMatrix& b) {
  const CholeskyFactor chol(add_diagonal(m, damping));
  const double n = static_cast<double>(m.rows());
  digital_ops_ += cube(m.rows()) / 3.0 + 2.0 * n * n * static_cast<double>(b.cols());
  return chol.solve(b);
}

ThermoBackend::ThermoBackend(SolverConfig cfg, HardwareModel hw)
    : cfg_(std::move(cfg)), hw_(std::move(hw)) {
  cfg_.validate();
  hw_.validate();
}

SolverConfig ThermoBackend::config_for_call(double damping) {
  SolverConfig c = cfg_;
  c.damping = damping;
  c.seed = derive_seed(cfg_.seed, calls_++);
  return c;
}

DenseMatrix ThermoBackend::inverse(const DenseMatrix& m, double damping) {
  const SolverConfig c = config_for_call(damping);
  MatrixEstimate est = thermo_inverse(m, c, hw_);
  analog_time_ += analog_runtime_estimate(m.rows(), m.rows(), est.alpha_min, hw_);
  return std::move(est.solution);
}

DenseMatrix ThermoBackend::solve(const DenseMatrix& m, double damping,
                                 const DenseMatrix& b) {
  const SolverConfig c = config_for_call(damping);
  const std::size_t n = b.rows();
  std::vector<double> scale(b.cols(), 1.0);
  DenseMatrix rhs = b;
  for (std::size_t j = 0; j < b.cols(); ++j) {
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += b(i, j) * b(i, j);
    const double rms = std::sqrt(ss / static_cast<double>(n));
    if (rms > 0.0) scale[j] = rms;
    for (std::size_t i = 0; i < n; ++i) rhs(i, j) /= scale[j];
  }
  MatrixEstimate est = thermo_solve_columns(m, rhs, c, hw_);
  for (std::size_t j = 0; j < b.cols(); ++j) {
    for (std::size_t i = 0; i < n; ++i) est.solution(i, j) *= scale[j];
  }
  analog_time_ += analog_runtime_estimate(m.rows(), b.cols(), est.alpha_min, hw_);
  return std::move(est.solution);
}

QuantizedBackend::QuantizedBackend(std::unique_ptr<SolverBackend> inner,
                                   std::optional<QuantSpec> input_quant,
                                   std::optional<QuantSpec> output_quant)
    : inner_(std::move(inner)),
      input_quant_(std::move(input_quant)),
      output_quant_(std::move(output_quant)) {
  if (!inner_) throw InvalidArgument("QuantizedBackend: null inner backend");
  if (input_quant_) input_quant_->validate();
  if (output_quant_) output_quant_->validate();
}

DenseMatrix QuantizedBackend::prepare(const DenseMatrix& m) const {
  return input_quant_ ? quantize_input(m, *input_quant_) : m;
}

DenseMatrix QuantizedBackend::readout(const DenseMatrix& x) const {
  return output_quant_ ? quantize_output(x, *output_quant_) : x;
}

DenseMatrix QuantizedBackend::inverse(const DenseMatrix& m, double damping) {
  return readout(inner_->inverse(prepare(m), damping));
}

DenseMatrix QuantizedBackend::solve(const DenseMatrix& m, double damping,
                                    const DenseMatrix& b) {
  return readout(inner_->solve(prepare(m), damping, b));
}

}  // namespace thermokfac
