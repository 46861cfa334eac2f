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

// Pluggable backends for the damped solves inside a K-FAC step.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>

#include "thermokfac/matrix.hpp"
#include "thermokfac/quantizer.hpp"
#include "thermokfac/thermo_solver.hpp"

namespace thermokfac {

class SolverBackend {
 public:
  virtual ~SolverBackend() = default;

  virtual std::string_view name() const = 0;

  /// (m + damping I)^-1 for symmetric m.
  virtual DenseMatrix inverse(const DenseMatrix& m, double damping) = 0;
  /// (m + damping I)^-1 b, one column at a time.
  virtual DenseMatrix solve(const DenseMatrix& m, double damping,
                            const DenseMatrix& b) = 0;

  /// Simulated analog seconds charged so far.
  virtual double analog_time() const { return analog_time_; }
  /// Digital floating-point operations charged so far.
  virtual double digital_ops() const { return digital_ops_; }

 protected:
  double analog_time_ = 0.0;
  double digital_ops_ = 0.0;
};

/// Cholesky on the host.
class ExactBackend final : public SolverBackend {
 public:
  std::string_view name() const override { return "exact"; }
  DenseMatrix inverse(const DenseMatrix& m, double damping) override;
  DenseMatrix solve(const DenseMatrix& m, double damping,
                    const DenseMatrix& b) override;
};

/// Simulated thermodynamic hardware. Every call runs on its own RNG stream
/// derived from the configured seed and a call counter, so a fixed sequence
/// of calls is reproducible.
///
/// Right-hand-side columns are rescaled to unit RMS before the solve and the
/// result is scaled back; the thermal noise floor is absolute, so this keeps
/// the relative error independent of the gradient's magnitude.
class ThermoBackend final : public SolverBackend {
 public:
  ThermoBackend(SolverConfig cfg, HardwareModel hw);

  std::string_view name() const override { return "thermodynamic"; }
  DenseMatrix inverse(const DenseMatrix& m, double damping) override;
  DenseMatrix solve(const DenseMatrix& m, double damping,
                    const DenseMatrix& b) override;

  std::uint64_t calls() const noexcept { return calls_; }

 private:
  SolverConfig config_for_call(double damping);

  SolverConfig cfg_;
  HardwareModel hw_;
  std::uint64_t calls_ = 0;
};

/// Input quantization on the matrix sent to the device and output
/// quantization on whatever comes back. Damping is added by the inner
/// backend after input quantization.
class QuantizedBackend final : public SolverBackend {
 public:
  QuantizedBackend(std::unique_ptr<SolverBackend> inner,
                   std::optional<QuantSpec> input_quant,
                   std::optional<QuantSpec> output_quant);

  std::string_view name() const override { return "quantized"; }
  DenseMatrix inverse(const DenseMatrix& m, double damping) override;
  DenseMatrix solve(const DenseMatrix& m, double damping,
                    const DenseMatrix& b) override;

  double analog_time() const override { return inner_->analog_time(); }
  double digital_ops() const override { return inner_->digital_ops(); }

  const SolverBackend& inner() const noexcept { return *inner_; }

 private:
  DenseMatrix prepare(const DenseMatrix& m) const;
  DenseMatrix readout(const DenseMatrix& x) const;

  std::unique_ptr<SolverBackend> inner_;
  std::optional<QuantSpec> input_quant_;
  std::optional<QuantSpec> output_quant_;
};

}  // namespace thermokfac
