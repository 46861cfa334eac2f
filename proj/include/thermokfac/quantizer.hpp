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

// Integer-grid quantization of solver inputs and outputs.
//
// A b-bit grid has 2^b evenly spaced levels from `lo` to `hi` inclusive.
// Under the max-abs policy the range is [-s, s] with s = max |entry| of the
// value being quantized, so the largest entry is always representable.

#pragma once

#include <cstddef>
#include <string_view>

#include "thermokfac/matrix.hpp"

namespace thermokfac {

enum class ScalePolicy { kMaxAbsSymmetric, kFixedRange };
enum class QuantKind { kUniform, kConservativeSpd };

struct QuantSpec {
  unsigned bits = 8;
  ScalePolicy scale_policy = ScalePolicy::kMaxAbsSymmetric;
  /// Used only with ScalePolicy::kFixedRange.
  double range_lo = -1.0;
  double range_hi = 1.0;
  QuantKind kind = QuantKind::kUniform;

  void validate() const;
};

/// The levels lo + (hi - lo) * k / (2^bits - 1), k = 0 .. 2^bits - 1.
class QuantGrid {
 public:
  QuantGrid(unsigned bits, double lo, double hi);

  /// Grid for `spec` applied to data whose largest magnitude is `max_abs`.
  static QuantGrid for_spec(const QuantSpec& spec, double max_abs);

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double step() const noexcept { return (hi_ - lo_) / last_; }
  /// Degenerate grid (lo == hi); every value maps to lo.
  bool empty_range() const noexcept { return hi_ == lo_; }

  double level(long long k) const;
  /// Nearest level, clamped to [lo, hi]. Ties round to the even index.
  double nearest(double v) const;
  /// Smallest level of the unbounded lattice that is >= v. May exceed hi.
  double round_up(double v) const;

 private:
  double lo_;
  double hi_;
  double last_;  // 2^bits - 1
};

DenseMatrix quantize_uniform(const DenseMatrix& m, const QuantSpec& spec);
DenseVector quantize_uniform(const DenseVector& v, const QuantSpec& spec);

/// Definiteness-preserving quantization of a symmetric PSD matrix:
/// off-diagonals are rounded to the nearest level (upper triangle, then
/// mirrored), each row's absolute off-diagonal rounding errors are added to
/// its diagonal, and the shifted diagonal is rounded up on the grid. The
/// rounding perturbation is then symmetric and diagonally dominant with a
/// nonnegative diagonal, hence PSD, so the output stays PSD.
///
/// The diagonal may land above the grid's upper bound; it is rounded up on
/// the grid's lattice instead of being clamped.
DenseMatrix quantize_conservative_spd(const DenseMatrix& m, const QuantSpec& spec);

/// Input-side quantization dispatching on spec.kind.
DenseMatrix quantize_input(const DenseMatrix& m, const QuantSpec& spec);

/// ADC readout model: uniform quantization with a per-call max-abs scale,
/// whatever spec.scale_policy says.
DenseMatrix quantize_output(const DenseMatrix& m, const QuantSpec& spec);
DenseVector quantize_output(const DenseVector& v, const QuantSpec& spec);

std::string_view to_string(QuantKind kind);
std::string_view to_string(ScalePolicy policy);

}  // namespace thermokfac
