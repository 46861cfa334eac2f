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

#include "thermokfac/quantizer.hpp"

#include <algorithm>
#include <cmath>

#include "thermokfac/errors.hpp"
#include "thermokfac/linalg.hpp"

namespace thermokfac {

void QuantSpec::validate() const {
  if (bits < 2 || bits > 32) {
    throw InvalidArgument("quantizer: bits must be in [2, 32], got " +
                          std::to_string(bits));
  }
  if (scale_policy == ScalePolicy::kFixedRange && !(range_hi > range_lo)) {
    throw InvalidArgument("quantizer: fixed range needs lo < hi");
  }
}

QuantGrid::QuantGrid(unsigned bits, double lo, double hi)
    : lo_(lo), hi_(hi), last_(std::ldexp(1.0, static_cast<int>(bits)) - 1.0) {
  if (!(hi >= lo)) throw InvalidArgument("QuantGrid: need lo <= hi");
}

QuantGrid QuantGrid::for_spec(const QuantSpec& spec, double max_abs) {
  spec.validate();
  if (spec.scale_policy == ScalePolicy::kFixedRange) {
    return QuantGrid(spec.bits, spec.range_lo, spec.range_hi);
  }
  return QuantGrid(spec.bits, -max_abs, max_abs);
}

double QuantGrid::level(long long k) const {
  return lo_ + (hi_ - lo_) * (static_cast<double>(k) / last_);
}

double QuantGrid::nearest(double v) const {
  if (empty_range()) return lo_;
  const double t = (v - lo_) / (hi_ - lo_) * last_;
  const double k = std::clamp(std::nearbyint(t), 0.0, last_);
  return level(static_cast<long long>(k));
}

double QuantGrid::round_up(double v) const {
  if (empty_range()) return std::max(lo_, v);
  const double t = (v - lo_) / (hi_ - lo_) * last_;
  long long k = static_cast<long long>(std::nearbyint(t));
  // The index estimate can be off by one either way near a level.
  while (k > 0 && level(k - 1) >= v) --k;
  while (level(k) < v) ++k;
  return level(k);
}

DenseMatrix quantize_uniform(const DenseMatrix& m, const QuantSpec& spec) {
  const QuantGrid grid = QuantGrid::for_spec(spec, m.max_abs());
  DenseMatrix q = m;
  for (double& v : q.span()) v = grid.nearest(v);
  return q;
}

DenseVector quantize_uniform(const DenseVector& v, const QuantSpec& spec) {
  double max_abs = 0.0;
  for (double x : v.span()) max_abs = std::max(max_abs, std::abs(x));
  const QuantGrid grid = QuantGrid::for_spec(spec, max_abs);
  DenseVector q = v;
  for (double& x : q.span()) x = grid.nearest(x);
  return q;
}

DenseMatrix quantize_conservative_spd(const DenseMatrix& m, const QuantSpec& spec) {
  require_symmetric(m, "quantize_conservative_spd");
  const std::size_t n = m.rows();
  const QuantGrid grid = QuantGrid::for_spec(spec, m.max_abs());

  DenseMatrix q(n, n);
  std::vector<double> row_error(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double rounded = grid.nearest(m(i, j));
      const double err = std::abs(rounded - m(i, j));
      q(i, j) = rounded;
      q(j, i) = rounded;
      row_error[i] += err;
      row_error[j] += err;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    q(i, i) = grid.round_up(m(i, i) + row_error[i]);
  }
  return q;
}

DenseMatrix quantize_input(const DenseMatrix& m, const QuantSpec& spec) {
  return spec.kind == QuantKind::kConservativeSpd ? quantize_conservative_spd(m, spec)
                                                  : quantize_uniform(m, spec);
}

DenseMatrix quantize_output(const DenseMatrix& m, const QuantSpec& spec) {
  QuantSpec readout = spec;
  readout.scale_policy = ScalePolicy::kMaxAbsSymmetric;
  readout.kind = QuantKind::kUniform;
  return quantize_uniform(m, readout);
}

DenseVector quantize_output(const DenseVector& v, const QuantSpec& spec) {
  QuantSpec readout = spec;
  readout.scale_policy = ScalePolicy::kMaxAbsSymmetric;
  readout.kind = QuantKind::kUniform;
  return quantize_uniform(v, readout);
}

std::string_view to_string(QuantKind kind) {
  return kind == QuantKind::kConservativeSpd ? "conservative-spd" : "uniform";
}

std::string_view to_string(ScalePolicy policy) {
  return policy == ScalePolicy::kFixedRange ? "fixed-range" : "max-abs-symmetric";
}

}  // namespace thermokfac
