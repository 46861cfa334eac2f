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

// Per-layer asymptotic cost formulas evaluated with unit constants.
// Results are operation and memory-cell counts, not seconds.

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace thermokfac {

struct ComplexityInput {
  double n = 1.0;      // neurons per layer
  double b = 1.0;      // batch size
  double r = 1.0;      // weight-sharing dimension
  double c = 1.0;      // output dimension
  double kappa = 1.0;  // condition number bound
  std::string optimizer = "kfac";

  void validate() const;
};

struct ComplexityEstimate {
  double runtime_ops = 0.0;
  double memory_cells = 0.0;
};

/// Every optimizer tag complexity_estimate accepts, in table order.
const std::vector<std::string>& optimizer_tags();

ComplexityEstimate complexity_estimate(const ComplexityInput& in);

/// Least-squares slope of log(runtime_ops) against log(n) over `ns`, the
/// remaining fields of `base` held fixed. Needs >= 4 points spanning at
/// least a factor of 10.
double scaling_exponent(const ComplexityInput& base, std::span<const double> ns);

/// 1 / (1 - f + f / s). s may be +infinity.
double amdahl_speedup(double inversion_fraction, double inversion_speedup);

}  // namespace thermokfac
