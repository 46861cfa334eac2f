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

#include "thermokfac/cost_model.hpp"

#include <algorithm>
#include <cmath>

#include "thermokfac/errors.hpp"

namespace thermokfac {

const std::vector<std::string>& optimizer_tags() {
  static const std::vector<std::string> tags{
      "sgd-adam",           "kfac",
      "thermo-kfac",        "thermo-kfac-ema",
      "kfac-reduce",        "thermo-kfac-reduce",
      "thermo-kfac-reduce-ema", "kfac-expand",
      "thermo-kfac-expand", "thermo-kfac-expand-ema"};
  return tags;
}

void ComplexityInput::validate() const {
  for (double v : {n, b, r, c}) {
    if (!(v >= 1.0) || !std::isfinite(v)) {
      throw InvalidArgument("complexity: n, b, R, C must be finite and >= 1");
    }
  }
  if (!(kappa >= 1.0) || !std::isfinite(kappa)) {
    throw InvalidArgument("complexity: kappa must be finite and >= 1");
  }
  const auto& tags = optimizer_tags();
  if (std::find(tags.begin(), tags.end(), optimizer) == tags.end()) {
    throw InvalidArgument("complexity: unknown optimizer '" + optimizer + "'");
  }
}

ComplexityEstimate complexity_estimate(const ComplexityInput& in) {
  in.validate();
  const double n = in.n, b = in.b, r = in.r, c = in.c, k = in.kappa;
  const double n2 = n * n;
  const double n3 = n2 * n;
  const std::string_view tag = in.optimizer;
  const bool thermo = tag.starts_with("thermo-");
  const bool ema = tag.ends_with("-ema");
  // Solve term: digital inversion or thermodynamic relaxation.
  const double solve = thermo ? n2 * k * k : n3;

  if (tag == "sgd-adam") return {b * n2, n2};

  double base_runtime = 0.0;
  double base_memory = 0.0;
  if (tag.find("reduce") != std::string_view::npos) {
    base_runtime = b * c * n * (c + n + r);
    base_memory = b * n;
  } else if (tag.find("expand") != std::string_view::npos) {
    base_runtime = b * r * c * n * (c + n);
    base_memory = b * r * n;
  } else {
    base_runtime = b * n2;
    base_memory = b * n;
  }
  const bool stores_factors = !thermo || ema;
  return {base_runtime + solve, base_memory + (stores_factors ? n2 : 0.0)};
}

double scaling_exponent(const ComplexityInput& base, std::span<const double> ns) {
  if (ns.size() < 4) throw InvalidArgument("scaling_exponent: need at least 4 sweep points");
  const auto [lo, hi] = std::minmax_element(ns.begin(), ns.end());
  if (!(*lo >= 1.0) || !(*hi >= 10.0 * *lo)) {
    throw InvalidArgument("scaling_exponent: sweep must span at least one decade");
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (double n : ns) {
    ComplexityInput in = base;
    in.n = n;
    const double x = std::log(n);
    const double y = std::log(complexity_estimate(in).runtime_ops);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(ns.size());
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

double amdahl_speedup(double f, double s) {
  if (!(f >= 0.0 && f <= 1.0)) {
    throw InvalidArgument("amdahl_speedup: fraction must lie in [0, 1]");
  }
  if (!(s >= 1.0)) throw InvalidArgument("amdahl_speedup: speedup must be >= 1");
  if (s == 1.0) return 1.0;  // 1 - f + f can round away from 1
  return 1.0 / (1.0 - f + f / s);
}

}  // namespace thermokfac
