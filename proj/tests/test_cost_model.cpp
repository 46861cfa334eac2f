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

#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "thermokfac/cost_model.hpp"
#include "thermokfac/errors.hpp"

using namespace thermokfac;

namespace {

ComplexityInput make(const std::string& tag, double n, double b, double r = 1, double c = 1,
                     double kappa = 1) {
  ComplexityInput in;
  in.optimizer = tag;
  in.n = n;
  in.b = b;
  in.r = r;
  in.c = c;
  in.kappa = kappa;
  return in;
}

const std::vector<double> kSweep{256, 512, 1024, 2048, 4096};

}  // namespace

TEST_CASE("Table 1 rows") {
  auto sgd = complexity_estimate(make("sgd-adam", 1, 32));
  CHECK(sgd.runtime_ops == 32);
  CHECK(sgd.memory_cells == 1);

  auto kfac = complexity_estimate(make("kfac", 1000, 512, 1, 1, 10));
  auto thermo = complexity_estimate(make("thermo-kfac", 1000, 512, 1, 1, 10));
  CHECK(kfac.runtime_ops == 512e6 + 1e9);
  CHECK(thermo.runtime_ops == 512e6 + 1e8);
  CHECK(kfac.memory_cells == 512e3 + 1e6);
  CHECK(thermo.memory_cells == 512e3);
  CHECK(complexity_estimate(make("thermo-kfac-ema", 1000, 512, 1, 1, 10)).memory_cells ==
        512e3 + 1e6);
}

TEST_CASE("Table 3 rows") {
  const double n = 64, b = 8, r = 16, c = 10, k = 5;
  auto est = [&](const char* tag) { return complexity_estimate(make(tag, n, b, r, c, k)); };
  CHECK(est("kfac-reduce").runtime_ops == b * c * n * (c + n + r) + n * n * n);
  CHECK(est("kfac-reduce").memory_cells == b * n + n * n);
  CHECK(est("thermo-kfac-reduce").runtime_ops == b * c * n * (c + n + r) + n * n * k * k);
  CHECK(est("thermo-kfac-reduce").memory_cells == b * n);
  CHECK(est("thermo-kfac-reduce-ema").memory_cells == b * n + n * n);
  CHECK(est("kfac-expand").runtime_ops == b * r * c * n * (c + n) + n * n * n);
  CHECK(est("kfac-expand").memory_cells == b * r * n + n * n);
  CHECK(est("thermo-kfac-expand").runtime_ops == b * r * c * n * (c + n) + n * n * k * k);
  CHECK(est("thermo-kfac-expand").memory_cells == b * r * n);
  CHECK(est("thermo-kfac-expand-ema").memory_cells == b * r * n + n * n);
}

TEST_CASE("memory drops the n^2 term only for thermo tags without -ema") {
  for (const auto& tag : optimizer_tags()) {
    if (tag == "sgd-adam") continue;
    auto lo = complexity_estimate(make(tag, 100, 4, 3, 2, 7));
    auto hi = complexity_estimate(make(tag, 200, 4, 3, 2, 7));
    bool thermo = tag.rfind("thermo-", 0) == 0;
    bool ema = tag.size() > 4 && tag.compare(tag.size() - 4, 4, "-ema") == 0;
    // Quadrupling from the n^2 term shows up as a bigger than linear jump.
    double growth = hi.memory_cells / lo.memory_cells;
    if (thermo && !ema) {
      CHECK(growth == doctest::Approx(2.0));
    } else {
      CHECK(growth > 2.5);
    }
  }
}

TEST_CASE("estimates are monotone in every dimension") {
  for (const auto& tag : optimizer_tags()) {
    ComplexityInput base = make(tag, 32, 16, 4, 10, 5);
    auto ref = complexity_estimate(base);
    for (int field = 0; field < 5; ++field) {
      ComplexityInput up = base;
      double* p[] = {&up.n, &up.b, &up.r, &up.c, &up.kappa};
      *p[field] *= 2;
      auto e = complexity_estimate(up);
      CHECK(e.runtime_ops >= ref.runtime_ops);
      CHECK(e.memory_cells >= ref.memory_cells);
    }
  }
}

TEST_CASE("invalid inputs") {
  CHECK_THROWS_AS(complexity_estimate(make("lbfgs", 4, 4)), InvalidArgument);
  CHECK_THROWS_AS(complexity_estimate(make("kfac", 0.5, 4)), InvalidArgument);
  CHECK_THROWS_AS(complexity_estimate(make("kfac", 4, 4, 1, 1, 0.5)), InvalidArgument);
}

TEST_CASE("scaling exponents") {
  CHECK(scaling_exponent(make("kfac", 1, 8), kSweep) == doctest::Approx(3.0).epsilon(0.05));
  CHECK(scaling_exponent(make("thermo-kfac", 1, 8, 1, 1, 10), kSweep) ==
        doctest::Approx(2.0).epsilon(0.075));
  CHECK(scaling_exponent(make("sgd-adam", 1, 8), kSweep) == doctest::Approx(2.0).epsilon(0.075));
  std::vector<double> few{256, 512, 4096};
  CHECK_THROWS_AS(scaling_exponent(make("kfac", 1, 8), few), InvalidArgument);
  std::vector<double> narrow{256, 300, 400, 500};
  CHECK_THROWS_AS(scaling_exponent(make("kfac", 1, 8), narrow), InvalidArgument);
}

TEST_CASE("amdahl_speedup") {
  const double inf = std::numeric_limits<double>::infinity();
  for (double s : {1.0, 2.0, 1e6, inf}) CHECK(amdahl_speedup(0.0, s) == 1.0);
  CHECK(amdahl_speedup(0.11, inf) == doctest::Approx(1.124).epsilon(1e-3));
  CHECK(amdahl_speedup(0.27, inf) == doctest::Approx(1.370).epsilon(1e-3));
  for (double f = 0.0; f <= 1.0; f += 0.01) {
    CHECK(amdahl_speedup(f, 1.0) == 1.0);
    double prev = 1.0;
    for (double s : {1.5, 3.0, 10.0, 1e3}) {
      double v = amdahl_speedup(f, s);
      CHECK(v >= prev);
      if (f < 1.0) CHECK(v <= 1.0 / (1.0 - f) * (1 + 1e-15));
      prev = v;
    }
  }
  CHECK(amdahl_speedup(0.5, 4.0) > amdahl_speedup(0.2, 4.0));
  CHECK_THROWS_AS(amdahl_speedup(1.5, 2.0), InvalidArgument);
  CHECK_THROWS_AS(amdahl_speedup(0.5, 0.5), InvalidArgument);
}
