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
#include <sstream>

#include "doctest.h"
#include "oracle.hpp"
#include "thermokfac/errors.hpp"
#include "thermokfac/linalg.hpp"
#include "thermokfac/random.hpp"

using namespace thermokfac;

TEST_CASE("vec stacks columns and unvec inverts it") {
  DenseMatrix m{{1, 2, 3}, {4, 5, 6}};
  DenseVector v = vec(m);
  CHECK(v == DenseVector{1, 4, 2, 5, 3, 6});
  CHECK(unvec(v, 2, 3) == m);
}

TEST_CASE("matmul and matmul_tn agree with Eigen") {
  Rng rng(7);
  DenseMatrix a = random_normal(5, 4, rng);
  DenseMatrix b = random_normal(4, 3, rng);
  DenseMatrix c = random_normal(5, 3, rng);
  CHECK(max_abs_diff(matmul(a, b), testing::from_eigen(Eigen::MatrixXd(
                                       testing::to_eigen(a) * testing::to_eigen(b)))) < 1e-13);
  CHECK(max_abs_diff(matmul_tn(a, c), matmul(a.transpose(), c)) < 1e-13);
  CHECK_THROWS_AS(matmul(a, a), InvalidArgument);
}

TEST_CASE("cholesky_solve") {
  SUBCASE("identity") {
    DenseMatrix i3 = DenseMatrix::identity(3);
    CHECK(cholesky_solve(i3, i3) == i3);
  }
  SUBCASE("2x2 hand case") {
    DenseMatrix x = cholesky_solve(DenseMatrix{{2, 1}, {1, 2}}, DenseMatrix{{1}, {1}});
    CHECK(x(0, 0) == doctest::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(x(1, 0) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  }
  SUBCASE("random 16x16 residual") {
    Rng rng(16);
    DenseMatrix m = random_spd(16, 50.0, rng);
    DenseMatrix b = random_normal(16, 4, rng);
    DenseMatrix x = cholesky_solve(m, b);
    CHECK(relative_frobenius_error(matmul(m, x), b) < 1e-10);
    CHECK(relative_frobenius_error(x, testing::solve(m, b)) < 1e-10);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(cholesky_solve(DenseMatrix{{1, 2}, {0, 1}}, DenseMatrix::identity(2)),
                    InvalidArgument);
    CHECK_THROWS_AS(cholesky_solve(DenseMatrix{{1, 2}, {2, 1}}, DenseMatrix::identity(2)),
                    NotPositiveDefinite);
    CHECK_THROWS_AS(cholesky_solve(DenseMatrix::identity(2), DenseMatrix::identity(3)),
                    InvalidArgument);
  }
}

TEST_CASE("cholesky inverse reproduces the identity up to n = 128") {
  Rng rng(3);
  for (std::size_t n : {2, 9, 33, 64, 128}) {
    DenseMatrix m = random_spd(n, 100.0, rng);
    DenseMatrix inv = cholesky_solve(m, DenseMatrix::identity(n));
    CHECK((matmul(m, inv) - DenseMatrix::identity(n)).frobenius_norm() < 1e-9);
  }
}

TEST_CASE("spd_report") {
  auto check = [](const DenseMatrix& m, double lo, double hi) {
    SpdReport r = spd_report(m);
    CHECK(r.min_eigenvalue == doctest::Approx(lo).epsilon(1e-6));
    CHECK(r.max_eigenvalue == doctest::Approx(hi).epsilon(1e-6));
    CHECK(r.condition_number == doctest::Approx(hi / lo).epsilon(1e-6));
  };
  check(DenseMatrix::diagonal({1, 4}), 1, 4);
  check(DenseMatrix{{2, 1}, {1, 2}}, 1, 3);
  check(DenseMatrix::identity(5), 1, 1);
  CHECK_THROWS_AS(spd_report(DenseMatrix{{1, 1}, {0, 1}}), InvalidArgument);
}

TEST_CASE("spd_report agrees with a full eigensolver") {
  Rng rng(11);
  for (int t = 0; t < 5; ++t) {
    DenseMatrix m = random_spd(12, 20.0, rng, 0.5);
    SpdReport r = spd_report(m);
    Eigen::VectorXd ev = testing::eigenvalues(m);
    CHECK(r.min_eigenvalue == doctest::Approx(ev.minCoeff()).epsilon(1e-6));
    CHECK(r.max_eigenvalue == doctest::Approx(ev.maxCoeff()).epsilon(1e-6));
  }
}

TEST_CASE("spd_report scales with the matrix and keeps the condition number") {
  Rng rng(5);
  for (double c : {0.01, 3.0, 250.0}) {
    DenseMatrix m = random_spd(8, 10.0, rng);
    SpdReport r = spd_report(m);
    SpdReport rc = spd_report(c * m);
    CHECK(rc.min_eigenvalue == doctest::Approx(c * r.min_eigenvalue).epsilon(1e-6));
    CHECK(rc.max_eigenvalue == doctest::Approx(c * r.max_eigenvalue).epsilon(1e-6));
    CHECK(rc.condition_number == doctest::Approx(r.condition_number).epsilon(1e-6));
  }
}

TEST_CASE("spd_report reports non-convergence with its best estimate") {
  SpectrumOptions opts;
  opts.max_iterations = 2;
  Rng rng(1);
  DenseMatrix m = random_spd(20, 1e4, rng);
  try {
    spd_report(m, opts);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.best_estimate().max_eigenvalue > 0.0);
  }
}

TEST_CASE("kron_matvec") {
  SUBCASE("identity") {
    DenseVector x{1, -2, 3, 0.5};
    CHECK(kron_matvec(DenseMatrix::identity(2), DenseMatrix::identity(2), x) == x);
  }
  SUBCASE("diagonal factors") {
    DenseVector y = kron_matvec(DenseMatrix::diagonal({1, 2}), DenseMatrix::diagonal({3, 4}),
                                DenseVector(4, 1.0));
    CHECK(y == DenseVector{3, 4, 6, 8});
  }
  SUBCASE("matches the materialized Kronecker product") {
    Rng rng(42);
    for (int t = 0; t < 10; ++t) {
      DenseMatrix a = random_normal(3, 3, rng);
      DenseMatrix g = random_normal(4, 4, rng);
      DenseMatrix x = random_normal(4, 3, rng);
      DenseVector got = kron_matvec(a, g, vec(x));
      DenseVector want = matvec(kronecker(a, g), vec(x));
      DenseVector identity = vec(matmul(matmul(g, x), a.transpose()));
      CHECK(relative_l2_error(got, want) < 1e-12);
      for (std::size_t i = 0; i < got.dim(); ++i)
        CHECK(got[i] == doctest::Approx(identity[i]).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(kron_matvec(DenseMatrix::identity(2), DenseMatrix::identity(2), DenseVector(3)),
                  InvalidArgument);
}

TEST_CASE("matrix text round trip") {
  Rng rng(9);
  DenseMatrix m = random_normal(3, 4, rng);
  std::stringstream ss;
  write_matrix(ss, m);
  CHECK(read_matrix(ss) == m);
  std::istringstream bad("2 2\n1 2 3\n");
  CHECK_THROWS_AS(read_matrix(bad), InvalidArgument);
}

TEST_CASE("random_spd hits the requested condition number") {
  Rng rng(2);
  DenseMatrix m = random_spd(10, 25.0, rng, 2.0);
  Eigen::VectorXd ev = testing::eigenvalues(m);
  CHECK(ev.minCoeff() == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(ev.maxCoeff() == doctest::Approx(50.0).epsilon(1e-10));
  CHECK(m.asymmetry() == 0.0);
}

TEST_CASE("derive_seed separates streams") {
  CHECK(derive_seed(0, 1) != derive_seed(0, 2));
  CHECK(derive_seed(0, 1) != derive_seed(1, 1));
  CHECK(derive_seed(5, 3) == derive_seed(5, 3));
}
