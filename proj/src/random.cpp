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

#include "thermokfac/random.hpp"

#include <cmath>
#include <vector>

#include "thermokfac/errors.hpp"

namespace thermokfac {

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  SplitMix64 a(root);
  const std::uint64_t r = a.next();
  SplitMix64 b(r ^ (stream * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL));
  return b.next();
}

Rng make_rng(std::uint64_t root, std::uint64_t stream) {
  return Rng(derive_seed(root, stream));
}

DenseMatrix random_normal(std::size_t rows, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  DenseMatrix m(rows, cols);
  for (double& v : m.span()) v = dist(rng);
  return m;
}

DenseVector random_normal(std::size_t dim, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  DenseVector v(dim);
  for (double& x : v.span()) x = dist(rng);
  return v;
}

DenseMatrix random_orthogonal(std::size_t n, Rng& rng) {
  // Modified Gram-Schmidt on the columns of a Gaussian matrix.
  DenseMatrix q = random_normal(n, n, rng);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      double proj = 0.0;
      for (std::size_t i = 0; i < n; ++i) proj += q(i, k) * q(i, j);
      for (std::size_t i = 0; i < n; ++i) q(i, j) -= proj * q(i, k);
    }
    double nrm = 0.0;
    for (std::size_t i = 0; i < n; ++i) nrm += q(i, j) * q(i, j);
    nrm = std::sqrt(nrm);
    for (std::size_t i = 0; i < n; ++i) q(i, j) /= nrm;
  }
  return q;
}

DenseMatrix random_spd(std::size_t n, double condition, Rng& rng, double scale) {
  if (n == 0) throw InvalidArgument("random_spd: n must be positive");
  if (!(condition >= 1.0) || !(scale > 0.0)) {
    throw InvalidArgument("random_spd: need condition >= 1 and scale > 0");
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    eig[i] = scale * std::pow(condition, t);
  }
  const DenseMatrix q = random_orthogonal(n, rng);
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += q(i, k) * eig[k] * q(j, k);
      m(i, j) = acc;
      m(j, i) = acc;
    }
  }
  return m;
}

DenseMatrix random_wishart(std::size_t n, std::size_t m, Rng& rng) {
  if (n == 0 || m == 0) throw InvalidArgument("random_wishart: empty shape");
  const DenseMatrix x = random_normal(n, m, rng);
  DenseMatrix w(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < m; ++k) acc += x(i, k) * x(j, k);
      acc /= static_cast<double>(m);
      w(i, j) = acc;
      w(j, i) = acc;
    }
  }
  return w;
}

}  // namespace thermokfac
