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

#pragma once

#include <cstdint>
#include <random>

#include "thermokfac/matrix.hpp"

namespace thermokfac {

/// Engine used for every random stream in the project.
using Rng = std::mt19937_64;

/// SplitMix64 mixer; used to expand (seed, stream) pairs into engine seeds.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t state) : state_(state) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// Seed for stream `stream` of root seed `root`. Distinct streams of one
/// root are statistically independent; the mapping is a pure function so
/// results do not depend on scheduling.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream);

/// Engine for stream `stream` of root seed `root`.
Rng make_rng(std::uint64_t root, std::uint64_t stream);

/// Well-known stream ids for the consumers of one root seed.
namespace streams {
inline constexpr std::uint64_t kDataset = 1;
inline constexpr std::uint64_t kInit = 2;
inline constexpr std::uint64_t kBatches = 3;
inline constexpr std::uint64_t kSolver = 4;
inline constexpr std::uint64_t kCorpus = 5;
}  // namespace streams

/// Matrix with i.i.d. standard normal entries.
DenseMatrix random_normal(std::size_t rows, std::size_t cols, Rng& rng);
DenseVector random_normal(std::size_t dim, Rng& rng);

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix).
DenseMatrix random_orthogonal(std::size_t n, Rng& rng);

/// Q diag(lambda) Q^T with eigenvalues spread geometrically over
/// [scale, scale * condition], both endpoints included (n >= 2).
DenseMatrix random_spd(std::size_t n, double condition, Rng& rng,
                       double scale = 1.0);

/// X X^T / m for an n x m standard normal X: rank min(n, m), PSD.
DenseMatrix random_wishart(std::size_t n, std::size_t m, Rng& rng);

}  // namespace thermokfac
