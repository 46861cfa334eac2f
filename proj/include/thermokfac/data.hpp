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

// Seeded synthetic classification data.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "thermokfac/matrix.hpp"

namespace thermokfac {

inline constexpr std::size_t kMaxDatasetSamples = 10000;

struct DatasetSpec {
  /// "blobs": isotropic Gaussian clusters around random centers.
  /// "rings": concentric noisy circles in the plane, one per class.
  std::string generator = "blobs";
  std::size_t n_samples = 1000;
  std::size_t n_features = 2;
  std::size_t n_classes = 2;
  /// Blobs: cluster standard deviation. Rings: radial standard deviation.
  double noise = 1.0;
  /// Blobs: standard deviation of the cluster centers.
  double separation = 2.0;
  double validation_fraction = 0.2;

  void validate() const;
};

struct Dataset {
  DenseMatrix x;                    // n x n_features
  DenseMatrix y;                    // n x n_classes, one-hot
  std::vector<std::size_t> labels;  // class index per row

  std::size_t size() const noexcept { return x.rows(); }
  /// Rows `idx` as a new dataset.
  Dataset subset(const std::vector<std::size_t>& idx) const;
};

struct DataSplit {
  Dataset train;
  Dataset validation;
};

/// Samples are drawn from one RNG stream and shuffled before the split, so
/// both halves are class-balanced in expectation.
DataSplit make_dataset(const DatasetSpec& spec, std::uint64_t seed);

bool is_known_generator(const std::string& name);

}  // namespace thermokfac
