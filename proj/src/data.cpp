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

#include "thermokfac/data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "thermokfac/errors.hpp"
#include "thermokfac/random.hpp"

namespace thermokfac {

bool is_known_generator(const std::string& name) {
  return name == "blobs" || name == "rings";
}

void DatasetSpec::validate() const {
  if (!is_known_generator(generator)) {
    throw InvalidArgument("dataset: unknown generator '" + generator +
                          "' (expected blobs or rings)");
  }
  if (n_samples < 2 || n_samples > kMaxDatasetSamples) {
    throw InvalidArgument("dataset: n_samples must be in [2, " +
                          std::to_string(kMaxDatasetSamples) + "]");
  }
  if (n_classes < 2) throw InvalidArgument("dataset: need at least 2 classes");
  if (n_features == 0) throw InvalidArgument("dataset: n_features must be positive");
  if (generator == "rings" && n_features != 2) {
    throw InvalidArgument("dataset: rings are two-dimensional (n_features = 2)");
  }
  if (!(noise >= 0.0) || !(separation >= 0.0)) {
    throw InvalidArgument("dataset: noise and separation must be >= 0");
  }
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw InvalidArgument("dataset: validation_fraction must lie in [0, 1)");
  }
}

Dataset Dataset::subset(const std::vector<std::size_t>& idx) const {
  Dataset out{DenseMatrix(idx.size(), x.cols()), DenseMatrix(idx.size(), y.cols()), {}};
  out.labels.reserve(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    std::copy(x.row(idx[r]).begin(), x.row(idx[r]).end(), out.x.row(r).begin());
    std::copy(y.row(idx[r]).begin(), y.row(idx[r]).end(), out.y.row(r).begin());
    out.labels.push_back(labels[idx[r]]);
  }
  return out;
}

DataSplit make_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng = make_rng(seed, streams::kDataset);
  std::normal_distribution<double> normal(0.0, 1.0);

  const std::size_t n = spec.n_samples;
  Dataset all{DenseMatrix(n, spec.n_features), DenseMatrix(n, spec.n_classes), {}};
  all.labels.resize(n);

  DenseMatrix centers(spec.n_classes, spec.n_features);
  for (double& v : centers.span()) v = spec.separation * normal(rng);

  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t c = k % spec.n_classes;
    all.labels[k] = c;
    all.y(k, c) = 1.0;
    if (spec.generator == "blobs") {
      for (std::size_t i = 0; i < spec.n_features; ++i) {
        all.x(k, i) = centers(c, i) + spec.noise * normal(rng);
      }
    } else {
      std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
      const double theta = angle(rng);
      const double radius = static_cast<double>(c + 1) + spec.noise * normal(rng);
      all.x(k, 0) = radius * std::cos(theta);
      all.x(k, 1) = radius * std::sin(theta);
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = static_cast<std::size_t>(
      std::llround(spec.validation_fraction * static_cast<double>(n)));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val),
                                     order.end());
  std::vector<std::size_t> val_idx(order.begin(),
                                   order.begin() + static_cast<std::ptrdiff_t>(n_val));
  if (train_idx.empty()) throw InvalidArgument("dataset: empty training split");
  return {all.subset(train_idx), all.subset(val_idx)};
}

}  // namespace thermokfac
