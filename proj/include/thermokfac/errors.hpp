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

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace thermokfac {

/// Bad shapes, out-of-range parameters, malformed input.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A matrix that must be positive-definite is not (Cholesky pivot <= 0,
/// or a damped solver matrix with a non-positive smallest eigenvalue).
class NotPositiveDefinite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Euler-Maruyama trajectory blew up (state norm above 1e12).
class InstabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense materialization would exceed a configured size guard.
class SizeLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A K-FAC factor could not be inverted after damping.
class SingularFactorError : public std::runtime_error {
 public:
  SingularFactorError(std::size_t layer, const std::string& factor,
                      const std::string& detail)
      : std::runtime_error("layer " + std::to_string(layer) + ": factor " +
                           factor + " is singular after damping: " + detail),
        layer_(layer) {}

  std::size_t layer() const noexcept { return layer_; }

 private:
  std::size_t layer_;
};

/// Several column solves of one multi-right-hand-side problem failed.
class ColumnSolveError : public std::runtime_error {
 public:
  ColumnSolveError(std::vector<std::size_t> columns, const std::string& detail)
      : std::runtime_error(describe(columns, detail)),
        columns_(std::move(columns)),
        detail_(detail) {}

  const std::vector<std::size_t>& columns() const noexcept { return columns_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  static std::string describe(const std::vector<std::size_t>& columns,
                              const std::string& detail) {
    std::string msg = "solver failed on columns [";
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i != 0) msg += ", ";
      msg += std::to_string(columns[i]);
    }
    return msg + "]: " + detail;
  }

  std::vector<std::size_t> columns_;
  std::string detail_;
};

/// A solver or numerical failure during training, tagged with the 1-based step.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(std::size_t step, const std::string& detail)
      : std::runtime_error("step " + std::to_string(step) + ": " + detail), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Configuration file could not be parsed or failed validation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace thermokfac
