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

// Seeded minibatch training loop for SGD, Adam and K-FAC.
//
// Wall-clock figures are simulated: host work is an operation count divided
// by `digital_flops`, solver work on the thermodynamic backends is charged
// through analog_runtime_estimate.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "thermokfac/data.hpp"
#include "thermokfac/kfac.hpp"
#include "thermokfac/mlp.hpp"
#include "thermokfac/thermo_solver.hpp"

namespace thermokfac {

enum class OptimizerKind { kSgd, kAdam, kKfac };

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::kKfac;
  /// Step size for every optimizer; copied into kfac.learning_rate.
  double learning_rate = 0.1;
  std::size_t batch_size = 32;
  std::size_t steps = 100;
  std::uint64_t seed = 0;
  DatasetSpec dataset;
  LossKind loss = LossKind::kSoftmaxCrossEntropy;
  std::vector<std::size_t> hidden = {16};
  Activation activation = Activation::kTanh;

  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  KfacConfig kfac;
  SolverConfig solver;
  HardwareModel hardware;

  /// Simulated host throughput, floating-point operations per second.
  double digital_flops = 1e12;
  /// Recompute the gradient outer-product identity every step.
  bool check_outer_product = false;

  void validate() const;
};

struct MetricsRecord {
  std::size_t step = 0;
  double loss = 0.0;      // mean loss over the training split after the step
  double accuracy = 0.0;  // validation accuracy after the step
  double digital_time_s = 0.0;
  double analog_time_s = 0.0;
  double total_time_s = 0.0;
};

struct TrainResult {
  double initial_loss = 0.0;
  double initial_accuracy = 0.0;
  std::vector<MetricsRecord> series;
  double final_loss = 0.0;
  double final_accuracy = 0.0;
  /// Largest outer-product identity residual seen (0 unless checked).
  double max_outer_product_residual = 0.0;
  MlpModel model;
};

/// Deterministic given cfg (seed included). Solver failures are rethrown as
/// TrainingError carrying the step; the message names the layer.
TrainResult train(const TrainConfig& cfg);

inline constexpr std::string_view kMetricsHeader =
    "step,loss,accuracy,digital_time_s,analog_time_s,total_time_s";

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& series);

std::string_view to_string(OptimizerKind kind);

}  // namespace thermokfac
