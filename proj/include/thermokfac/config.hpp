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

// YAML experiment configuration.
//
// Top-level sections: experiment, train, kfac, solver, hardware,
// solve_bench, quantize_bench, estimate. Every section is optional and
// unknown keys are rejected with the offending line. `experiment.variants`
// lists named overrides that are deep-merged over the base train, kfac,
// solver and hardware sections. See configs/ for annotated examples.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "thermokfac/quantizer.hpp"
#include "thermokfac/train.hpp"

namespace thermokfac {

struct SolveBenchConfig {
  std::vector<std::size_t> sizes = {8, 16};
  /// Condition numbers of the generated systems; 1 gives identity matrices.
  std::vector<double> conditions = {1.0, 2.0, 10.0};
  std::vector<std::size_t> sample_counts = {1000, 16000};
  /// dt = dt_scale / alpha_max.
  std::vector<double> dt_scales = {0.1};
  std::size_t systems = 5;
  /// When nonzero, samples are taken every `spacing_steps` integration steps
  /// instead of every solver.sample_spacing relaxation times, so a row's
  /// cost no longer grows with kappa.
  std::size_t spacing_steps = 0;
};

struct QuantizeBenchConfig {
  std::size_t matrices = 1000;
  std::size_t min_dim = 2;
  std::size_t max_dim = 64;
  std::vector<unsigned> bits = {6, 8, 12, 16};
  std::vector<QuantKind> kinds = {QuantKind::kUniform, QuantKind::kConservativeSpd};
  /// Condition-number ceiling for the full-rank part of the corpus.
  double max_condition = 1e3;
  /// Share of the corpus drawn as rank-deficient Wishart matrices.
  double rank_deficient_fraction = 0.25;
};

struct AmdahlPoint {
  double fraction = 0.0;
  double speedup = 1.0;
};

struct EstimateConfig {
  std::vector<std::string> optimizers;
  // Complexity grid; the Cartesian product of these is evaluated.
  std::vector<double> n;
  std::vector<double> b = {32};
  std::vector<double> r = {1};
  std::vector<double> c = {10};
  std::vector<double> kappa = {10};
  /// n values for scaling exponents (first entry of b, r, c, kappa held fixed).
  std::vector<double> exponent_sweep;
  std::vector<AmdahlPoint> amdahl;
};

struct Variant {
  std::string name;
  TrainConfig train;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string output_dir = "out";
  std::size_t repetitions = 1;
  std::uint64_t seed = 0;
  /// Empty without a train section; a train section without variants
  /// yields a single entry named "base".
  std::vector<Variant> variants;
  /// Top-level solver and hardware sections, used by solve-bench.
  SolverConfig solver;
  HardwareModel hardware;
  SolveBenchConfig solve_bench;
  QuantizeBenchConfig quantize_bench;
  EstimateConfig estimate;
};

/// Throws ConfigError with "<origin>:<line>: message" on any problem.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::string& path);

}  // namespace thermokfac
