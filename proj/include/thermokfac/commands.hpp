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

// The four harness subcommands. Each takes a parsed config, writes its
// artifacts under cfg.output_dir and logs one line per artifact to `log`.
// The run_* functions return the same rows without touching the disk.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "thermokfac/config.hpp"
#include "thermokfac/quantizer.hpp"

namespace thermokfac {

struct Overrides {
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> repetitions;
};

void apply_overrides(ExperimentConfig& cfg, const Overrides& o);

/// Seed of repetition `rep`; shared by every variant so runs are paired.
std::uint64_t repetition_seed(std::uint64_t root, std::size_t rep);

/// <out>/<variant>/run_<rep>.csv per run, then <out>/summary.json.
void cmd_train(const ExperimentConfig& cfg, std::ostream& log);

struct SolveBenchRow {
  std::size_t n = 0;
  double kappa = 1.0;
  std::size_t n_samples = 0;
  double dt_scale = 0.0;
  std::size_t systems = 0;
  double mean_rel_error = 0.0;
  double max_rel_error = 0.0;
  double mean_analog_time_s = 0.0;
};

std::vector<SolveBenchRow> run_solve_bench(const ExperimentConfig& cfg);
/// <out>/solve_bench.csv
void cmd_solve_bench(const ExperimentConfig& cfg, std::ostream& log);

struct QuantizeBenchRow {
  unsigned bits = 0;
  QuantKind kind = QuantKind::kUniform;
  std::size_t matrices = 0;
  std::size_t psd_violations = 0;
  double worst_min_eigenvalue = 0.0;
  double mean_rel_error = 0.0;
  double max_rel_error = 0.0;
};

inline constexpr double kPsdViolationThreshold = -1e-12;

/// Matrix `index` of the seeded quantization corpus.
DenseMatrix quantize_corpus_matrix(const QuantizeBenchConfig& qc, std::uint64_t seed,
                                   std::size_t index);
/// Smallest eigenvalue via a full symmetric eigensolver.
double exact_min_eigenvalue(const DenseMatrix& m);

std::vector<QuantizeBenchRow> run_quantize_bench(const ExperimentConfig& cfg);
/// <out>/quantize_bench.csv
void cmd_quantize_bench(const ExperimentConfig& cfg, std::ostream& log);

/// <out>/complexity.csv, <out>/exponents.csv, <out>/amdahl.csv
void cmd_estimate(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace thermokfac
