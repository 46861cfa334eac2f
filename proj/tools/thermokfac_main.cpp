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

// thermokfac command-line entry point.
//
//   thermokfac <train|solve-bench|quantize-bench|estimate> --config FILE
//              [--output DIR] [--seed N] [--repeat N]

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "thermokfac/commands.hpp"
#include "thermokfac/config.hpp"
#include "thermokfac/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Thermodynamic K-FAC simulator and experiment harness"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> repeat;
  app.add_option("--config", config_path, "Experiment config (YAML)")->required();
  app.add_option("--output", output, "Output directory (overrides experiment.output_dir)");
  app.add_option("--seed", seed, "Root seed (overrides experiment.seed)");
  app.add_option("--repeat", repeat, "Repetitions (overrides experiment.repetitions)")
      ->check(CLI::PositiveNumber);

  using Command = void (*)(const thermokfac::ExperimentConfig&, std::ostream&);
  Command command = nullptr;
  app.add_subcommand("train", "Train every variant for every repetition")
      ->callback([&] { command = thermokfac::cmd_train; });
  app.add_subcommand("solve-bench", "Thermodynamic solver error against Cholesky")
      ->callback([&] { command = thermokfac::cmd_solve_bench; });
  app.add_subcommand("quantize-bench", "PSD violations and error per bit width")
      ->callback([&] { command = thermokfac::cmd_quantize_bench; });
  app.add_subcommand("estimate", "Cost-model tables")
      ->callback([&] { command = thermokfac::cmd_estimate; });

  CLI11_PARSE(app, argc, argv);

  try {
    thermokfac::ExperimentConfig cfg = thermokfac::load_config(config_path);
    thermokfac::apply_overrides(cfg, {output, seed, repeat});
    command(cfg, std::cout);
  } catch (const thermokfac::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
