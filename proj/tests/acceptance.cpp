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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. The only argument is the pinned training
// fixture used by criteria 6 and 10.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "thermokfac/commands.hpp"
#include "thermokfac/config.hpp"
#include "thermokfac/cost_model.hpp"
#include "thermokfac/kfac.hpp"
#include "thermokfac/mlp.hpp"
#include "thermokfac/random.hpp"
#include "thermokfac/thermo_solver.hpp"
#include "thermokfac/train.hpp"

using namespace thermokfac;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Outcome solver_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(derive_seed(1, 0));
  std::uniform_real_distribution<double> kappa(1.0, 10.0);
  const std::size_t sizes[] = {8, 16, 64};
  double worst = 0.0;
  for (std::size_t i = 0; i < 50; ++i) {
    const std::size_t n = sizes[i % 3];
    DenseMatrix m = random_spd(n, kappa(rng), rng);
    DenseVector b = random_normal(n, rng);
    SolverConfig cfg;
    cfg.n_samples = 100000;
    cfg.seed = derive_seed(1, 100 + i);
    double err = relative_l2_error(thermo_solve(m, b, cfg, HardwareModel{}).solution,
                                   cholesky_solve(m, b));
    worst = std::max(worst, err);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {worst < 0.02 && secs < 60.0,
          fmt("worst relative error %.4g (< 0.02), %.1f s (< 60 s)", worst, secs)};
}

Outcome inverse_correctness() {
  Rng rng(derive_seed(2, 0));
  std::uniform_real_distribution<double> kappa(1.0, 10.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < 20; ++i) {
    const std::size_t n = 2 + i % 15;
    DenseMatrix m = random_spd(n, kappa(rng), rng);
    SolverConfig cfg;
    cfg.n_samples = 200000;
    cfg.seed = derive_seed(2, 100 + i);
    double err = relative_frobenius_error(thermo_inverse(m, cfg, HardwareModel{}).solution,
                                          cholesky_solve(m, DenseMatrix::identity(n)));
    worst = std::max(worst, err);
  }

  // Raw covariance at beta and 4 beta; the estimator returns beta * Cov.
  DenseMatrix m = random_spd(8, 5.0, rng);
  SolverConfig lo, hi;
  lo.n_samples = hi.n_samples = 100000;
  lo.seed = derive_seed(2, 1);
  hi.seed = derive_seed(2, 2);
  hi.inverse_temperature = 4 * lo.inverse_temperature;
  double cov_lo = thermo_inverse(m, lo, HardwareModel{}).solution.frobenius_norm() /
                  lo.inverse_temperature;
  double cov_hi = thermo_inverse(m, hi, HardwareModel{}).solution.frobenius_norm() /
                  hi.inverse_temperature;
  double ratio = cov_lo / cov_hi;
  return {worst < 0.05 && std::abs(ratio / 4.0 - 1.0) <= 0.2,
          fmt("worst Frobenius error %.4g (< 0.05), Cov(beta)/Cov(4 beta) = %.4g (4 +- 20%%)",
              worst, ratio)};
}

Outcome kfac_oracle() {
  Rng rng(derive_seed(3, 0));
  ExactBackend backend;
  double worst_oracle = 0.0, worst_methods = 0.0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t n_in = 1 + rng() % 15, n_out = 1 + rng() % 16, b = 1 + rng() % 32;
    DenseMatrix acts = random_normal(b, n_in + 1, rng);
    for (std::size_t k = 0; k < b; ++k) acts(k, n_in) = 1.0;
    KroneckerFactorPair pair = compute_factors_mlp(acts, random_normal(b, n_out, rng));
    DenseMatrix dtheta = random_normal(n_out, n_in + 1, rng);
    KfacConfig cfg;
    cfg.damping = 1e-2;
    DenseMatrix u1 = kfac_update_inversion(pair, {dtheta}, cfg, backend);
    DenseMatrix u2 = kfac_update_linsys(pair, {dtheta}, cfg, backend);
    DenseVector oracle = testing::solve(block_fisher_oracle(pair, cfg.damping), vec(dtheta));
    worst_oracle = std::max(worst_oracle, relative_l2_error(vec(u1), oracle));
    worst_methods = std::max(worst_methods, relative_frobenius_error(u2, u1));
  }
  return {worst_oracle < 1e-10 && worst_methods < 1e-10,
          fmt("oracle %.3g, Method 1 vs 2 %.3g (both < 1e-10)", worst_oracle, worst_methods)};
}

double finite_difference_error(MlpModel model, const DenseMatrix& x, const DenseMatrix& y,
                               LossKind loss) {
  BatchTrace trace = mlp_backward(model, mlp_forward(model, x), y, loss);
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    for (std::size_t i = 0; i < model.layers[l].size(); ++i) {
      double& w = model.layers[l].span()[i];
      const double saved = w;
      w = saved + h;
      const double up = mlp_loss(model, x, y, loss);
      w = saved - h;
      const double down = mlp_loss(model, x, y, loss);
      w = saved;
      const double fd = (up - down) / (2 * h);
      const double an = trace.grads[l].d_theta.span()[i];
      worst = std::max(worst, std::abs(fd - an) / std::max(std::abs(fd) + std::abs(an), 1e-6));
    }
  }
  return worst;
}

Outcome gradient_fidelity() {
  Rng rng(derive_seed(4, 0));
  MlpModel model = MlpModel::init({5, 8, 6, 3}, Activation::kTanh, rng);
  DenseMatrix x = random_normal(10, 5, rng);
  DenseMatrix onehot(10, 3);
  for (std::size_t k = 0; k < 10; ++k) onehot(k, k % 3) = 1.0;
  DenseMatrix targets = random_normal(10, 3, rng);
  double ce = finite_difference_error(model, x, onehot, LossKind::kSoftmaxCrossEntropy);
  double mse = finite_difference_error(model, x, targets, LossKind::kMeanSquaredError);

  TrainConfig cfg;
  cfg.steps = 100;
  cfg.hidden = {8, 6};
  cfg.kfac.damping = 1e-2;
  cfg.check_outer_product = true;
  cfg.dataset.n_classes = 3;
  double residual = train(cfg).max_outer_product_residual;
  return {ce < 1e-4 && mse < 1e-4 && residual <= 1e-12,
          fmt("finite differences CE %.3g, MSE %.3g (< 1e-4); outer-product residual %.3g "
              "over 100 steps (<= 1e-12)",
              ce, mse, residual)};
}

Outcome conservative_quantizer() {
  ExperimentConfig cfg;  // default corpus: 1000 matrices, bits 6/8/12/16
  std::size_t conservative = 0, uniform6 = 0;
  for (const auto& row : run_quantize_bench(cfg)) {
    if (row.kind == QuantKind::kConservativeSpd) conservative += row.psd_violations;
    if (row.kind == QuantKind::kUniform && row.bits == 6) uniform6 = row.psd_violations;
  }
  return {conservative == 0 && uniform6 >= 1,
          fmt("conservative violations %.0f (== 0), uniform 6-bit violations %.0f (>= 1) "
              "over %.0f matrices",
              double(conservative), double(uniform6), double(cfg.quantize_bench.matrices))};
}

Outcome fig4_analogue(const ExperimentConfig& cfg) {
  std::map<std::string, double> mean_acc;
  for (const Variant& v : cfg.variants) {
    double acc = 0.0;
    for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
      TrainConfig tc = v.train;
      tc.seed = repetition_seed(cfg.seed, rep);
      acc += train(tc).final_accuracy;
    }
    mean_acc[v.name] = acc / static_cast<double>(cfg.repetitions);
  }
  double best_adam = 0.0;
  for (const Variant& v : cfg.variants)
    if (v.train.optimizer == OptimizerKind::kAdam)
      best_adam = std::max(best_adam, mean_acc[v.name]);
  if (!mean_acc.count("kfac-fp64") || !mean_acc.count("kfac-8bit") || best_adam == 0.0) {
    return {false, "fixture needs kfac-fp64, kfac-8bit and at least one adam variant"};
  }
  const double fp = mean_acc["kfac-fp64"], q8 = mean_acc["kfac-8bit"];
  return {std::abs(q8 - fp) <= 0.02 && fp >= best_adam,
          fmt("mean validation accuracy over %.0f seeds: fp64 %.4f, 8-bit %.4f (within 0.02), "
              "best Adam %.4f (<= fp64)",
              double(cfg.repetitions), fp, q8, best_adam)};
}

Outcome complexity_exponents() {
  const std::vector<double> sweep{256, 512, 1024, 2048, 4096};
  ComplexityInput in;
  in.b = 32;
  in.c = 10;
  in.kappa = 10;
  in.optimizer = "kfac";
  const double kfac = scaling_exponent(in, sweep);
  in.optimizer = "thermo-kfac";
  const double thermo = scaling_exponent(in, sweep);
  return {std::abs(kfac - 3.0) <= 0.15 && std::abs(thermo - 2.0) <= 0.15,
          fmt("kfac %.4f (3 +- 0.15), thermo-kfac %.4f (2 +- 0.15)", kfac, thermo)};
}

Outcome cost_model_numbers() {
  const double inf = std::numeric_limits<double>::infinity();
  const double vit = amdahl_speedup(0.11, inf), gnn = amdahl_speedup(0.27, inf);
  HardwareModel hw;  // RC = 1 us
  const double tau = relaxation_time(1e-3, hw);
  return {std::abs(vit - 1.124) <= 1e-3 && std::abs(gnn - 1.370) <= 1e-3 && tau == 1e-3,
          fmt("Amdahl %.6f (1.124), %.6f (1.370); tau(alpha_min = 1e-3) = %.17g s (1e-3 exactly)",
              vit, gnn, tau)};
}

Outcome expand_reduce_degeneracy() {
  Rng rng(derive_seed(9, 0));
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const std::size_t b = 1 + rng() % 16, n_in = 1 + rng() % 12, n_out = 1 + rng() % 12;
    DenseMatrix acts = random_normal(b, n_in, rng), grads = random_normal(b, n_out, rng);
    Tensor3 a(b, 1, n_in), g(b, 1, n_out);
    a.values = acts.values();
    g.values = grads.values();
    const KroneckerFactorPair mlp = compute_factors_mlp(acts, grads);
    for (const auto& p : {compute_factors_expand(a, g), compute_factors_reduce(a, g)}) {
      worst = std::max({worst, max_abs_diff(p.a, mlp.a), max_abs_diff(p.g, mlp.g)});
    }
  }
  return {worst <= 1e-12, fmt("max |difference| %.3g (<= 1e-12)", worst)};
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    files[fs::relative(e.path(), root).generic_string()] = ss.str();
  }
  return files;
}

Outcome determinism(ExperimentConfig cfg) {
  const fs::path base = fs::temp_directory_path() / "thermokfac_acceptance_determinism";
  fs::remove_all(base);
  std::ostringstream log;
  cfg.output_dir = (base / "a").string();
  cmd_train(cfg, log);
  cfg.output_dir = (base / "b").string();
  cmd_train(cfg, log);
  const auto a = read_tree(base / "a"), b = read_tree(base / "b");
  std::size_t csvs = 0;
  for (const auto& [name, _] : a) csvs += name.ends_with(".csv");
  const bool same = a == b && csvs > 0;
  fs::remove_all(base);
  return {same, fmt("%.0f CSV files plus summary compared byte for byte", double(csvs))};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: acceptance <training fixture.yaml>\n");
    return 2;
  }
  const ExperimentConfig fixture = load_config(argv[1]);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"solver correctness", solver_correctness},
      {"inverse correctness", inverse_correctness},
      {"K-FAC oracle equivalence", kfac_oracle},
      {"gradient fidelity", gradient_fidelity},
      {"conservative quantizer", conservative_quantizer},
      {"8-bit K-FAC vs full precision and Adam", [&] { return fig4_analogue(fixture); }},
      {"complexity exponents", complexity_exponents},
      {"cost-model numbers", cost_model_numbers},
      {"expand/reduce with R = 1", expand_reduce_degeneracy},
      {"training determinism", [&] { return determinism(fixture); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
