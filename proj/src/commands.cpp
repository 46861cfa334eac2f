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

#include "thermokfac/commands.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>

#include "thermokfac/cost_model.hpp"
#include "thermokfac/errors.hpp"
#include "thermokfac/linalg.hpp"
#include "thermokfac/random.hpp"
#include "thermokfac/thermo_solver.hpp"
#include "thermokfac/train.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace thermokfac {

namespace {

std::ofstream open_output(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i != 0) out << ',';
    out << cells[i];
  }
  out << '\n';
}

std::string fmt(double v) { return format_double(v); }
std::string fmt(std::size_t v) { return std::to_string(v); }

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

// Sample standard deviation; zero for a single value.
MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return out;
}

nlohmann::ordered_json to_json(const MeanStd& m) {
  return {{"mean", m.mean}, {"std", m.std}};
}

}  // namespace

void apply_overrides(ExperimentConfig& cfg, const Overrides& o) {
  if (o.output_dir) cfg.output_dir = *o.output_dir;
  if (o.seed) cfg.seed = *o.seed;
  if (o.repetitions) {
    if (*o.repetitions == 0) throw InvalidArgument("--repeat must be >= 1");
    cfg.repetitions = *o.repetitions;
  }
}

std::uint64_t repetition_seed(std::uint64_t root, std::size_t rep) {
  return derive_seed(root, 1000 + rep);
}

void cmd_train(const ExperimentConfig& cfg, std::ostream& log) {
  if (cfg.variants.empty()) throw ConfigError("train: config has no 'train' section");
  const fs::path out_dir(cfg.output_dir);

  nlohmann::ordered_json summary;
  summary["experiment"] = cfg.name;
  summary["seed"] = cfg.seed;
  summary["repetitions"] = cfg.repetitions;
  summary["variants"] = nlohmann::ordered_json::array();

  for (const Variant& v : cfg.variants) {
    nlohmann::ordered_json jv;
    jv["name"] = v.name;
    jv["optimizer"] = std::string(to_string(v.train.optimizer));
    jv["steps"] = v.train.steps;
    jv["runs"] = nlohmann::ordered_json::array();
    std::vector<double> initial, final_loss, final_acc, final_time;

    for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
      TrainConfig tc = v.train;
      tc.seed = repetition_seed(cfg.seed, rep);
      const TrainResult res = train(tc);

      const fs::path rel = fs::path(v.name) / ("run_" + std::to_string(rep) + ".csv");
      {
        std::ofstream csv = open_output(out_dir / rel);
        write_metrics_csv(csv, res.series);
      }
      log << "wrote " << (out_dir / rel).string() << '\n';

      nlohmann::ordered_json run;
      run["repetition"] = rep;
      run["seed"] = tc.seed;
      run["csv"] = rel.generic_string();
      run["initial_loss"] = res.initial_loss;
      initial.push_back(res.initial_loss);
      if (!res.series.empty()) {
        run["final_loss"] = res.final_loss;
        run["final_accuracy"] = res.final_accuracy;
        run["final_total_time_s"] = res.series.back().total_time_s;
        final_loss.push_back(res.final_loss);
        final_acc.push_back(res.final_accuracy);
        final_time.push_back(res.series.back().total_time_s);
      }
      jv["runs"].push_back(run);
    }
    jv["initial_loss"] = to_json(mean_std(initial));
    if (!final_loss.empty()) {
      jv["final_loss"] = to_json(mean_std(final_loss));
      jv["final_accuracy"] = to_json(mean_std(final_acc));
      jv["final_total_time_s"] = to_json(mean_std(final_time));
    }
    summary["variants"].push_back(jv);
  }

  const fs::path summary_path = out_dir / "summary.json";
  {
    std::ofstream out = open_output(summary_path);
    out << summary.dump(2) << '\n';
  }
  log << "wrote " << summary_path.string() << '\n';
}

std::vector<SolveBenchRow> run_solve_bench(const ExperimentConfig& cfg) {
  const SolveBenchConfig& sb = cfg.solve_bench;
  const std::uint64_t root = derive_seed(cfg.seed, streams::kCorpus);
  std::vector<SolveBenchRow> rows;
  for (std::size_t n : sb.sizes) {
    for (double kappa : sb.conditions) {
      // Same systems for every sample count and dt, so rows are paired.
      std::vector<DenseMatrix> ms;
      std::vector<DenseVector> bs;
      std::vector<DenseVector> exact;
      std::vector<SpdReport> spectra;
      std::vector<std::uint64_t> solver_seeds;
      const std::uint64_t point =
          derive_seed(derive_seed(root, n), std::bit_cast<std::uint64_t>(kappa));
      for (std::size_t s = 0; s < sb.systems; ++s) {
        const std::uint64_t system = derive_seed(point, s);
        Rng rng(derive_seed(system, 0));
        solver_seeds.push_back(derive_seed(system, 1));
        ms.push_back(random_spd(n, kappa, rng));
        bs.push_back(random_normal(n, rng));
        exact.push_back(cholesky_solve(ms.back(), bs.back()));
        spectra.push_back(spd_report(ms.back()));
      }
      for (std::size_t samples : sb.sample_counts) {
        for (double dt_scale : sb.dt_scales) {
          SolveBenchRow row{n, kappa, samples, dt_scale, sb.systems, 0.0, 0.0, 0.0};
          for (std::size_t s = 0; s < sb.systems; ++s) {
            SolverConfig sc = cfg.solver;
            sc.n_samples = samples;
            const double dt = dt_scale / spectra[s].max_eigenvalue;
            sc.dt = dt;
            if (sb.spacing_steps > 0) {
              // Spacing is given in relaxation times tau = 1 / alpha_min.
              sc.sample_spacing =
                  static_cast<double>(sb.spacing_steps) * dt * spectra[s].min_eigenvalue;
            }
            sc.seed = solver_seeds[s];
            const VectorEstimate est = thermo_solve(ms[s], bs[s], sc, cfg.hardware);
            const double err = relative_l2_error(est.solution, exact[s]);
            row.mean_rel_error += err / static_cast<double>(sb.systems);
            row.max_rel_error = std::max(row.max_rel_error, err);
            row.mean_analog_time_s += est.analog_time / static_cast<double>(sb.systems);
          }
          rows.push_back(row);
        }
      }
    }
  }
  return rows;
}

void cmd_solve_bench(const ExperimentConfig& cfg, std::ostream& log) {
  const auto rows = run_solve_bench(cfg);
  const fs::path path = fs::path(cfg.output_dir) / "solve_bench.csv";
  std::ofstream out = open_output(path);
  out << "n,kappa,n_samples,dt_scale,systems,mean_rel_error,max_rel_error,mean_analog_time_s\n";
  for (const auto& r : rows) {
    write_row(out, {fmt(r.n), fmt(r.kappa), fmt(r.n_samples), fmt(r.dt_scale), fmt(r.systems),
                    fmt(r.mean_rel_error), fmt(r.max_rel_error), fmt(r.mean_analog_time_s)});
  }
  log << "wrote " << path.string() << '\n';
}

DenseMatrix quantize_corpus_matrix(const QuantizeBenchConfig& qc, std::uint64_t seed,
                                   std::size_t index) {
  Rng rng(derive_seed(derive_seed(seed, streams::kCorpus), index));
  std::uniform_int_distribution<std::size_t> dim(qc.min_dim, qc.max_dim);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = dim(rng);
  if (unit(rng) < qc.rank_deficient_fraction && n > 1) {
    // Rank n/2 Wishart: PSD with a null space.
    return random_wishart(n, std::max<std::size_t>(1, n / 2), rng);
  }
  const double kappa = std::exp(unit(rng) * std::log(qc.max_condition));
  return random_spd(n, kappa, rng);
}

double exact_min_eigenvalue(const DenseMatrix& m) {
  const auto n = static_cast<Eigen::Index>(m.rows());
  Eigen::MatrixXd e(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) e(i, j) = m(i, j);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(e, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

std::vector<QuantizeBenchRow> run_quantize_bench(const ExperimentConfig& cfg) {
  const QuantizeBenchConfig& qc = cfg.quantize_bench;
  std::vector<QuantizeBenchRow> rows;
  for (unsigned bits : qc.bits) {
    for (QuantKind kind : qc.kinds) {
      QuantizeBenchRow row;
      row.bits = bits;
      row.kind = kind;
      row.matrices = qc.matrices;
      row.worst_min_eigenvalue = std::numeric_limits<double>::infinity();
      rows.push_back(row);
    }
  }
  for (std::size_t i = 0; i < qc.matrices; ++i) {
    const DenseMatrix m = quantize_corpus_matrix(qc, cfg.seed, i);
    for (QuantizeBenchRow& row : rows) {
      QuantSpec spec;
      spec.bits = row.bits;
      spec.kind = row.kind;
      const DenseMatrix q = quantize_input(m, spec);
      const double lam = exact_min_eigenvalue(q);
      const double err = relative_frobenius_error(q, m);
      if (lam < kPsdViolationThreshold) ++row.psd_violations;
      row.worst_min_eigenvalue = std::min(row.worst_min_eigenvalue, lam);
      row.mean_rel_error += err / static_cast<double>(qc.matrices);
      row.max_rel_error = std::max(row.max_rel_error, err);
    }
  }
  if (qc.matrices == 0) {
    for (QuantizeBenchRow& row : rows) row.worst_min_eigenvalue = 0.0;
  }
  return rows;
}

void cmd_quantize_bench(const ExperimentConfig& cfg, std::ostream& log) {
  const auto rows = run_quantize_bench(cfg);
  const fs::path path = fs::path(cfg.output_dir) / "quantize_bench.csv";
  std::ofstream out = open_output(path);
  out << "bits,kind,matrices,psd_violations,worst_min_eigenvalue,mean_rel_error,max_rel_error\n";
  for (const auto& r : rows) {
    write_row(out, {fmt(static_cast<std::size_t>(r.bits)), std::string(to_string(r.kind)),
                    fmt(r.matrices), fmt(r.psd_violations), fmt(r.worst_min_eigenvalue),
                    fmt(r.mean_rel_error), fmt(r.max_rel_error)});
  }
  log << "wrote " << path.string() << '\n';
}

void cmd_estimate(const ExperimentConfig& cfg, std::ostream& log) {
  const EstimateConfig& ec = cfg.estimate;
  const fs::path dir(cfg.output_dir);

  {
    std::ofstream out = open_output(dir / "complexity.csv");
    out << "optimizer,n,b,r,c,kappa,runtime_ops,memory_cells\n";
    for (const std::string& tag : ec.optimizers) {
      for (double n : ec.n) {
        for (double b : ec.b) {
          for (double r : ec.r) {
            for (double c : ec.c) {
              for (double k : ec.kappa) {
                const ComplexityInput in{n, b, r, c, k, tag};
                const ComplexityEstimate e = complexity_estimate(in);
                write_row(out, {tag, fmt(n), fmt(b), fmt(r), fmt(c), fmt(k),
                                fmt(e.runtime_ops), fmt(e.memory_cells)});
              }
            }
          }
        }
      }
    }
  }
  log << "wrote " << (dir / "complexity.csv").string() << '\n';

  {
    std::ofstream out = open_output(dir / "exponents.csv");
    out << "optimizer,b,r,c,kappa,n_min,n_max,points,exponent\n";
    if (!ec.exponent_sweep.empty()) {
      const auto [lo, hi] = std::minmax_element(ec.exponent_sweep.begin(), ec.exponent_sweep.end());
      for (const std::string& tag : ec.optimizers) {
        const ComplexityInput base{1.0, ec.b.front(), ec.r.front(), ec.c.front(),
                                   ec.kappa.front(), tag};
        const double slope = scaling_exponent(base, ec.exponent_sweep);
        write_row(out, {tag, fmt(base.b), fmt(base.r), fmt(base.c), fmt(base.kappa), fmt(*lo),
                        fmt(*hi), fmt(ec.exponent_sweep.size()), fmt(slope)});
      }
    }
  }
  log << "wrote " << (dir / "exponents.csv").string() << '\n';

  {
    std::ofstream out = open_output(dir / "amdahl.csv");
    out << "inversion_fraction,inversion_speedup,speedup\n";
    for (const AmdahlPoint& p : ec.amdahl) {
      write_row(out, {fmt(p.fraction), fmt(p.speedup), fmt(amdahl_speedup(p.fraction, p.speedup))});
    }
  }
  log << "wrote " << (dir / "amdahl.csv").string() << '\n';
}

}  // namespace thermokfac
