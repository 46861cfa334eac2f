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

#include <cmath>
#include <memory>
#include <vector>

#include "doctest.h"
#include "oracle.hpp"
#include "thermokfac/errors.hpp"
#include "thermokfac/kfac.hpp"
#include "thermokfac/linalg.hpp"
#include "thermokfac/mlp.hpp"
#include "thermokfac/random.hpp"

using namespace thermokfac;

namespace {

KfacConfig undamped() {
  KfacConfig cfg;
  cfg.damping = 0.0;
  return cfg;
}

// Factors of a random layer built from a random batch, so they carry the
// structure real training produces.
KroneckerFactorPair random_pair(std::size_t n_in, std::size_t n_out, std::size_t b, Rng& rng) {
  DenseMatrix acts = random_normal(b, n_in + 1, rng);
  for (std::size_t k = 0; k < b; ++k) acts(k, n_in) = 1.0;
  return compute_factors_mlp(acts, random_normal(b, n_out, rng));
}

// Passes calls through to Cholesky and keeps every matrix it was handed.
class RecordingBackend final : public SolverBackend {
 public:
  explicit RecordingBackend(std::vector<DenseMatrix>* seen) : seen_(seen) {}
  std::string_view name() const override { return "recording"; }
  DenseMatrix inverse(const DenseMatrix& m, double damping) override {
    seen_->push_back(m);
    return exact_.inverse(m, damping);
  }
  DenseMatrix solve(const DenseMatrix& m, double damping, const DenseMatrix& b) override {
    seen_->push_back(m);
    return exact_.solve(m, damping, b);
  }

 private:
  std::vector<DenseMatrix>* seen_;
  ExactBackend exact_;
};

}  // namespace

TEST_CASE("compute_factors_mlp") {
  SUBCASE("bias only") {
    DenseMatrix acts{{0, 0, 1}, {0, 0, 1}};
    auto pair = compute_factors_mlp(acts, DenseMatrix{{1}, {2}});
    DenseMatrix want(3, 3);
    want(2, 2) = 1.0;
    CHECK(pair.a == want);
    CHECK(pair.g(0, 0) == 2.5);
  }
  SUBCASE("two samples") {
    auto pair = compute_factors_mlp(DenseMatrix{{1, 0, 1}, {0, 1, 1}}, DenseMatrix{{1}, {1}});
    CHECK(pair.a == DenseMatrix{{0.5, 0, 0.5}, {0, 0.5, 0.5}, {0.5, 0.5, 1}});
  }
  SUBCASE("random batch is symmetric PSD") {
    Rng rng(1);
    for (int t = 0; t < 10; ++t) {
      auto pair = random_pair(7, 5, 4, rng);
      for (const DenseMatrix* f : {&pair.a, &pair.g}) {
        CHECK(f->asymmetry() == 0.0);
        Eigen::VectorXd ev = testing::eigenvalues(*f);
        CHECK(ev.minCoeff() >= -1e-10 * ev.maxCoeff());
      }
    }
  }
  CHECK_THROWS_AS(compute_factors_mlp(DenseMatrix(0, 3), DenseMatrix(0, 2)), InvalidArgument);
  CHECK_THROWS_AS(compute_factors_mlp(DenseMatrix(2, 3), DenseMatrix(3, 2)), InvalidArgument);
}

TEST_CASE("compute_factors_expand and reduce") {
  Tensor3 a(1, 2, 2);
  a(0, 0, 0) = 1.0;
  a(0, 1, 1) = 1.0;
  Tensor3 g(1, 2, 1, 1.0);

  SUBCASE("expand") {
    auto pair = compute_factors_expand(a, g);
    CHECK(pair.a == DenseMatrix{{0.5, 0}, {0, 0.5}});
    CHECK(pair.g(0, 0) == 2.0);
  }
  SUBCASE("reduce") {
    auto pair = compute_factors_reduce(a, g);
    CHECK(pair.a == DenseMatrix{{0.25, 0.25}, {0.25, 0.25}});
    CHECK(pair.g(0, 0) == 4.0);
  }
  SUBCASE("unnormalized G drops the 1/b") {
    Tensor3 a2(3, 1, 2, 1.0), g2(3, 1, 1, 1.0);
    CHECK(compute_factors_expand(a2, g2, GNormalization::kUnnormalized).g(0, 0) == 3.0);
    CHECK(compute_factors_reduce(a2, g2, GNormalization::kUnnormalized).g(0, 0) == 3.0);
    CHECK(compute_factors_expand(a2, g2).g(0, 0) == 1.0);
  }
  SUBCASE("expand accepts more gradient positions than activations") {
    Tensor3 g4(1, 4, 1, 1.0);
    CHECK(compute_factors_expand(a, g4).g(0, 0) == 4.0);
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(compute_factors_expand(a, Tensor3(2, 2, 1)), InvalidArgument);
    CHECK_THROWS_AS(compute_factors_reduce(a, Tensor3(1, 3, 1)), InvalidArgument);
  }
}

TEST_CASE("expand and reduce with R = 1 reproduce the MLP factors") {
  Rng rng(9);
  const std::size_t b = 6, n_in = 5, n_out = 3;
  DenseMatrix acts = random_normal(b, n_in, rng);
  DenseMatrix grads = random_normal(b, n_out, rng);
  Tensor3 a(b, 1, n_in), g(b, 1, n_out);
  a.values = acts.values();
  g.values = grads.values();
  auto mlp = compute_factors_mlp(acts, grads);
  for (const auto& pair : {compute_factors_expand(a, g), compute_factors_reduce(a, g)}) {
    CHECK(max_abs_diff(pair.a, mlp.a) <= 1e-12);
    CHECK(max_abs_diff(pair.g, mlp.g) <= 1e-12);
  }
}

TEST_CASE("reduce factors have rank at most b") {
  Rng rng(10);
  const std::size_t b = 3, r = 4, n = 8;
  Tensor3 a(b, r, n), g(b, r, n);
  for (double& v : a.values) v = std::normal_distribution<double>()(rng);
  for (double& v : g.values) v = std::normal_distribution<double>()(rng);
  auto pair = compute_factors_reduce(a, g);
  for (const DenseMatrix* f : {&pair.a, &pair.g}) {
    Eigen::VectorXd ev = testing::eigenvalues(*f);
    int nonzero = 0;
    for (double e : ev) nonzero += e > 1e-10 * ev.maxCoeff();
    CHECK(nonzero <= static_cast<int>(b));
  }
  auto expand = compute_factors_expand(a, g);
  CHECK(testing::min_eigenvalue(expand.a) >= -1e-12);
  CHECK(expand.a.asymmetry() == 0.0);
}

TEST_CASE("ema_update") {
  DenseMatrix prev = DenseMatrix::identity(2);
  DenseMatrix cur = 3.0 * DenseMatrix::identity(2);
  CHECK(ema_update(prev, cur, 0.0) == cur);
  CHECK(ema_update(prev, cur, 1.0) == prev);
  CHECK(ema_update(prev, cur, 0.5) == 2.0 * DenseMatrix::identity(2));
  CHECK_THROWS_AS(ema_update(prev, DenseMatrix::identity(3), 0.5), InvalidArgument);

  Rng rng(3);
  auto p = random_pair(4, 4, 2, rng);
  auto q = random_pair(4, 4, 3, rng);
  for (double beta : {0.0, 0.3, 0.9, 0.9999, 1.0}) {
    DenseMatrix e = ema_update(p.a, q.a, beta);
    CHECK(e.asymmetry() <= 1e-15);
    CHECK(testing::min_eigenvalue(e) >= -1e-12);
  }
}

TEST_CASE("Method 1 examples") {
  ExactBackend backend;
  DenseMatrix dtheta{{1, -2, 3}, {0.5, 4, -1}};
  KroneckerFactorPair id{DenseMatrix::identity(3), DenseMatrix::identity(2), {}, {}};
  CHECK(kfac_update_inversion(id, {dtheta}, undamped(), backend) == dtheta);

  KroneckerFactorPair scaled{4.0 * DenseMatrix::identity(3), 2.0 * DenseMatrix::identity(2),
                             {}, {}};
  DenseMatrix u = kfac_update_inversion(scaled, {dtheta}, undamped(), backend);
  CHECK(max_abs_diff(u, 0.125 * dtheta) < 1e-15);
}

TEST_CASE("Method 2 examples") {
  ExactBackend backend;
  DenseMatrix dtheta{{1, 1}, {1, 1}};
  KroneckerFactorPair id{DenseMatrix::identity(2), DenseMatrix::identity(2), {}, {}};
  CHECK(kfac_update_linsys(id, {dtheta}, undamped(), backend) == dtheta);

  KroneckerFactorPair hand{DenseMatrix::identity(2), DenseMatrix{{2, 1}, {1, 2}}, {}, {}};
  DenseMatrix u = kfac_update_linsys(hand, {dtheta}, undamped(), backend);
  CHECK(max_abs_diff(u, (1.0 / 3) * dtheta) < 1e-15);
}

TEST_CASE("exact update matches the Kronecker oracle and both methods agree") {
  Rng rng(77);
  ExactBackend backend;
  for (int t = 0; t < 20; ++t) {
    std::size_t n_in = 1 + rng() % 15, n_out = 1 + rng() % 16;
    auto pair = random_pair(n_in, n_out, 8, rng);
    DenseMatrix dtheta = random_normal(n_out, n_in + 1, rng);
    KfacConfig cfg;
    cfg.damping = 0.05;
    DenseMatrix u1 = kfac_update_inversion(pair, {dtheta}, cfg, backend);
    DenseMatrix u2 = kfac_update_linsys(pair, {dtheta}, cfg, backend);
    DenseVector oracle = testing::solve(block_fisher_oracle(pair, cfg.damping), vec(dtheta));
    CHECK(relative_l2_error(vec(u1), oracle) < 1e-10);
    CHECK(relative_frobenius_error(u2, u1) < 1e-10);
  }
}

TEST_CASE("EMA factors are used when present") {
  ExactBackend backend;
  DenseMatrix dtheta{{1, 2}};
  KroneckerFactorPair pair{DenseMatrix::identity(2), DenseMatrix::identity(1),
                           2.0 * DenseMatrix::identity(2), DenseMatrix{{4}}};
  CHECK(max_abs_diff(kfac_update_inversion(pair, {dtheta}, undamped(), backend),
                     0.125 * dtheta) < 1e-15);
}

TEST_CASE("singular factors are reported with the layer") {
  ExactBackend backend;
  KroneckerFactorPair pair{DenseMatrix::identity(2), DenseMatrix(2, 2), {}, {}};
  DenseMatrix dtheta(2, 2, 1.0);
  try {
    kfac_update_inversion(pair, {dtheta}, undamped(), backend, 3);
    FAIL("expected SingularFactorError");
  } catch (const SingularFactorError& e) {
    CHECK(e.layer() == 3);
  }
  CHECK_THROWS_AS(kfac_update_linsys(pair, {dtheta}, undamped(), backend, 1),
                  SingularFactorError);
  KfacConfig damped;
  damped.damping = 0.1;
  CHECK_NOTHROW(kfac_update_inversion(pair, {dtheta}, damped, backend));
}

TEST_CASE("methods agree on the thermodynamic backend") {
  Rng rng(5);
  KroneckerFactorPair pair{random_spd(4, 3.0, rng), random_spd(3, 3.0, rng), {}, {}};
  DenseMatrix dtheta = random_normal(3, 4, rng);
  KfacConfig cfg;
  cfg.damping = 0.1;
  SolverConfig scfg;
  scfg.n_samples = 50000;
  scfg.seed = 11;
  ThermoBackend b1(scfg, HardwareModel{});
  ThermoBackend b2(scfg, HardwareModel{});
  DenseMatrix u1 = kfac_update_inversion(pair, {dtheta}, cfg, b1);
  DenseMatrix u2 = kfac_update_linsys(pair, {dtheta}, cfg, b2);
  ExactBackend exact;
  DenseMatrix u = kfac_update_inversion(pair, {dtheta}, cfg, exact);
  CHECK(relative_frobenius_error(u1, u) < 3 * 0.05);
  CHECK(relative_frobenius_error(u2, u) < 3 * 0.02);
  CHECK(relative_frobenius_error(u1, u2) < 3 * 0.05);
  CHECK(b1.analog_time() > 0.0);
  CHECK(b1.calls() == 2);
}

TEST_CASE("damping lowers the condition number") {
  Rng rng(12);
  for (int t = 0; t < 10; ++t) {
    auto pair = random_pair(6, 6, 3, rng);
    double last = INFINITY;
    for (double lambda : {1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
      double kappa = spd_report(add_diagonal(pair.g, lambda)).condition_number;
      CHECK(kappa <= last * (1 + 1e-9));
      last = kappa;
    }
  }
}

TEST_CASE("conservative input quantization hands only PSD matrices to the solver") {
  Rng rng(13);
  QuantSpec q;
  q.bits = 6;
  q.kind = QuantKind::kConservativeSpd;
  std::vector<DenseMatrix> seen;
  QuantizedBackend backend(std::make_unique<RecordingBackend>(&seen), q, q);
  KfacConfig cfg;
  cfg.damping = 1e-3;
  for (int t = 0; t < 20; ++t) {
    // Few samples: factors are singular before quantization.
    auto pair = random_pair(10, 8, 3, rng);
    DenseMatrix dtheta = random_normal(8, 11, rng);
    kfac_update_inversion(pair, {dtheta}, cfg, backend);
    kfac_update_linsys(pair, {dtheta}, cfg, backend);
  }
  CHECK(seen.size() == 80);
  for (const DenseMatrix& m : seen) CHECK(testing::min_eigenvalue(m) >= -1e-12);
}

TEST_CASE("output quantization puts every inverse on a grid") {
  QuantSpec q;
  q.bits = 3;
  QuantizedBackend backend(std::make_unique<ExactBackend>(), std::nullopt, q);
  DenseMatrix m{{2, 1}, {1, 2}};
  DenseMatrix inv = backend.inverse(m, 0.0);
  CHECK(inv == quantize_output(ExactBackend().inverse(m, 0.0), q));
  CHECK(max_abs_diff(inv, DenseMatrix{{2.0 / 3, -1.0 / 3}, {-1.0 / 3, 2.0 / 3}}) <=
        0.5 * (4.0 / 3) / 7 * (1 + 1e-12));
}

TEST_CASE("apply_update") {
  DenseMatrix theta{{1, 2}, {3, 4}};
  CHECK(apply_update(theta, DenseMatrix(2, 2, 5.0), 0.0) == theta);
  CHECK(apply_update(DenseMatrix(2, 2), DenseMatrix::identity(2), 1.0) ==
        DenseMatrix{{-1, 0}, {0, -1}});
  DenseMatrix grad{{0.1, -0.2}, {0.3, 0.4}};
  CHECK(apply_update(theta, grad, 0.7) == sgd_step(theta, grad, 0.7));
  CHECK_THROWS_AS(apply_update(theta, DenseMatrix(1, 2), 1.0), InvalidArgument);
}

TEST_CASE("block_fisher_oracle") {
  KroneckerFactorPair id{DenseMatrix::identity(2), DenseMatrix::identity(3), {}, {}};
  CHECK(block_fisher_oracle(id, 0.0) == DenseMatrix::identity(6));
  KroneckerFactorPair diag{DenseMatrix::diagonal({1, 2}), DenseMatrix::diagonal({3}), {}, {}};
  CHECK(block_fisher_oracle(diag, 0.0) == DenseMatrix::diagonal({3, 6}));

  Rng rng(4);
  KroneckerFactorPair r{random_normal(3, 3, rng), random_normal(2, 2, rng), {}, {}};
  DenseMatrix x = random_normal(2, 3, rng);
  CHECK(relative_l2_error(matvec(block_fisher_oracle(r, 0.0), vec(x)),
                          kron_matvec(r.a, r.g, vec(x))) < 1e-12);

  KroneckerFactorPair big{DenseMatrix::identity(65), DenseMatrix::identity(64), {}, {}};
  CHECK_THROWS_AS(block_fisher_oracle(big, 0.0), SizeLimitError);
}

TEST_CASE("identity factors turn K-FAC into SGD") {
  Rng rng(8);
  KfacConfig cfg = undamped();
  cfg.identity_factors = true;
  cfg.learning_rate = 0.3;
  KfacOptimizer opt(cfg, std::make_unique<ExactBackend>());
  std::vector<DenseMatrix> w_kfac{random_normal(3, 4, rng), random_normal(2, 4, rng)};
  std::vector<DenseMatrix> w_sgd = w_kfac;
  for (int t = 0; t < 5; ++t) {
    std::vector<LayerGradient> grads;
    std::vector<KroneckerFactorPair> fresh;
    for (const auto& w : w_kfac) {
      grads.push_back({random_normal(w.rows(), w.cols(), rng)});
      fresh.push_back(random_pair(w.cols() - 1, w.rows(), 2, rng));
    }
    w_kfac = opt.step(w_kfac, fresh, grads);
    for (std::size_t l = 0; l < w_sgd.size(); ++l)
      w_sgd[l] = sgd_step(w_sgd[l], grads[l].d_theta, cfg.learning_rate);
  }
  CHECK(w_kfac == w_sgd);
}

TEST_CASE("optimizer refresh cadence and EMA") {
  KfacConfig cfg;
  cfg.update_interval = 3;
  cfg.ema_decay_a = 0.5;
  cfg.ema_decay_g = 0.5;
  KfacOptimizer opt(cfg, std::make_unique<ExactBackend>());
  std::vector<DenseMatrix> w{DenseMatrix(1, 2)};
  std::vector<LayerGradient> g{{DenseMatrix{{1, 1}}}};
  auto pair = [](double s) {
    return KroneckerFactorPair{s * DenseMatrix::identity(2), s * DenseMatrix::identity(1), {},
                               {}};
  };

  CHECK(opt.refresh_due());
  w = opt.step(w, {pair(1.0)}, g);
  CHECK(opt.factors(0).ema_a == DenseMatrix::identity(2));
  CHECK_FALSE(opt.refresh_due());
  w = opt.step(w, {}, g);
  w = opt.step(w, {}, g);
  CHECK(opt.refresh_due());
  w = opt.step(w, {pair(3.0)}, g);
  CHECK(opt.factors(0).ema_a == 2.0 * DenseMatrix::identity(2));
  CHECK(opt.steps_taken() == 4);
  w = opt.step(w, {}, g);
  w = opt.step(w, {}, g);
  CHECK(opt.refresh_due());
  CHECK_THROWS_AS(opt.step(w, {}, g), InvalidArgument);
}

TEST_CASE("make_backend") {
  KfacConfig cfg;
  CHECK(make_backend(cfg, {}, {})->name() == "exact");
  cfg.backend = BackendKind::kThermodynamic;
  CHECK(make_backend(cfg, {}, {})->name() == "thermodynamic");
  cfg.backend = BackendKind::kThermodynamicQuantized;
  CHECK(make_backend(cfg, {}, {})->name() == "quantized");
  cfg.backend = BackendKind::kExact;
  cfg.output_quant = QuantSpec{};
  CHECK(make_backend(cfg, {}, {})->name() == "quantized");
}

TEST_CASE("config validation") {
  KfacConfig cfg;
  cfg.ema_decay_a = 1.5;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = KfacConfig{};
  cfg.damping = -1.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = KfacConfig{};
  cfg.update_interval = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}
