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

// Kronecker-factored curvature and the per-layer K-FAC update
//
//     U = (G + lambda I)^-1 DTheta (A + lambda I)^-1,
//
// where A is the second moment of a layer's (bias-augmented) inputs and G the
// second moment of the gradients with respect to its pre-activations.

#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "thermokfac/backend.hpp"
#include "thermokfac/matrix.hpp"
#include "thermokfac/quantizer.hpp"
#include "thermokfac/thermo_solver.hpp"

namespace thermokfac {

struct KroneckerFactorPair {
  DenseMatrix a;  // (n_in + 1) x (n_in + 1)
  DenseMatrix g;  // n_out x n_out
  std::optional<DenseMatrix> ema_a;
  std::optional<DenseMatrix> ema_g;
};

struct LayerGradient {
  DenseMatrix d_theta;  // n_out x (n_in + 1)
};

enum class KfacMethod { kInversion, kLinearSystems };
enum class BackendKind { kExact, kThermodynamic, kThermodynamicQuantized };

/// How G is normalized in the weight-sharing variants. kPerBatch divides by
/// the batch size so that R = 1 reproduces the MLP factors; kUnnormalized
/// sums without any prefactor.
enum class GNormalization { kPerBatch, kUnnormalized };

struct KfacConfig {
  double learning_rate = 0.1;
  double damping = 1e-3;
  double ema_decay_a = 0.9999;
  double ema_decay_g = 0.9999;
  KfacMethod method = KfacMethod::kInversion;
  BackendKind backend = BackendKind::kExact;
  std::optional<QuantSpec> input_quant;
  std::optional<QuantSpec> output_quant;
  std::size_t update_interval = 1;
  GNormalization g_normalization = GNormalization::kPerBatch;
  /// Test hook: replace every factor by the identity.
  bool identity_factors = false;

  void validate() const;
};

/// Row-major b x R x width array; element (k, r, i) at (k * R + r) * width + i.
struct Tensor3 {
  std::size_t batch = 0;
  std::size_t sharing = 0;
  std::size_t width = 0;
  std::vector<double> values;

  Tensor3() = default;
  Tensor3(std::size_t b, std::size_t r, std::size_t w, double fill = 0.0);

  double& operator()(std::size_t k, std::size_t r, std::size_t i) {
    return values[(k * sharing + r) * width + i];
  }
  double operator()(std::size_t k, std::size_t r, std::size_t i) const {
    return values[(k * sharing + r) * width + i];
  }
};

/// A = (1/b) sum_k a_k a_k^T, G = (1/b) sum_k g_k g_k^T over batch rows.
KroneckerFactorPair compute_factors_mlp(const DenseMatrix& activations,
                                        const DenseMatrix& preact_grads);

/// A = (1/(bR)) sum_{k,r} a a^T; G = (1/b) sum over every (k, position) of
/// g g^T. `g` may carry more positions than `a` (a flattened pair of
/// sharing indices).
KroneckerFactorPair compute_factors_expand(
    const Tensor3& a, const Tensor3& g,
    GNormalization norm = GNormalization::kPerBatch);

/// Sums over the sharing dimension first:
/// A = (1/(bR^2)) sum_k (sum_r a)(sum_r a)^T, G = (1/b) sum_k (sum_r g)(sum_r g)^T.
KroneckerFactorPair compute_factors_reduce(
    const Tensor3& a, const Tensor3& g,
    GNormalization norm = GNormalization::kPerBatch);

/// decay * prev + (1 - decay) * current.
DenseMatrix ema_update(const DenseMatrix& prev, const DenseMatrix& current,
                       double decay);

/// Method 1: explicit damped inverses of both factors. Uses the EMA factors
/// when present. `layer` only labels errors.
DenseMatrix kfac_update_inversion(const KroneckerFactorPair& pair,
                                  const LayerGradient& grad, const KfacConfig& cfg,
                                  SolverBackend& backend, std::size_t layer = 0);

/// Method 2: solve G Q = DTheta column by column, then A U^T = Q^T.
DenseMatrix kfac_update_linsys(const KroneckerFactorPair& pair,
                               const LayerGradient& grad, const KfacConfig& cfg,
                               SolverBackend& backend, std::size_t layer = 0);

/// theta - alpha * U.
DenseMatrix apply_update(const DenseMatrix& theta, const DenseMatrix& u, double alpha);

/// Largest Kronecker product block_fisher_oracle will build.
inline constexpr std::size_t kOracleMaxDim = 4096;

/// (A + lambda I) kron (G + lambda I), for brute-force checks.
DenseMatrix block_fisher_oracle(const KroneckerFactorPair& pair, double damping);

/// Backend named by cfg.backend; wrapped in a QuantizedBackend whenever the
/// backend kind or the quantization specs ask for it.
std::unique_ptr<SolverBackend> make_backend(const KfacConfig& cfg,
                                            const SolverConfig& solver,
                                            const HardwareModel& hw);

/// Per-layer factor state across steps: EMA smoothing, refresh cadence and,
/// for Method 1, the cached damped inverses between refreshes.
class KfacOptimizer {
 public:
  KfacOptimizer(KfacConfig cfg, std::unique_ptr<SolverBackend> backend);

  const KfacConfig& config() const noexcept { return cfg_; }
  SolverBackend& backend() noexcept { return *backend_; }
  std::size_t steps_taken() const noexcept { return step_; }

  /// True when the next step() will consume fresh factors.
  bool refresh_due() const noexcept;

  /// One optimizer step. `fresh` holds this step's factors (ignored when no
  /// refresh is due and may then be empty); returns updated weights.
  std::vector<DenseMatrix> step(const std::vector<DenseMatrix>& weights,
                                const std::vector<KroneckerFactorPair>& fresh,
                                const std::vector<LayerGradient>& grads);

  /// Current smoothed factors of one layer.
  const KroneckerFactorPair& factors(std::size_t layer) const;

 private:
  struct LayerState {
    KroneckerFactorPair pair;
    DenseMatrix inv_a;
    DenseMatrix inv_g;
  };

  void refresh(std::size_t layer, const KroneckerFactorPair& fresh);

  KfacConfig cfg_;
  std::unique_ptr<SolverBackend> backend_;
  std::vector<LayerState> layers_;
  std::size_t step_ = 0;
};

std::string_view to_string(KfacMethod method);
std::string_view to_string(BackendKind kind);

}  // namespace thermokfac
