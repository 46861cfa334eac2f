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

#include "thermokfac/kfac.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "thermokfac/errors.hpp"
#include "thermokfac/linalg.hpp"

namespace thermokfac {

namespace {

// out += w * x x^T on the upper triangle; mirror_upper() completes it.
void add_outer_upper(DenseMatrix& out, std::span<const double> x, double w) {
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = w * x[i];
    if (xi == 0.0) continue;
    double* row = out.row(i).data();
    for (std::size_t j = i; j < n; ++j) row[j] += xi * x[j];
  }
}

void mirror_upper(DenseMatrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = i + 1; j < m.cols(); ++j) m(j, i) = m(i, j);
  }
}

void check_tensor(const Tensor3& t, const char* what) {
  if (t.batch == 0 || t.sharing == 0 || t.width == 0) {
    throw InvalidArgument(std::string(what) + ": empty tensor dimension");
  }
  if (t.values.size() != t.batch * t.sharing * t.width) {
    throw InvalidArgument(std::string(what) + ": tensor data length mismatch");
  }
}

void check_pair(const Tensor3& a, const Tensor3& g, const char* what) {
  check_tensor(a, what);
  check_tensor(g, what);
  if (a.batch != g.batch) {
    throw InvalidArgument(std::string(what) + ": batch sizes differ (" +
                          std::to_string(a.batch) + " vs " + std::to_string(g.batch) + ")");
  }
}

double g_weight(GNormalization norm, std::size_t batch) {
  return norm == GNormalization::kPerBatch ? 1.0 / static_cast<double>(batch) : 1.0;
}

// Factors a step actually preconditions with.
const DenseMatrix& use_a(const KroneckerFactorPair& p) { return p.ema_a ? *p.ema_a : p.a; }
const DenseMatrix& use_g(const KroneckerFactorPair& p) { return p.ema_g ? *p.ema_g : p.g; }

void check_update_shapes(const KroneckerFactorPair& pair, const LayerGradient& grad,
                         std::size_t layer) {
  const DenseMatrix& a = use_a(pair);
  const DenseMatrix& g = use_g(pair);
  const DenseMatrix& d = grad.d_theta;
  if (!a.is_square() || !g.is_square() || d.rows() != g.rows() || d.cols() != a.rows()) {
    throw InvalidArgument("layer " + std::to_string(layer) + ": factor shapes " +
                          std::to_string(g.rows()) + "x" + std::to_string(g.cols()) +
                          " / " + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " do not fit gradient " +
                          std::to_string(d.rows()) + "x" + std::to_string(d.cols()));
  }
  if (!d.all_finite()) {
    throw InvalidArgument("layer " + std::to_string(layer) + ": non-finite gradient");
  }
}

template <class F>
DenseMatrix guarded(std::size_t layer, const char* factor, F&& f) {
  try {
    return f();
  } catch (const NotPositiveDefinite& e) {
    throw SingularFactorError(layer, factor, e.what());
  } catch (const ColumnSolveError& e) {
    throw ColumnSolveError(e.columns(), "layer " + std::to_string(layer) + ", factor " +
                                            factor + ": " + e.detail());
  } catch (const InstabilityError& e) {
    throw InstabilityError("layer " + std::to_string(layer) + ", factor " + factor + ": " +
                           e.what());
  }
}

}  // namespace

void KfacConfig::validate() const {
  if (!std::isfinite(learning_rate)) {
    throw InvalidArgument("kfac: learning_rate must be finite");
  }
  if (!(damping >= 0.0) || !std::isfinite(damping)) {
    throw InvalidArgument("kfac: damping must be >= 0");
  }
  if (!(ema_decay_a >= 0.0 && ema_decay_a <= 1.0) ||
      !(ema_decay_g >= 0.0 && ema_decay_g <= 1.0)) {
    throw InvalidArgument("kfac: EMA decays must lie in [0, 1]");
  }
  if (update_interval == 0) throw InvalidArgument("kfac: update_interval must be >= 1");
  if (input_quant) input_quant->validate();
  if (output_quant) output_quant->validate();
}

Tensor3::Tensor3(std::size_t b, std::size_t r, std::size_t w, double fill)
    : batch(b), sharing(r), width(w), values(b * r * w, fill) {}

KroneckerFactorPair compute_factors_mlp(const DenseMatrix& activations,
                                        const DenseMatrix& preact_grads) {
  const std::size_t b = activations.rows();
  if (b == 0) throw InvalidArgument("compute_factors_mlp: empty batch");
  if (preact_grads.rows() != b) {
    throw InvalidArgument("compute_factors_mlp: activations and gradients disagree on batch size");
  }
  const double w = 1.0 / static_cast<double>(b);
  KroneckerFactorPair out{DenseMatrix(activations.cols(), activations.cols()),
                          DenseMatrix(preact_grads.cols(), preact_grads.cols()),
                          std::nullopt, std::nullopt};
  for (std::size_t k = 0; k < b; ++k) {
    add_outer_upper(out.a, activations.row(k), 1.0);
    add_outer_upper(out.g, preact_grads.row(k), 1.0);
  }
  out.a *= w;
  out.g *= w;
  mirror_upper(out.a);
  mirror_upper(out.g);
  return out;
}

KroneckerFactorPair compute_factors_expand(const Tensor3& a, const Tensor3& g,
                                           GNormalization norm) {
  check_pair(a, g, "compute_factors_expand");
  KroneckerFactorPair out{DenseMatrix(a.width, a.width), DenseMatrix(g.width, g.width),
                          std::nullopt, std::nullopt};
  const std::span<const double> av(a.values);
  const std::span<const double> gv(g.values);
  for (std::size_t row = 0; row < a.batch * a.sharing; ++row) {
    add_outer_upper(out.a, av.subspan(row * a.width, a.width), 1.0);
  }
  for (std::size_t row = 0; row < g.batch * g.sharing; ++row) {
    add_outer_upper(out.g, gv.subspan(row * g.width, g.width), 1.0);
  }
  out.a *= 1.0 / static_cast<double>(a.batch * a.sharing);
  out.g *= g_weight(norm, g.batch);
  mirror_upper(out.a);
  mirror_upper(out.g);
  return out;
}

KroneckerFactorPair compute_factors_reduce(const Tensor3& a, const Tensor3& g,
                                           GNormalization norm) {
  check_pair(a, g, "compute_factors_reduce");
  if (a.sharing != g.sharing) {
    throw InvalidArgument("compute_factors_reduce: sharing dimensions differ (" +
                          std::to_string(a.sharing) + " vs " + std::to_string(g.sharing) + ")");
  }
  KroneckerFactorPair out{DenseMatrix(a.width, a.width), DenseMatrix(g.width, g.width),
                          std::nullopt, std::nullopt};
  std::vector<double> sa(a.width);
  std::vector<double> sg(g.width);
  for (std::size_t k = 0; k < a.batch; ++k) {
    std::fill(sa.begin(), sa.end(), 0.0);
    std::fill(sg.begin(), sg.end(), 0.0);
    for (std::size_t r = 0; r < a.sharing; ++r) {
      for (std::size_t i = 0; i < a.width; ++i) sa[i] += a(k, r, i);
    }
    for (std::size_t r = 0; r < g.sharing; ++r) {
      for (std::size_t i = 0; i < g.width; ++i) sg[i] += g(k, r, i);
    }
    add_outer_upper(out.a, sa, 1.0);
    add_outer_upper(out.g, sg, 1.0);
  }
  const double r = static_cast<double>(a.sharing);
  out.a *= 1.0 / (static_cast<double>(a.batch) * r * r);
  out.g *= g_weight(norm, g.batch);
  mirror_upper(out.a);
  mirror_upper(out.g);
  return out;
}

DenseMatrix ema_update(const DenseMatrix& prev, const DenseMatrix& current, double decay) {
  if (prev.rows() != current.rows() || prev.cols() != current.cols()) {
    throw InvalidArgument("ema_update: shape mismatch");
  }
  if (!(decay >= 0.0 && decay <= 1.0)) {
    throw InvalidArgument("ema_update: decay must lie in [0, 1]");
  }
  DenseMatrix out(prev.rows(), prev.cols());
  auto o = out.span();
  auto p = prev.span();
  auto c = current.span();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = decay * p[i] + (1.0 - decay) * c[i];
  return out;
}

DenseMatrix kfac_update_inversion(const KroneckerFactorPair& pair, const LayerGradient& grad,
                                  const KfacConfig& cfg, SolverBackend& backend,
                                  std::size_t layer) {
  check_update_shapes(pair, grad, layer);
  const DenseMatrix inv_g =
      guarded(layer, "G", [&] { return backend.inverse(use_g(pair), cfg.damping); });
  const DenseMatrix inv_a =
      guarded(layer, "A", [&] { return backend.inverse(use_a(pair), cfg.damping); });
  return matmul(matmul(inv_g, grad.d_theta), inv_a);
}

DenseMatrix kfac_update_linsys(const KroneckerFactorPair& pair, const LayerGradient& grad,
                               const KfacConfig& cfg, SolverBackend& backend,
                               std::size_t layer) {
  check_update_shapes(pair, grad, layer);
  const DenseMatrix q = guarded(
      layer, "G", [&] { return backend.solve(use_g(pair), cfg.damping, grad.d_theta); });
  const DenseMatrix ut = guarded(
      layer, "A", [&] { return backend.solve(use_a(pair), cfg.damping, q.transpose()); });
  return ut.transpose();
}

DenseMatrix apply_update(const DenseMatrix& theta, const DenseMatrix& u, double alpha) {
  if (theta.rows() != u.rows() || theta.cols() != u.cols()) {
    throw InvalidArgument("apply_update: shape mismatch");
  }
  DenseMatrix out = theta;
  auto o = out.span();
  auto d = u.span();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= alpha * d[i];
  return out;
}

DenseMatrix block_fisher_oracle(const KroneckerFactorPair& pair, double damping) {
  const std::size_t dim = pair.a.rows() * pair.g.rows();
  if (dim > kOracleMaxDim) {
    throw SizeLimitError("block_fisher_oracle: product dimension " + std::to_string(dim) +
                         " exceeds " + std::to_string(kOracleMaxDim));
  }
  return kronecker(add_diagonal(pair.a, damping), add_diagonal(pair.g, damping));
}

std::unique_ptr<SolverBackend> make_backend(const KfacConfig& cfg, const SolverConfig& solver,
                                            const HardwareModel& hw) {
  std::unique_ptr<SolverBackend> inner;
  if (cfg.backend == BackendKind::kExact) {
    inner = std::make_unique<ExactBackend>();
  } else {
    inner = std::make_unique<ThermoBackend>(solver, hw);
  }
  const bool quantized = cfg.backend == BackendKind::kThermodynamicQuantized ||
                         cfg.input_quant.has_value() || cfg.output_quant.has_value();
  if (!quantized) return inner;
  return std::make_unique<QuantizedBackend>(std::move(inner), cfg.input_quant,
                                            cfg.output_quant);
}

KfacOptimizer::KfacOptimizer(KfacConfig cfg, std::unique_ptr<SolverBackend> backend)
    : cfg_(std::move(cfg)), backend_(std::move(backend)) {
  cfg_.validate();
  if (!backend_) throw InvalidArgument("KfacOptimizer: null backend");
}

bool KfacOptimizer::refresh_due() const noexcept {
  return step_ % cfg_.update_interval == 0;
}

const KroneckerFactorPair& KfacOptimizer::factors(std::size_t layer) const {
  if (layer >= layers_.size()) throw InvalidArgument("KfacOptimizer: no such layer");
  return layers_[layer].pair;
}

void KfacOptimizer::refresh(std::size_t layer, const KroneckerFactorPair& fresh) {
  KroneckerFactorPair raw = fresh;
  if (cfg_.identity_factors) {
    raw.a = DenseMatrix::identity(fresh.a.rows());
    raw.g = DenseMatrix::identity(fresh.g.rows());
  }
  LayerState& st = layers_[layer];
  const bool cold = !st.pair.ema_a.has_value();
  st.pair.ema_a = cold ? raw.a : ema_update(*st.pair.ema_a, raw.a, cfg_.ema_decay_a);
  st.pair.ema_g = cold ? raw.g : ema_update(*st.pair.ema_g, raw.g, cfg_.ema_decay_g);
  st.pair.a = std::move(raw.a);
  st.pair.g = std::move(raw.g);
  if (cfg_.method == KfacMethod::kInversion) {
    st.inv_g = guarded(layer, "G",
                       [&] { return backend_->inverse(*st.pair.ema_g, cfg_.damping); });
    st.inv_a = guarded(layer, "A",
                       [&] { return backend_->inverse(*st.pair.ema_a, cfg_.damping); });
  }
}

std::vector<DenseMatrix> KfacOptimizer::step(const std::vector<DenseMatrix>& weights,
                                             const std::vector<KroneckerFactorPair>& fresh,
                                             const std::vector<LayerGradient>& grads) {
  if (weights.size() != grads.size()) {
    throw InvalidArgument("KfacOptimizer::step: weights and gradients disagree on layer count");
  }
  if (!layers_.empty() && layers_.size() != weights.size()) {
    throw InvalidArgument("KfacOptimizer::step: layer count changed");
  }
  if (refresh_due()) {
    if (fresh.size() != weights.size()) {
      throw InvalidArgument("KfacOptimizer::step: refresh needs one factor pair per layer");
    }
    layers_.resize(weights.size());
    for (std::size_t l = 0; l < weights.size(); ++l) refresh(l, fresh[l]);
  }

  std::vector<DenseMatrix> out;
  out.reserve(weights.size());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const LayerState& st = layers_[l];
    check_update_shapes(st.pair, grads[l], l);
    DenseMatrix u;
    if (cfg_.method == KfacMethod::kInversion) {
      u = matmul(matmul(st.inv_g, grads[l].d_theta), st.inv_a);
    } else {
      u = kfac_update_linsys(st.pair, grads[l], cfg_, *backend_, l);
    }
    out.push_back(apply_update(weights[l], u, cfg_.learning_rate));
  }
  ++step_;
  return out;
}

std::string_view to_string(KfacMethod method) {
  return method == KfacMethod::kInversion ? "inversion" : "linear-systems";
}

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::kExact:
      return "exact";
    case BackendKind::kThermodynamic:
      return "thermodynamic";
    case BackendKind::kThermodynamicQuantized:
      return "thermodynamic-quantized";
  }
  return "exact";
}

}  // namespace thermokfac
