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

#include "thermokfac/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "thermokfac/errors.hpp"

namespace thermokfac {

namespace {

double activate(Activation a, double s) {
  switch (a) {
    case Activation::kRelu:
      return s > 0.0 ? s : 0.0;
    case Activation::kTanh:
      return std::tanh(s);
    case Activation::kIdentity:
      return s;
  }
  return s;
}

double activate_grad(Activation a, double s) {
  switch (a) {
    case Activation::kRelu:
      return s > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh: {
      const double t = std::tanh(s);
      return 1.0 - t * t;
    }
    case Activation::kIdentity:
      return 1.0;
  }
  return 1.0;
}

DenseMatrix with_bias_column(const DenseMatrix& x) {
  DenseMatrix out(x.rows(), x.cols() + 1);
  for (std::size_t k = 0; k < x.rows(); ++k) {
    auto src = x.row(k);
    auto dst = out.row(k);
    std::copy(src.begin(), src.end(), dst.begin());
    dst[x.cols()] = 1.0;
  }
  return out;
}

// Per-sample losses and dloss_k/dlogits_k.
double loss_and_grad(const DenseMatrix& logits, const DenseMatrix& labels, LossKind kind,
                     DenseMatrix* grad) {
  const std::size_t b = logits.rows();
  const std::size_t c = logits.cols();
  double total = 0.0;
  for (std::size_t k = 0; k < b; ++k) {
    auto s = logits.row(k);
    auto y = labels.row(k);
    if (kind == LossKind::kMeanSquaredError) {
      for (std::size_t i = 0; i < c; ++i) {
        const double r = s[i] - y[i];
        total += 0.5 * r * r;
        if (grad) (*grad)(k, i) = r;
      }
    } else {
      const double mx = *std::max_element(s.begin(), s.end());
      double z = 0.0;
      for (std::size_t i = 0; i < c; ++i) z += std::exp(s[i] - mx);
      const double lse = mx + std::log(z);
      double ysum = 0.0;
      for (std::size_t i = 0; i < c; ++i) {
        total += y[i] * (lse - s[i]);
        ysum += y[i];
      }
      if (grad) {
        for (std::size_t i = 0; i < c; ++i) {
          (*grad)(k, i) = std::exp(s[i] - lse) * ysum - y[i];
        }
      }
    }
  }
  return total / static_cast<double>(b);
}

void check_labels(const MlpModel& model, const DenseMatrix& logits, const DenseMatrix& labels) {
  if (labels.rows() != logits.rows() || labels.cols() != model.output_dim()) {
    throw InvalidArgument("labels are " + std::to_string(labels.rows()) + "x" +
                          std::to_string(labels.cols()) + ", expected " +
                          std::to_string(logits.rows()) + "x" +
                          std::to_string(model.output_dim()));
  }
}

}  // namespace

void MlpModel::validate() const {
  if (layers.empty()) throw InvalidArgument("MlpModel: no layers");
  if (activations.size() != layers.size()) {
    throw InvalidArgument("MlpModel: one activation per layer required");
  }
  for (std::size_t l = 1; l < layers.size(); ++l) {
    if (layers[l].cols() != layers[l - 1].rows() + 1) {
      throw InvalidArgument("MlpModel: layer " + std::to_string(l) +
                            " does not chain with its predecessor");
    }
  }
  if (activations.back() != Activation::kIdentity) {
    throw InvalidArgument("MlpModel: final layer must be linear");
  }
}

MlpModel MlpModel::init(const std::vector<std::size_t>& widths, Activation hidden, Rng& rng) {
  if (widths.size() < 2) throw InvalidArgument("MlpModel::init: need at least two widths");
  MlpModel model;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t n_in = widths[l];
    const std::size_t n_out = widths[l + 1];
    if (n_in == 0 || n_out == 0) throw InvalidArgument("MlpModel::init: zero width");
    const double bound = 1.0 / std::sqrt(static_cast<double>(n_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseMatrix w(n_out, n_in + 1);
    for (double& v : w.span()) v = dist(rng);
    model.layers.push_back(std::move(w));
    model.activations.push_back(l + 2 == widths.size() ? Activation::kIdentity : hidden);
  }
  return model;
}

ForwardCache mlp_forward(const MlpModel& model, const DenseMatrix& x) {
  model.validate();
  if (x.cols() != model.input_dim()) {
    throw InvalidArgument("mlp_forward: input width " + std::to_string(x.cols()) +
                          " but the first layer expects " +
                          std::to_string(model.input_dim()));
  }
  ForwardCache cache;
  DenseMatrix a = x;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    DenseMatrix in = with_bias_column(a);
    // s = a_bar W^T, row per sample.
    DenseMatrix s = matmul(in, model.layers[l].transpose());
    a = s;
    for (double& v : a.span()) v = activate(model.activations[l], v);
    cache.inputs.push_back(std::move(in));
    cache.preacts.push_back(std::move(s));
  }
  return cache;
}

BatchTrace mlp_backward(const MlpModel& model, ForwardCache cache, const DenseMatrix& labels,
                        LossKind loss) {
  const std::size_t n_layers = model.layers.size();
  if (cache.preacts.size() != n_layers || cache.inputs.size() != n_layers) {
    throw InvalidArgument("mlp_backward: cache does not match the model");
  }
  check_labels(model, cache.logits(), labels);
  const std::size_t b = labels.rows();
  const double inv_b = 1.0 / static_cast<double>(b);

  BatchTrace trace;
  trace.preact_grads.resize(n_layers);
  trace.grads.resize(n_layers);

  DenseMatrix g(b, model.output_dim());
  trace.loss = loss_and_grad(cache.logits(), labels, loss, &g);
  for (std::size_t l = n_layers; l-- > 0;) {
    DenseMatrix d = matmul_tn(g, cache.inputs[l]);
    d *= inv_b;
    trace.grads[l].d_theta = std::move(d);
    if (l > 0) {
      // Drop the bias column of W when pushing the gradient down.
      const DenseMatrix& w = model.layers[l];
      const std::size_t n_in = w.cols() - 1;
      DenseMatrix below(b, n_in);
      for (std::size_t k = 0; k < b; ++k) {
        for (std::size_t o = 0; o < w.rows(); ++o) {
          const double gk = g(k, o);
          if (gk == 0.0) continue;
          for (std::size_t i = 0; i < n_in; ++i) below(k, i) += gk * w(o, i);
        }
        for (std::size_t i = 0; i < n_in; ++i) {
          below(k, i) *= activate_grad(model.activations[l - 1], cache.preacts[l - 1](k, i));
        }
      }
      trace.preact_grads[l] = std::move(g);
      g = std::move(below);
    } else {
      trace.preact_grads[l] = std::move(g);
    }
  }
  trace.activations = std::move(cache.inputs);
  return trace;
}

double mlp_loss(const MlpModel& model, const DenseMatrix& x, const DenseMatrix& labels,
                LossKind loss) {
  const ForwardCache cache = mlp_forward(model, x);
  check_labels(model, cache.logits(), labels);
  return loss_and_grad(cache.logits(), labels, loss, nullptr);
}

double accuracy(const DenseMatrix& logits, const DenseMatrix& labels) {
  if (logits.rows() != labels.rows() || logits.cols() != labels.cols()) {
    throw InvalidArgument("accuracy: shape mismatch");
  }
  if (logits.rows() == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < logits.rows(); ++k) {
    auto s = logits.row(k);
    auto y = labels.row(k);
    const auto ps = std::max_element(s.begin(), s.end()) - s.begin();
    const auto py = std::max_element(y.begin(), y.end()) - y.begin();
    if (ps == py) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(logits.rows());
}

DenseMatrix sgd_step(const DenseMatrix& theta, const DenseMatrix& grad, double lr) {
  if (theta.rows() != grad.rows() || theta.cols() != grad.cols()) {
    throw InvalidArgument("sgd_step: shape mismatch");
  }
  DenseMatrix out = theta;
  auto o = out.span();
  auto d = grad.span();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= lr * d[i];
  return out;
}

AdamState AdamState::zeros_like(const DenseMatrix& theta) {
  return {DenseMatrix(theta.rows(), theta.cols()), DenseMatrix(theta.rows(), theta.cols()), 0};
}

DenseMatrix adam_step(AdamState& state, const DenseMatrix& theta, const DenseMatrix& grad,
                      double lr, double beta1, double beta2, double eps) {
  const auto same = [&](const DenseMatrix& m) {
    return m.rows() == theta.rows() && m.cols() == theta.cols();
  };
  if (!same(grad) || !same(state.m) || !same(state.v)) {
    throw InvalidArgument("adam_step: shape mismatch");
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  DenseMatrix out = theta;
  auto o = out.span();
  auto g = grad.span();
  auto m = state.m.span();
  auto v = state.v.span();
  for (std::size_t i = 0; i < o.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    const double mhat = m[i] / c1;
    const double vhat = v[i] / c2;
    o[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
  return out;
}

double outer_product_residual(const BatchTrace& trace) {
  double worst = 0.0;
  for (std::size_t l = 0; l < trace.grads.size(); ++l) {
    const DenseMatrix& a = trace.activations[l];
    const DenseMatrix& g = trace.preact_grads[l];
    const std::size_t b = a.rows();
    DenseMatrix sum(g.cols(), a.cols());
    for (std::size_t k = 0; k < b; ++k) {
      for (std::size_t o = 0; o < g.cols(); ++o) {
        for (std::size_t i = 0; i < a.cols(); ++i) sum(o, i) += g(k, o) * a(k, i);
      }
    }
    sum *= 1.0 / static_cast<double>(b);
    worst = std::max(worst, max_abs_diff(sum, trace.grads[l].d_theta));
  }
  return worst;
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kRelu:
      return "relu";
    case Activation::kTanh:
      return "tanh";
    case Activation::kIdentity:
      return "identity";
  }
  return "identity";
}

std::string_view to_string(LossKind l) {
  return l == LossKind::kMeanSquaredError ? "mean-squared-error" : "softmax-cross-entropy";
}

}  // namespace thermokfac
