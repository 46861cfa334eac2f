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

// Multilayer perceptron with hand-written backpropagation.
//
// Layer l maps a_{l-1} to a_l = phi(W_l [a_{l-1}; 1]); the bias sits in the
// last column of the expanded weight matrix W_l (n_out x (n_in + 1)).
// Backprop keeps the quantities K-FAC consumes: the bias-augmented inputs
// and the per-sample gradients with respect to each pre-activation.

#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "thermokfac/kfac.hpp"
#include "thermokfac/matrix.hpp"
#include "thermokfac/random.hpp"

namespace thermokfac {

enum class Activation { kRelu, kTanh, kIdentity };
enum class LossKind { kSoftmaxCrossEntropy, kMeanSquaredError };

struct MlpModel {
  std::vector<DenseMatrix> layers;
  std::vector<Activation> activations;

  std::size_t input_dim() const { return layers.front().cols() - 1; }
  std::size_t output_dim() const { return layers.back().rows(); }

  /// Throws InvalidArgument unless layers chain and the last one is linear.
  void validate() const;

  /// widths = {n_0, ..., n_L}; hidden layers use `hidden`, the last layer is
  /// linear. Entries drawn uniformly from +-1/sqrt(n_in).
  static MlpModel init(const std::vector<std::size_t>& widths, Activation hidden, Rng& rng);
};

struct ForwardCache {
  /// inputs[l]: b x (n_in + 1), the layer's input with the constant 1 column.
  std::vector<DenseMatrix> inputs;
  /// preacts[l]: b x n_out.
  std::vector<DenseMatrix> preacts;
  const DenseMatrix& logits() const { return preacts.back(); }
};

struct BatchTrace {
  std::vector<DenseMatrix> activations;   // bias-augmented layer inputs
  std::vector<DenseMatrix> preact_grads;  // per-sample dloss_k / ds_l, b x n_out
  std::vector<LayerGradient> grads;       // gradient of the mean loss
  double loss = 0.0;
};

ForwardCache mlp_forward(const MlpModel& model, const DenseMatrix& x);

/// `labels` is b x n_out (one-hot rows for classification).
BatchTrace mlp_backward(const MlpModel& model, ForwardCache cache,
                        const DenseMatrix& labels, LossKind loss);

/// Mean loss over the batch.
double mlp_loss(const MlpModel& model, const DenseMatrix& x, const DenseMatrix& labels,
                LossKind loss);

/// Fraction of rows whose logit argmax matches the label argmax.
double accuracy(const DenseMatrix& logits, const DenseMatrix& labels);

DenseMatrix sgd_step(const DenseMatrix& theta, const DenseMatrix& grad, double lr);

struct AdamState {
  DenseMatrix m;
  DenseMatrix v;
  std::size_t t = 0;

  static AdamState zeros_like(const DenseMatrix& theta);
};

/// Bias-corrected Adam; advances `state` and returns the new parameters.
DenseMatrix adam_step(AdamState& state, const DenseMatrix& theta, const DenseMatrix& grad,
                      double lr, double beta1 = 0.9, double beta2 = 0.999,
                      double eps = 1e-8);

/// max |DTheta - (1/b) sum_k g_k a_k^T| over every layer of a trace,
/// with the sum evaluated one outer product at a time.
double outer_product_residual(const BatchTrace& trace);

std::string_view to_string(Activation a);
std::string_view to_string(LossKind l);

}  // namespace thermokfac
