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

#include "thermokfac/train.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <numeric>
#include <ostream>

#include "thermokfac/errors.hpp"
#include "thermokfac/random.hpp"

namespace thermokfac {

namespace {

// Hands out minibatch indices, reshuffling the training split every epoch.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::uint64_t seed)
      : order_(n), rng_(make_rng(seed, streams::kBatches)) {
    std::iota(order_.begin(), order_.end(), 0);
    std::shuffle(order_.begin(), order_.end(), rng_);
  }

  std::vector<std::size_t> next(std::size_t b) {
    std::vector<std::size_t> idx;
    idx.reserve(b);
    while (idx.size() < b) {
      if (pos_ == order_.size()) {
        std::shuffle(order_.begin(), order_.end(), rng_);
        pos_ = 0;
      }
      idx.push_back(order_[pos_++]);
    }
    return idx;
  }

 private:
  std::vector<std::size_t> order_;
  Rng rng_;
  std::size_t pos_ = 0;
};

double forward_backward_ops(const MlpModel& model, std::size_t b) {
  double ops = 0.0;
  for (const DenseMatrix& w : model.layers) {
    ops += 6.0 * static_cast<double>(b) * static_cast<double>(w.size());
  }
  return ops;
}

double kfac_host_ops(const MlpModel& model, std::size_t b, bool refresh) {
  double ops = 0.0;
  for (const DenseMatrix& w : model.layers) {
    const double o = static_cast<double>(w.rows());
    const double i = static_cast<double>(w.cols());
    if (refresh) ops += static_cast<double>(b) * (i * i + o * o) + 3.0 * (i * i + o * o);
    ops += 2.0 * o * o * i + 2.0 * o * i * i + 2.0 * o * i;
  }
  return ops;
}

double parameter_count(const MlpModel& model) {
  double p = 0.0;
  for (const DenseMatrix& w : model.layers) p += static_cast<double>(w.size());
  return p;
}

struct Evaluation {
  double loss;
  double accuracy;
};

Evaluation evaluate(const MlpModel& model, const Dataset& train_split, const Dataset& val,
                    LossKind loss) {
  const double l = mlp_loss(model, train_split.x, train_split.y, loss);
  const Dataset& acc_set = val.size() > 0 ? val : train_split;
  const ForwardCache cache = mlp_forward(model, acc_set.x);
  return {l, accuracy(cache.logits(), acc_set.y)};
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size == 0) throw InvalidArgument("train: batch_size must be >= 1");
  if (!std::isfinite(learning_rate)) throw InvalidArgument("train: learning_rate must be finite");
  if (!(digital_flops > 0.0)) throw InvalidArgument("train: digital_flops must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) ||
      !(adam_eps > 0.0)) {
    throw InvalidArgument("train: Adam needs beta1, beta2 in [0, 1) and eps > 0");
  }
  for (std::size_t h : hidden) {
    if (h == 0) throw InvalidArgument("train: hidden widths must be positive");
  }
  dataset.validate();
  if (optimizer == OptimizerKind::kKfac) {
    kfac.validate();
    if (kfac.backend != BackendKind::kExact) {
      solver.validate();
      hardware.validate();
    }
  }
}

TrainResult train(const TrainConfig& cfg) {
  cfg.validate();
  const DataSplit data = make_dataset(cfg.dataset, cfg.seed);

  std::vector<std::size_t> widths{cfg.dataset.n_features};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(cfg.dataset.n_classes);
  Rng init_rng = make_rng(cfg.seed, streams::kInit);

  TrainResult result;
  result.model = MlpModel::init(widths, cfg.activation, init_rng);
  MlpModel& model = result.model;

  const Evaluation start = evaluate(model, data.train, data.validation, cfg.loss);
  result.initial_loss = start.loss;
  result.initial_accuracy = start.accuracy;
  result.final_loss = start.loss;
  result.final_accuracy = start.accuracy;

  std::vector<AdamState> adam;
  std::unique_ptr<KfacOptimizer> kfac;
  if (cfg.optimizer == OptimizerKind::kAdam) {
    for (const DenseMatrix& w : model.layers) adam.push_back(AdamState::zeros_like(w));
  } else if (cfg.optimizer == OptimizerKind::kKfac) {
    KfacConfig kc = cfg.kfac;
    kc.learning_rate = cfg.learning_rate;
    SolverConfig sc = cfg.solver;
    sc.seed = derive_seed(cfg.seed, streams::kSolver);
    auto backend = make_backend(kc, sc, cfg.hardware);
    kfac = std::make_unique<KfacOptimizer>(kc, std::move(backend));
  }

  BatchSampler sampler(data.train.size(), cfg.seed);
  const double params = parameter_count(model);
  double digital_s = 0.0;
  result.series.reserve(cfg.steps);

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const Dataset batch = data.train.subset(sampler.next(cfg.batch_size));
    BatchTrace trace = mlp_backward(model, mlp_forward(model, batch.x), batch.y, cfg.loss);
    if (cfg.check_outer_product) {
      result.max_outer_product_residual =
          std::max(result.max_outer_product_residual, outer_product_residual(trace));
    }

    double ops = forward_backward_ops(model, cfg.batch_size);
    switch (cfg.optimizer) {
      case OptimizerKind::kSgd:
        for (std::size_t l = 0; l < model.layers.size(); ++l) {
          model.layers[l] = sgd_step(model.layers[l], trace.grads[l].d_theta, cfg.learning_rate);
        }
        ops += 2.0 * params;
        break;
      case OptimizerKind::kAdam:
        for (std::size_t l = 0; l < model.layers.size(); ++l) {
          model.layers[l] = adam_step(adam[l], model.layers[l], trace.grads[l].d_theta,
                                      cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
                                      cfg.adam_eps);
        }
        ops += 10.0 * params;
        break;
      case OptimizerKind::kKfac: {
        const bool refresh = kfac->refresh_due();
        std::vector<KroneckerFactorPair> fresh;
        if (refresh) {
          for (std::size_t l = 0; l < model.layers.size(); ++l) {
            fresh.push_back(compute_factors_mlp(trace.activations[l], trace.preact_grads[l]));
          }
        }
        const double host_before = kfac->backend().digital_ops();
        try {
          model.layers = kfac->step(model.layers, fresh, trace.grads);
        } catch (const std::runtime_error& e) {
          throw TrainingError(step + 1, e.what());
        }
        ops += kfac_host_ops(model, cfg.batch_size, refresh) +
               (kfac->backend().digital_ops() - host_before);
        break;
      }
    }
    digital_s += ops / cfg.digital_flops;

    const Evaluation ev = evaluate(model, data.train, data.validation, cfg.loss);
    MetricsRecord rec;
    rec.step = step + 1;
    rec.loss = ev.loss;
    rec.accuracy = ev.accuracy;
    rec.digital_time_s = digital_s;
    rec.analog_time_s = kfac ? kfac->backend().analog_time() : 0.0;
    rec.total_time_s = rec.digital_time_s + rec.analog_time_s;
    if (!std::isfinite(rec.loss)) throw TrainingError(step + 1, "loss diverged");
    result.series.push_back(rec);
    result.final_loss = ev.loss;
    result.final_accuracy = ev.accuracy;
  }
  return result;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& series) {
  out << kMetricsHeader << '\n';
  for (const MetricsRecord& r : series) {
    out << r.step << ',' << format_double(r.loss) << ',' << format_double(r.accuracy) << ','
        << format_double(r.digital_time_s) << ',' << format_double(r.analog_time_s) << ','
        << format_double(r.total_time_s) << '\n';
  }
}

std::string_view to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kSgd:
      return "sgd";
    case OptimizerKind::kAdam:
      return "adam";
    case OptimizerKind::kKfac:
      return "kfac";
  }
  return "kfac";
}

}  // namespace thermokfac
