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

#include "thermokfac/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

#include "thermokfac/cost_model.hpp"
#include "thermokfac/errors.hpp"

namespace thermokfac {

namespace {

[[noreturn]] void fail(const std::string& origin, const YAML::Node& node,
                       const std::string& msg) {
  const YAML::Mark mark = node.Mark();
  std::string where = origin;
  if (mark.line >= 0) where += ":" + std::to_string(mark.line + 1);
  throw ConfigError(where + ": " + msg);
}

// Reads one mapping node and remembers which keys were consumed, so that
// leftovers can be reported as unknown.
class Section {
 public:
  Section(const std::string& origin, YAML::Node node, std::string path)
      : origin_(origin), node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) {
      fail(origin_, node_, "'" + path_ + "' must be a mapping");
    }
  }

  bool present() const { return node_ && node_.IsMap(); }
  const YAML::Node& node() const { return node_; }
  const std::string& origin() const { return origin_; }
  std::string key_path(const char* key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  YAML::Node take(const char* key) {
    seen_.insert(key);
    if (!present()) return YAML::Node();
    return node_[key];
  }

  Section child(const char* key) { return Section(origin_, take(key), key_path(key)); }

  template <class T>
  bool get(const char* key, T& out) {
    YAML::Node v = take(key);
    if (!v || v.IsNull()) return false;
    out = convert<T>(v, key_path(key));
    return true;
  }

  template <class T>
  void require(const char* key, T& out) {
    if (!get(key, out)) {
      fail(origin_, node_, "missing required key '" + key_path(key) + "'");
    }
  }

  template <class T>
  bool get_list(const char* key, std::vector<T>& out) {
    YAML::Node v = take(key);
    if (!v || v.IsNull()) return false;
    if (!v.IsSequence()) fail(origin_, v, "'" + key_path(key) + "' must be a list");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(convert<T>(v[i], key_path(key) + "[" + std::to_string(i) + "]"));
    }
    return true;
  }

  void finish() const {
    if (!present()) return;
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      const std::string k = it->first.as<std::string>();
      if (!seen_.count(k)) fail(origin_, it->first, "unknown key '" + key_path(k.c_str()) + "'");
    }
  }

  template <class T>
  T convert(const YAML::Node& v, const std::string& what) const {
    if (!v.IsScalar()) fail(origin_, v, "'" + what + "' must be a scalar");
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, unsigned> ||
                    std::is_same_v<T, std::uint64_t>) {
        const long long x = v.as<long long>();
        if (x < 0) fail(origin_, v, "'" + what + "' must be nonnegative");
        return static_cast<T>(x);
      } else {
        return v.as<T>();
      }
    } catch (const YAML::BadConversion&) {
      fail(origin_, v, "'" + what + "' has an invalid value '" + v.Scalar() + "'");
    }
  }

  // Runs a validator and rethrows its complaint at this section's line.
  template <class F>
  void check(F&& f) const {
    try {
      f();
    } catch (const InvalidArgument& e) {
      fail(origin_, node_, std::string("invalid '") + (path_.empty() ? "config" : path_) +
                               "': " + e.what());
    }
  }

 private:
  std::string origin_;
  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class E>
E parse_enum(const Section& s, const YAML::Node& v, const std::string& what,
             std::initializer_list<std::pair<const char*, E>> options) {
  const std::string text = s.convert<std::string>(v, what);
  std::string allowed;
  for (const auto& [name, value] : options) {
    if (text == name) return value;
    allowed += allowed.empty() ? name : std::string(", ") + name;
  }
  fail(s.origin(), v, "'" + what + "' must be one of {" + allowed + "}, got '" + text + "'");
}

template <class E>
void get_enum(Section& s, const char* key, E& out,
              std::initializer_list<std::pair<const char*, E>> options) {
  YAML::Node v = s.take(key);
  if (!v || v.IsNull()) return;
  out = parse_enum(s, v, s.key_path(key), options);
}

std::optional<QuantSpec> parse_quant(Section s) {
  if (!s.present()) return std::nullopt;
  QuantSpec q;
  s.require("bits", q.bits);
  get_enum(s, "kind", q.kind,
           {{"uniform", QuantKind::kUniform}, {"conservative-spd", QuantKind::kConservativeSpd}});
  get_enum(s, "scale_policy", q.scale_policy,
           {{"max-abs-symmetric", ScalePolicy::kMaxAbsSymmetric},
            {"fixed-range", ScalePolicy::kFixedRange}});
  std::vector<double> range;
  if (s.get_list("range", range)) {
    if (range.size() != 2) fail(s.origin(), s.node(), "'range' must be [lo, hi]");
    q.range_lo = range[0];
    q.range_hi = range[1];
  }
  s.finish();
  s.check([&] { q.validate(); });
  return q;
}

void parse_train(Section s, TrainConfig& t) {
  get_enum(s, "optimizer", t.optimizer,
           {{"sgd", OptimizerKind::kSgd}, {"adam", OptimizerKind::kAdam},
            {"kfac", OptimizerKind::kKfac}});
  s.get("learning_rate", t.learning_rate);
  s.get("batch_size", t.batch_size);
  s.get("steps", t.steps);
  get_enum(s, "loss", t.loss,
           {{"softmax-cross-entropy", LossKind::kSoftmaxCrossEntropy},
            {"mean-squared-error", LossKind::kMeanSquaredError}});
  s.get_list("hidden", t.hidden);
  get_enum(s, "activation", t.activation,
           {{"relu", Activation::kRelu}, {"tanh", Activation::kTanh},
            {"identity", Activation::kIdentity}});
  s.get("digital_flops", t.digital_flops);
  s.get("check_outer_product", t.check_outer_product);

  Section adam = s.child("adam");
  adam.get("beta1", t.adam_beta1);
  adam.get("beta2", t.adam_beta2);
  adam.get("eps", t.adam_eps);
  adam.finish();

  Section d = s.child("dataset");
  if (!d.present()) fail(s.origin(), s.node(), "missing required section 'train.dataset'");
  d.require("generator", t.dataset.generator);
  d.get("n_samples", t.dataset.n_samples);
  d.get("n_features", t.dataset.n_features);
  d.get("n_classes", t.dataset.n_classes);
  d.get("noise", t.dataset.noise);
  d.get("separation", t.dataset.separation);
  d.get("validation_fraction", t.dataset.validation_fraction);
  d.finish();
  d.check([&] { t.dataset.validate(); });
  s.finish();
}

void parse_kfac(Section s, KfacConfig& k) {
  s.get("damping", k.damping);
  s.get("ema_decay_a", k.ema_decay_a);
  s.get("ema_decay_g", k.ema_decay_g);
  get_enum(s, "method", k.method,
           {{"inversion", KfacMethod::kInversion},
            {"linear-systems", KfacMethod::kLinearSystems}});
  get_enum(s, "backend", k.backend,
           {{"exact", BackendKind::kExact},
            {"thermodynamic", BackendKind::kThermodynamic},
            {"thermodynamic-quantized", BackendKind::kThermodynamicQuantized}});
  s.get("update_interval", k.update_interval);
  get_enum(s, "g_normalization", k.g_normalization,
           {{"per-batch", GNormalization::kPerBatch},
            {"unnormalized", GNormalization::kUnnormalized}});
  if (auto q = parse_quant(s.child("input_quant"))) k.input_quant = q;
  if (auto q = parse_quant(s.child("output_quant"))) k.output_quant = q;
  s.finish();
  s.check([&] { k.validate(); });
}

void parse_solver(Section s, SolverConfig& c) {
  double dt = 0.0;
  if (s.get("dt", dt)) c.dt = dt;
  s.get("inverse_temperature", c.inverse_temperature);
  s.get("burn_in_time", c.burn_in_time);
  s.get("n_samples", c.n_samples);
  s.get("sample_spacing", c.sample_spacing);
  s.finish();
  s.check([&] { c.validate(); });
}

void parse_hardware(Section s, HardwareModel& h) {
  double r = h.resistance, c = h.capacitance;
  const bool has_r = s.get("resistance", r);
  const bool has_c = s.get("capacitance", c);
  if (has_r || has_c) {
    h.resistance = r;
    h.capacitance = c;
    h.rc_time = r * c;
  }
  s.get("rc_time", h.rc_time);
  s.get("transfer_bandwidth", h.transfer_bandwidth);
  s.get("io_bits", h.io_bits);
  s.get("parallel_solves", h.parallel_solves);
  s.get("settle_time", h.settle_time);
  s.finish();
  s.check([&] { h.validate(); });
}

TrainConfig parse_train_bundle(const std::string& origin, const YAML::Node& root) {
  TrainConfig t;
  parse_train(Section(origin, root["train"], "train"), t);
  parse_kfac(Section(origin, root["kfac"], "kfac"), t.kfac);
  parse_solver(Section(origin, root["solver"], "solver"), t.solver);
  parse_hardware(Section(origin, root["hardware"], "hardware"), t.hardware);
  Section(origin, root, "").check([&] { t.validate(); });
  return t;
}

void deep_merge(YAML::Node base, const YAML::Node& over) {
  for (auto it = over.begin(); it != over.end(); ++it) {
    const std::string key = it->first.as<std::string>();
    if (it->second.IsMap() && base[key] && base[key].IsMap()) {
      deep_merge(base[key], it->second);
    } else {
      base[key] = it->second;
    }
  }
}

void parse_solve_bench(Section s, SolveBenchConfig& c) {
  s.get_list("sizes", c.sizes);
  s.get_list("conditions", c.conditions);
  s.get_list("sample_counts", c.sample_counts);
  s.get_list("dt_scales", c.dt_scales);
  s.get("systems", c.systems);
  s.get("spacing_steps", c.spacing_steps);
  s.finish();
  s.check([&] {
    for (std::size_t n : c.sizes) {
      if (n == 0) throw InvalidArgument("sizes must be positive");
    }
    for (double k : c.conditions) {
      if (!(k >= 1.0)) throw InvalidArgument("conditions must be >= 1");
    }
    for (double d : c.dt_scales) {
      if (!(d > 0.0)) throw InvalidArgument("dt_scales must be positive");
    }
    if (c.systems == 0) throw InvalidArgument("systems must be >= 1");
  });
}

void parse_quantize_bench(Section s, QuantizeBenchConfig& c) {
  s.get("matrices", c.matrices);
  s.get("min_dim", c.min_dim);
  s.get("max_dim", c.max_dim);
  s.get_list("bits", c.bits);
  YAML::Node kinds = s.take("kinds");
  if (kinds && !kinds.IsNull()) {
    if (!kinds.IsSequence()) fail(s.origin(), kinds, "'quantize_bench.kinds' must be a list");
    c.kinds.clear();
    for (std::size_t i = 0; i < kinds.size(); ++i) {
      c.kinds.push_back(parse_enum<QuantKind>(s, kinds[i], "quantize_bench.kinds",
                                   {{"uniform", QuantKind::kUniform},
                                    {"conservative-spd", QuantKind::kConservativeSpd}}));
    }
  }
  s.get("max_condition", c.max_condition);
  s.get("rank_deficient_fraction", c.rank_deficient_fraction);
  s.finish();
  s.check([&] {
    if (c.min_dim == 0 || c.max_dim < c.min_dim) {
      throw InvalidArgument("need 1 <= min_dim <= max_dim");
    }
    for (unsigned b : c.bits) {
      QuantSpec q;
      q.bits = b;
      q.validate();
    }
    if (!(c.max_condition >= 1.0)) throw InvalidArgument("max_condition must be >= 1");
    if (!(c.rank_deficient_fraction >= 0.0 && c.rank_deficient_fraction <= 1.0)) {
      throw InvalidArgument("rank_deficient_fraction must lie in [0, 1]");
    }
  });
}

void parse_estimate(Section s, EstimateConfig& c) {
  s.get_list("optimizers", c.optimizers);
  Section grid = s.child("grid");
  grid.get_list("n", c.n);
  grid.get_list("b", c.b);
  grid.get_list("r", c.r);
  grid.get_list("c", c.c);
  grid.get_list("kappa", c.kappa);
  grid.finish();
  s.get_list("exponent_sweep", c.exponent_sweep);
  YAML::Node am = s.take("amdahl");
  if (am && !am.IsNull()) {
    if (!am.IsSequence()) fail(s.origin(), am, "'estimate.amdahl' must be a list");
    for (std::size_t i = 0; i < am.size(); ++i) {
      Section p(s.origin(), am[i], "estimate.amdahl[" + std::to_string(i) + "]");
      AmdahlPoint pt;
      p.require("fraction", pt.fraction);
      p.require("speedup", pt.speedup);
      p.finish();
      p.check([&] { amdahl_speedup(pt.fraction, pt.speedup); });
      c.amdahl.push_back(pt);
    }
  }
  s.finish();
  s.check([&] {
    for (const std::string& tag : c.optimizers) {
      ComplexityInput in;
      in.optimizer = tag;
      in.validate();
    }
    for (const auto* v : {&c.n, &c.b, &c.r, &c.c, &c.kappa, &c.exponent_sweep}) {
      for (double x : *v) {
        if (!(x >= 1.0)) throw InvalidArgument("grid values must be >= 1");
      }
    }
    if (!c.exponent_sweep.empty() && (c.b.empty() || c.r.empty() || c.c.empty() ||
                                      c.kappa.empty())) {
      throw InvalidArgument("exponent_sweep needs non-empty b, r, c and kappa");
    }
  });
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(origin + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  if (!root.IsMap()) fail(origin, root, "top level must be a mapping");

  Section top(origin, root, "");
  for (const char* k : {"train", "kfac", "solver", "hardware"}) top.take(k);

  ExperimentConfig cfg;
  Section exp = top.child("experiment");
  exp.get("name", cfg.name);
  exp.get("output_dir", cfg.output_dir);
  exp.get("repetitions", cfg.repetitions);
  exp.get("seed", cfg.seed);
  YAML::Node variants = exp.take("variants");
  exp.finish();
  if (cfg.repetitions == 0) fail(origin, exp.node(), "'experiment.repetitions' must be >= 1");

  if (root["train"]) {
    if (!variants || variants.IsNull()) {
      cfg.variants.push_back({"base", parse_train_bundle(origin, root)});
    } else {
      if (!variants.IsSequence()) fail(origin, variants, "'experiment.variants' must be a list");
      std::set<std::string> names;
      for (std::size_t i = 0; i < variants.size(); ++i) {
        Section v(origin, variants[i], "experiment.variants[" + std::to_string(i) + "]");
        Variant out;
        v.require("name", out.name);
        if (!names.insert(out.name).second) {
          fail(origin, variants[i], "duplicate variant name '" + out.name + "'");
        }
        if (out.name.empty() || out.name.find_first_of("/\\") != std::string::npos) {
          fail(origin, variants[i], "variant names must be non-empty without path separators");
        }
        YAML::Node merged = YAML::Clone(root);
        for (const char* k : {"train", "kfac", "solver", "hardware"}) {
          YAML::Node over = v.take(k);
          if (!over || over.IsNull()) continue;
          if (!over.IsMap()) fail(origin, over, std::string("variant section '") + k +
                                                    "' must be a mapping");
          if (merged[k] && merged[k].IsMap()) {
            deep_merge(merged[k], over);
          } else {
            merged[k] = over;
          }
        }
        v.finish();
        out.train = parse_train_bundle(origin, merged);
        cfg.variants.push_back(std::move(out));
      }
    }
  } else {
    if (variants && !variants.IsNull()) {
      fail(origin, variants, "'experiment.variants' needs a 'train' section");
    }
    if (root["kfac"]) fail(origin, root["kfac"], "section 'kfac' needs a 'train' section");
  }
  parse_solver(Section(origin, root["solver"], "solver"), cfg.solver);
  parse_hardware(Section(origin, root["hardware"], "hardware"), cfg.hardware);

  parse_solve_bench(top.child("solve_bench"), cfg.solve_bench);
  parse_quantize_bench(top.child("quantize_bench"), cfg.quantize_bench);
  parse_estimate(top.child("estimate"), cfg.estimate);
  top.finish();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace thermokfac
