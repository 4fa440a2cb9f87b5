#pragma once

// Dense feed-forward networks: construction, batched forward pass with
// activation caching, softmax cross-entropy backpropagation, SGD with
// momentum, and structural removal of hidden units.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lrpprune/datagen.hpp"
#include "lrpprune/error.hpp"
#include "lrpprune/rng.hpp"
#include "lrpprune/types.hpp"

namespace lrpprune {

enum class LayerKind { dense, relu, dropout };

struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
  double dropout_p = 0.0;

  static LayerSpec dense(std::size_t in, std::size_t out) { return {LayerKind::dense, in, out, 0.0}; }
  static LayerSpec relu(std::size_t width) { return {LayerKind::relu, width, width, 0.0}; }
  static LayerSpec dropout(std::size_t width, double p) { return {LayerKind::dropout, width, width, p}; }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// A hidden neuron: output `neuron_index` of dense layer `layer_index`.
///
/// Neuron indices refer to the layer as originally built and do not shift
/// when other units are removed.
struct UnitId {
  std::size_t layer_index = 0;
  std::size_t neuron_index = 0;

  friend auto operator<=>(const UnitId&, const UnitId&) = default;
};

enum class Mode { train, eval };

/// Parameters of one dense layer. Row i of `weights` holds the incoming
/// weights of output neuron i.
struct DenseParams {
  Matrix weights;                      // fan_out x fan_in
  Vector bias;                         // fan_out
  std::vector<std::size_t> neuron_ids; // original index of each row, ascending
};

class Network {
 public:
  Network() = default;

  Network(std::vector<LayerSpec> layers, std::vector<DenseParams> dense)
      : layers_(std::move(layers)), dense_(std::move(dense)) {
    validate();
  }

  const std::vector<LayerSpec>& layers() const { return layers_; }
  std::size_t num_dense() const { return dense_.size(); }
  std::size_t num_hidden() const { return dense_.empty() ? 0 : dense_.size() - 1; }
  const DenseParams& dense(std::size_t d) const { return dense_.at(d); }

  /// Mutable parameter access for optimizers; shapes must not change.
  Matrix& weights(std::size_t d) { return dense_.at(d).weights; }
  Vector& bias(std::size_t d) { return dense_.at(d).bias; }

  Index input_dim() const { return static_cast<Index>(layers_.front().fan_in); }
  Index output_dim() const { return static_cast<Index>(layers_.back().fan_out); }
  Index width(std::size_t d) const { return dense_.at(d).weights.rows(); }

  Mode mode() const { return mode_; }
  void set_mode(Mode m) { mode_ = m; }

  /// Index into layers() of the d-th dense layer.
  std::size_t dense_step(std::size_t d) const { return dense_steps_.at(d); }

  /// Every prunable hidden unit, ordered by (layer, neuron).
  std::vector<UnitId> unit_registry() const {
    std::vector<UnitId> out;
    for (std::size_t d = 0; d + 1 < dense_.size(); ++d)
      for (auto id : dense_[d].neuron_ids) out.push_back({d, id});
    return out;
  }

  std::size_t registry_size() const {
    std::size_t n = 0;
    for (std::size_t d = 0; d + 1 < dense_.size(); ++d) n += dense_[d].neuron_ids.size();
    return n;
  }

  /// Row of a unit inside its dense layer, if the unit is present.
  std::optional<Index> row_of(const UnitId& u) const {
    if (u.layer_index + 1 >= dense_.size()) return std::nullopt;
    const auto& ids = dense_[u.layer_index].neuron_ids;
    const auto it = std::lower_bound(ids.begin(), ids.end(), u.neuron_index);
    if (it == ids.end() || *it != u.neuron_index) return std::nullopt;
    return static_cast<Index>(it - ids.begin());
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : dense_) n += static_cast<std::size_t>(p.weights.size() + p.bias.size());
    return n;
  }

  /// Removes the given rows from hidden dense layer d together with the
  /// matching columns of layer d+1. Used by remove_units().
  void erase_rows(std::size_t d, const std::vector<Index>& keep) {
    auto& cur = dense_.at(d);
    auto& next = dense_.at(d + 1);
    cur.weights = Matrix(cur.weights(keep, Eigen::all));
    cur.bias = Vector(cur.bias(keep));
    std::vector<std::size_t> ids;
    ids.reserve(keep.size());
    for (auto r : keep) ids.push_back(cur.neuron_ids[static_cast<std::size_t>(r)]);
    cur.neuron_ids = std::move(ids);
    next.weights = Matrix(next.weights(Eigen::all, keep));
    const auto w = keep.size();
    for (std::size_t s = dense_steps_[d]; s < dense_steps_[d + 1]; ++s) {
      if (s == dense_steps_[d]) {
        layers_[s].fan_out = w;
      } else {
        layers_[s].fan_in = w;
        layers_[s].fan_out = w;
      }
    }
    layers_[dense_steps_[d + 1]].fan_in = w;
    validate();
  }

  void validate() {
    if (layers_.empty()) throw ConfigError("network has no layers");
    if (layers_.back().kind != LayerKind::dense) throw ConfigError("last layer must be dense");
    dense_steps_.clear();
    for (std::size_t s = 0; s < layers_.size(); ++s) {
      const auto& l = layers_[s];
      if (l.fan_in == 0 || l.fan_out == 0) throw ConfigError("layer " + std::to_string(s) + " has zero width");
      if (s > 0 && layers_[s - 1].fan_out != l.fan_in)
        throw ConfigError("layer " + std::to_string(s) + " fan_in does not match previous fan_out");
      if (l.kind != LayerKind::dense && l.fan_in != l.fan_out)
        throw ConfigError("activation layer " + std::to_string(s) + " must preserve width");
      if (l.kind == LayerKind::dropout && !(l.dropout_p >= 0.0 && l.dropout_p <= 1.0))
        throw ConfigError("dropout probability must lie in [0, 1]");
      if (l.kind == LayerKind::dense) dense_steps_.push_back(s);
    }
    if (dense_steps_.size() != dense_.size())
      throw ConfigError("expected " + std::to_string(dense_steps_.size()) + " dense parameter sets, got " +
                        std::to_string(dense_.size()));
    for (std::size_t d = 0; d < dense_.size(); ++d) {
      const auto& spec = layers_[dense_steps_[d]];
      auto& p = dense_[d];
      if (p.weights.rows() != static_cast<Index>(spec.fan_out) ||
          p.weights.cols() != static_cast<Index>(spec.fan_in) || p.bias.size() != p.weights.rows())
        throw ShapeError("dense layer " + std::to_string(d) + " parameters do not match its spec");
      if (p.neuron_ids.empty()) {
        p.neuron_ids.resize(spec.fan_out);
        std::iota(p.neuron_ids.begin(), p.neuron_ids.end(), std::size_t{0});
      }
      if (p.neuron_ids.size() != spec.fan_out || !std::is_sorted(p.neuron_ids.begin(), p.neuron_ids.end()) ||
          std::adjacent_find(p.neuron_ids.begin(), p.neuron_ids.end()) != p.neuron_ids.end())
        throw ShapeError("dense layer " + std::to_string(d) + " has inconsistent neuron ids");
    }
  }

  friend bool operator==(const Network& a, const Network& b) {
    if (a.layers_ != b.layers_ || a.dense_.size() != b.dense_.size() || a.mode_ != b.mode_) return false;
    for (std::size_t d = 0; d < a.dense_.size(); ++d) {
      const auto &p = a.dense_[d], &q = b.dense_[d];
      if (p.neuron_ids != q.neuron_ids || p.weights != q.weights || p.bias != q.bias) return false;
    }
    return true;
  }

 private:
  std::vector<LayerSpec> layers_;
  std::vector<DenseParams> dense_;
  std::vector<std::size_t> dense_steps_;
  Mode mode_ = Mode::eval;
};

/// Builds a network from a layer chain with He-uniform weights
/// U(-sqrt(6/fan_in), sqrt(6/fan_in)) and biases U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
inline Network build_network(const std::vector<LayerSpec>& layers, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<DenseParams> dense;
  for (const auto& l : layers) {
    if (l.kind != LayerKind::dense) continue;
    if (l.fan_in == 0 || l.fan_out == 0) throw ConfigError("dense layer with zero width");
    const double limit = std::sqrt(6.0 / static_cast<double>(l.fan_in));
    std::uniform_real_distribution<double> u(-limit, limit);
    DenseParams p;
    p.weights.resize(static_cast<Index>(l.fan_out), static_cast<Index>(l.fan_in));
    for (Index r = 0; r < p.weights.rows(); ++r)
      for (Index c = 0; c < p.weights.cols(); ++c) p.weights(r, c) = u(rng);
    std::uniform_real_distribution<double> ub(-1.0 / std::sqrt(static_cast<double>(l.fan_in)),
                                              1.0 / std::sqrt(static_cast<double>(l.fan_in)));
    p.bias.resize(p.weights.rows());
    for (Index r = 0; r < p.bias.size(); ++r) p.bias(r) = ub(rng);
    dense.push_back(std::move(p));
  }
  return Network(layers, std::move(dense));
}

/// Dense(w) -> ReLU -> Dropout(0.5) -> Dense(w) -> ReLU -> Dense(w) -> ReLU -> Dense(k)
/// on 2-D inputs.
inline Network build_toy_network(int num_classes, std::size_t hidden_width, std::uint64_t seed) {
  if (num_classes < 2) throw ConfigError("toy network needs at least 2 classes");
  if (hidden_width < 1) throw ConfigError("toy network needs hidden_width >= 1");
  const auto w = hidden_width;
  const auto k = static_cast<std::size_t>(num_classes);
  return build_network({LayerSpec::dense(2, w), LayerSpec::relu(w), LayerSpec::dropout(w, 0.5),
                        LayerSpec::dense(w, w), LayerSpec::relu(w), LayerSpec::dense(w, w),
                        LayerSpec::relu(w), LayerSpec::dense(w, k)},
                       seed);
}

/// Per-step records of one batched forward pass.
///
/// outputs[s] is the output of layers()[s] for every sample (one row per
/// sample); the input of step s is outputs[s-1], or `input` for s = 0.
struct ActivationTrace {
  Mode mode = Mode::eval;
  std::vector<std::size_t> sample_ids;
  Matrix input;
  std::vector<Matrix> outputs;
  std::vector<Matrix> dropout_masks;  // empty matrix unless a train-mode dropout step
  std::vector<std::size_t> dense_steps;

  Index batch_size() const { return input.rows(); }
  const Matrix& layer_input(std::size_t step) const { return step == 0 ? input : outputs.at(step - 1); }
  const Matrix& logits() const { return outputs.back(); }

  /// Pre-activation of dense layer d.
  const Matrix& pre_activation(std::size_t d) const { return outputs.at(dense_steps.at(d)); }

  /// Activation of hidden dense layer d as consumed by dense layer d+1.
  const Matrix& post_activation(std::size_t d) const { return layer_input(dense_steps.at(d + 1)); }
};

struct ForwardResult {
  Matrix logits;
  ActivationTrace trace;
};

namespace detail {

inline void check_input(const Network& net, const Matrix& inputs) {
  if (inputs.cols() != net.input_dim())
    throw ShapeError("input has " + std::to_string(inputs.cols()) + " features, network expects " +
                     std::to_string(net.input_dim()));
}

inline Matrix affine(const Matrix& in, const DenseParams& p) {
  Matrix z(in.rows(), p.weights.rows());
  z.noalias() = in * p.weights.transpose();
  z.rowwise() += p.bias.transpose();
  return z;
}

}  // namespace detail

/// Batched forward pass recording every layer's output.
///
/// Train mode applies inverted dropout (keep with probability 1-p, scale by
/// 1/(1-p)) and requires `dropout_rng`; eval mode is deterministic.
inline ForwardResult forward(const Network& net, const Matrix& inputs, Mode mode,
                             Rng* dropout_rng = nullptr) {
  detail::check_input(net, inputs);
  ActivationTrace tr;
  tr.mode = mode;
  tr.input = inputs;
  tr.sample_ids.resize(static_cast<std::size_t>(inputs.rows()));
  std::iota(tr.sample_ids.begin(), tr.sample_ids.end(), std::size_t{0});
  const auto& layers = net.layers();
  tr.outputs.resize(layers.size());
  tr.dropout_masks.resize(layers.size());
  std::size_t d = 0;
  for (std::size_t s = 0; s < layers.size(); ++s) {
    const Matrix& in = tr.layer_input(s);
    switch (layers[s].kind) {
      case LayerKind::dense:
        tr.outputs[s] = detail::affine(in, net.dense(d++));
        tr.dense_steps.push_back(s);
        break;
      case LayerKind::relu:
        tr.outputs[s] = in.cwiseMax(0.0);
        break;
      case LayerKind::dropout: {
        const double p = layers[s].dropout_p;
        if (mode == Mode::train && p > 0.0) {
          if (dropout_rng == nullptr) throw ConfigError("train-mode forward needs a dropout generator");
          Matrix mask(in.rows(), in.cols());
          if (p >= 1.0) {
            mask.setZero();
          } else {
            std::bernoulli_distribution keep(1.0 - p);
            const double scale = 1.0 / (1.0 - p);
            for (Index c = 0; c < mask.cols(); ++c)
              for (Index r = 0; r < mask.rows(); ++r) mask(r, c) = keep(*dropout_rng) ? scale : 0.0;
          }
          tr.outputs[s] = in.cwiseProduct(mask);
          tr.dropout_masks[s] = std::move(mask);
        } else {
          tr.outputs[s] = in;
        }
        break;
      }
    }
  }
  ForwardResult out;
  out.logits = tr.outputs.back();
  out.trace = std::move(tr);
  return out;
}

/// Forward pass in the network's own mode.
inline ForwardResult forward(const Network& net, const Matrix& inputs, Rng* dropout_rng = nullptr) {
  return forward(net, inputs, net.mode(), dropout_rng);
}

/// Single-sample forward pass.
inline std::pair<Vector, ActivationTrace> forward(const Network& net, const Vector& input,
                                                  Rng* dropout_rng = nullptr) {
  Matrix x = input.transpose();
  auto r = forward(net, x, net.mode(), dropout_rng);
  return {r.logits.row(0).transpose(), std::move(r.trace)};
}

/// Eval-mode logits without keeping a trace; processes the batch in chunks.
inline Matrix predict_logits(const Network& net, const Matrix& inputs) {
  detail::check_input(net, inputs);
  constexpr Index chunk = 1024;
  Matrix out(inputs.rows(), net.output_dim());
  for (Index start = 0; start < inputs.rows(); start += chunk) {
    const Index len = std::min(chunk, inputs.rows() - start);
    Matrix cur = inputs.middleRows(start, len);
    std::size_t d = 0;
    for (const auto& l : net.layers()) {
      if (l.kind == LayerKind::dense)
        cur = detail::affine(cur, net.dense(d++));
      else if (l.kind == LayerKind::relu)
        cur = cur.cwiseMax(0.0);
    }
    out.middleRows(start, len) = cur;
  }
  return out;
}

/// Per-sample softmax cross-entropy and its gradient w.r.t. the logits.
inline std::pair<Vector, Matrix> softmax_cross_entropy(const Matrix& logits, std::span<const int> targets) {
  if (static_cast<std::size_t>(logits.rows()) != targets.size())
    throw ShapeError("got " + std::to_string(targets.size()) + " targets for " + std::to_string(logits.rows()) +
                     " samples");
  Vector losses(logits.rows());
  Matrix grad(logits.rows(), logits.cols());
  for (Index r = 0; r < logits.rows(); ++r) {
    const int t = targets[static_cast<std::size_t>(r)];
    if (t < 0 || t >= logits.cols()) throw ShapeError("target class " + std::to_string(t) + " out of range");
    const double m = logits.row(r).maxCoeff();
    RowVector e = (logits.row(r).array() - m).exp();
    const double z = e.sum();
    losses(r) = std::log(z) + m - logits(r, t);
    grad.row(r) = e / z;
    grad(r, t) -= 1.0;
  }
  return {losses, grad};
}

/// Gradients from one backward pass.
///
/// Parameter gradients are of the batch-mean loss. Activation gradients are
/// per sample (row i is the gradient of sample i's own loss), indexed by
/// hidden dense layer.
struct GradientRecord {
  std::vector<Matrix> weight_grads;
  std::vector<Vector> bias_grads;
  std::vector<Matrix> activation_grads;     // dL/da, a = post-activation of hidden layer d
  std::vector<Matrix> preactivation_grads;  // dL/dz, zero where the ReLU is off
  Vector losses;
};

inline void check_trace(const Network& net, const ActivationTrace& tr) {
  const auto& layers = net.layers();
  bool ok = tr.outputs.size() == layers.size() && tr.input.cols() == net.input_dim() &&
            tr.dense_steps.size() == net.num_dense();
  for (std::size_t s = 0; ok && s < layers.size(); ++s)
    ok = tr.outputs[s].cols() == static_cast<Index>(layers[s].fan_out) && tr.outputs[s].rows() == tr.input.rows();
  if (!ok) throw ShapeError("stale activation trace: shapes do not match the current network");
}

inline GradientRecord backward(const Network& net, const ActivationTrace& tr, std::span<const int> targets) {
  check_trace(net, tr);
  const auto& layers = net.layers();
  const auto nd = net.num_dense();
  GradientRecord rec;
  rec.weight_grads.resize(nd);
  rec.bias_grads.resize(nd);
  rec.activation_grads.resize(net.num_hidden());
  rec.preactivation_grads.resize(net.num_hidden());
  auto [losses, g] = softmax_cross_entropy(tr.logits(), targets);
  rec.losses = std::move(losses);
  const double inv_b = 1.0 / static_cast<double>(tr.batch_size());
  std::size_t d = nd;
  for (std::size_t s = layers.size(); s-- > 0;) {
    const Matrix& in = tr.layer_input(s);
    switch (layers[s].kind) {
      case LayerKind::dense: {
        --d;
        if (d + 1 < nd) rec.preactivation_grads[d] = g;
        rec.weight_grads[d].noalias() = inv_b * (g.transpose() * in);
        rec.bias_grads[d] = inv_b * g.colwise().sum().transpose();
        if (s > 0) {
          Matrix g_in(g.rows(), in.cols());
          g_in.noalias() = g * net.dense(d).weights;
          g = std::move(g_in);
          if (d > 0) rec.activation_grads[d - 1] = g;
        }
        break;
      }
      case LayerKind::relu:
        g = g.cwiseProduct((tr.outputs[s].array() > 0.0).cast<double>().matrix());
        break;
      case LayerKind::dropout:
        if (tr.dropout_masks[s].size() > 0) g = g.cwiseProduct(tr.dropout_masks[s]);
        break;
    }
  }
  return rec;
}

inline GradientRecord backward(const Network& net, const ActivationTrace& tr, int target_class) {
  std::vector<int> t(static_cast<std::size_t>(tr.batch_size()), target_class);
  return backward(net, tr, t);
}

struct TrainConfig {
  std::size_t epochs = 40;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  }
};

struct Evaluation {
  double accuracy = 0.0;  // percent
  double loss = 0.0;      // mean cross-entropy
};

inline Evaluation evaluate(const Network& net, const Dataset& data) {
  if (data.size() == 0) throw ConfigError("cannot evaluate on an empty dataset");
  const Matrix logits = predict_logits(net, data.inputs);
  const auto [losses, grad] = softmax_cross_entropy(logits, data.labels);
  std::size_t correct = 0;
  for (Index r = 0; r < logits.rows(); ++r) {
    Index arg = 0;
    logits.row(r).maxCoeff(&arg);
    if (arg == data.labels[static_cast<std::size_t>(r)]) ++correct;
  }
  return {100.0 * static_cast<double>(correct) / static_cast<double>(data.size()), losses.mean()};
}

struct TrainingReport {
  std::vector<double> epoch_loss;
  double final_train_accuracy = 0.0;
  double final_train_loss = 0.0;
};

/// Mini-batch SGD with momentum (v <- mu v + g; w <- w - lr v) on the batch
/// mean cross-entropy. Shuffling and dropout draw from one generator seeded
/// by cfg.seed. Leaves the network in eval mode.
inline TrainingReport train(Network& net, const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.size() == 0) throw ConfigError("cannot train on an empty dataset");
  if (data.dim() != net.input_dim()) throw ShapeError("dataset dimension does not match the network input");
  if (data.num_classes > net.output_dim()) throw ShapeError("dataset has more classes than the network outputs");
  Rng rng(cfg.seed);
  const auto nd = net.num_dense();
  std::vector<Matrix> vel_w(nd);
  std::vector<Vector> vel_b(nd);
  for (std::size_t d = 0; d < nd; ++d) {
    vel_w[d] = Matrix::Zero(net.dense(d).weights.rows(), net.dense(d).weights.cols());
    vel_b[d] = Vector::Zero(net.dense(d).bias.size());
  }
  std::vector<Index> order(data.size());
  std::iota(order.begin(), order.end(), Index{0});
  TrainingReport report;
  net.set_mode(Mode::train);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const auto len = std::min(cfg.batch_size, order.size() - start);
      Matrix x(static_cast<Index>(len), data.dim());
      std::vector<int> y(len);
      for (std::size_t i = 0; i < len; ++i) {
        x.row(static_cast<Index>(i)) = data.inputs.row(order[start + i]);
        y[i] = data.labels[static_cast<std::size_t>(order[start + i])];
      }
      const auto fw = forward(net, x, Mode::train, &rng);
      const auto g = backward(net, fw.trace, y);
      total += g.losses.sum();
      for (std::size_t d = 0; d < nd; ++d) {
        vel_w[d] = cfg.momentum * vel_w[d] + g.weight_grads[d];
        vel_b[d] = cfg.momentum * vel_b[d] + g.bias_grads[d];
        net.weights(d) -= cfg.learning_rate * vel_w[d];
        net.bias(d) -= cfg.learning_rate * vel_b[d];
      }
    }
    const double mean_loss = total / static_cast<double>(data.size());
    if (!std::isfinite(mean_loss)) {
      net.set_mode(Mode::eval);
      throw TrainingError("non-finite training loss in epoch " + std::to_string(epoch + 1));
    }
    report.epoch_loss.push_back(mean_loss);
  }
  net.set_mode(Mode::eval);
  const auto ev = evaluate(net, data);
  report.final_train_accuracy = ev.accuracy;
  report.final_train_loss = ev.loss;
  return report;
}

/// Returns a copy of `net` with the victim units structurally removed: their
/// incoming weight rows, biases, and outgoing weight columns are dropped.
inline Network remove_units(const Network& net, std::span<const UnitId> victims) {
  std::vector<std::set<std::size_t>> per_layer(net.num_hidden());
  for (const auto& u : victims) {
    if (!net.row_of(u))
      throw PruneError("unit (" + std::to_string(u.layer_index) + ", " + std::to_string(u.neuron_index) +
                       ") is not in the unit registry");
    per_layer[u.layer_index].insert(u.neuron_index);
  }
  for (std::size_t d = 0; d < per_layer.size(); ++d)
    if (per_layer[d].size() >= net.dense(d).neuron_ids.size())
      throw PruneError("removing every unit of hidden layer " + std::to_string(d) +
                       " would disconnect the model input from the output");
  Network out = net;
  for (std::size_t d = 0; d < per_layer.size(); ++d) {
    if (per_layer[d].empty()) continue;
    std::vector<Index> keep;
    const auto& ids = net.dense(d).neuron_ids;
    for (std::size_t r = 0; r < ids.size(); ++r)
      if (!per_layer[d].contains(ids[r])) keep.push_back(static_cast<Index>(r));
    out.erase_rows(d, keep);
  }
  return out;
}

inline Network remove_units(const Network& net, const std::vector<UnitId>& victims) {
  return remove_units(net, std::span<const UnitId>(victims));
}

}  // namespace lrpprune
