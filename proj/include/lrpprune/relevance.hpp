#pragma once

// Layer-wise relevance propagation with the alpha=1, beta=0 rule.
//
// Relevance enters at the output as a one-hot seed on the target class and
// is redistributed through every dense layer in proportion to the positive
// contributions (a_i w_ij)^+ of its inputs:
//
//   R_i = sum_j (a_i w_ij)^+ / (sum_i' (a_i' w_i'j)^+ + eps) * R_j
//
// Biases take no share. ReLU and dropout layers pass relevance through. The
// relevance that the eps stabilizer holds back, including all of R_j when
// neuron j has no positive contribution, is reported as `absorbed`.

#include <cmath>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "lrpprune/csv.hpp"
#include "lrpprune/error.hpp"
#include "lrpprune/network.hpp"

namespace lrpprune {

struct LrpConfig {
  double epsilon = 1e-9;
  double alpha = 1.0;
  double beta = 0.0;
  double seed_value = 1.0;  // relevance placed on the target logit

  void validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("LRP epsilon must be positive");
    if (alpha != 1.0 || beta != 0.0) throw ConfigError("only the alpha=1, beta=0 rule is implemented");
    if (!(seed_value >= 0.0) || !std::isfinite(seed_value))
      throw ConfigError("LRP output seed must be finite and nonnegative");
  }
};

/// Relevance of every neuron for one sample.
///
/// levels[0] holds the input features, levels[d+1] the outputs of dense
/// layer d; the last level is the logit layer.
struct RelevanceMap {
  int target_class = 0;
  std::vector<Vector> levels;
  std::vector<double> absorbed_by_layer;  // leak while propagating through dense layer d

  double absorbed() const {
    double s = 0.0;
    for (double a : absorbed_by_layer) s += a;
    return s;
  }

  /// Relevance absorbed between the output and level l.
  double absorbed_above(std::size_t level) const {
    double s = 0.0;
    for (std::size_t d = level; d < absorbed_by_layer.size(); ++d) s += absorbed_by_layer[d];
    return s;
  }

  /// Relevance of the units of hidden dense layer d.
  const Vector& hidden(std::size_t d) const { return levels.at(d + 1); }
};

/// Relevance for a batch of samples, one row per sample.
struct RelevanceBatch {
  std::vector<int> targets;
  std::vector<Matrix> levels;
  Matrix absorbed;  // batch x num_dense

  Index batch_size() const { return static_cast<Index>(targets.size()); }

  RelevanceMap map(Index b) const {
    RelevanceMap m;
    m.target_class = targets.at(static_cast<std::size_t>(b));
    for (const auto& l : levels) m.levels.push_back(l.row(b).transpose());
    for (Index d = 0; d < absorbed.cols(); ++d) m.absorbed_by_layer.push_back(absorbed(b, d));
    return m;
  }

  std::vector<RelevanceMap> maps() const {
    std::vector<RelevanceMap> out;
    for (Index b = 0; b < batch_size(); ++b) out.push_back(map(b));
    return out;
  }
};

/// Propagates an arbitrary output relevance matrix (batch x outputs) down to
/// the input.
inline RelevanceBatch lrp_propagate(const Network& net, const ActivationTrace& trace, Matrix output_relevance,
                                    const LrpConfig& cfg = {}) {
  cfg.validate();
  check_trace(net, trace);
  if (trace.mode != Mode::eval) throw ConfigError("LRP needs an eval-mode trace; dropout would corrupt activations");
  if (output_relevance.rows() != trace.batch_size() || output_relevance.cols() != net.output_dim())
    throw ShapeError("output relevance does not match the trace");
  const auto& layers = net.layers();
  const auto nd = net.num_dense();
  RelevanceBatch out;
  out.levels.resize(nd + 1);
  out.absorbed = Matrix::Zero(trace.batch_size(), static_cast<Index>(nd));
  Matrix r = std::move(output_relevance);
  out.levels[nd] = r;
  std::size_t d = nd;
  for (std::size_t s = layers.size(); s-- > 0;) {
    if (layers[s].kind != LayerKind::dense) continue;  // ReLU and dropout pass relevance through
    --d;
    const Matrix& a = trace.layer_input(s);
    const Matrix& w = net.dense(d).weights;
    const Matrix w_pos = w.cwiseMax(0.0);
    const Matrix a_pos = a.cwiseMax(0.0);
    const bool has_negative_inputs = a.minCoeff() < 0.0;
    Matrix z(a.rows(), w.rows());
    z.noalias() = a_pos * w_pos.transpose();
    Matrix w_neg, a_neg;
    if (has_negative_inputs) {
      // (a w)^+ = a^+ w^+ + a^- w^-
      w_neg = w.cwiseMin(0.0);
      a_neg = a.cwiseMin(0.0);
      z.noalias() += a_neg * w_neg.transpose();
    }
    const Matrix denom = z.array() + cfg.epsilon;
    const Matrix share = r.cwiseQuotient(denom);
    out.absorbed.col(static_cast<Index>(d)) = (r.array() * (cfg.epsilon / denom.array())).rowwise().sum();
    Matrix back(a.rows(), a.cols());
    back.noalias() = share * w_pos;
    Matrix r_in = a_pos.cwiseProduct(back);
    if (has_negative_inputs) {
      back.noalias() = share * w_neg;
      r_in += a_neg.cwiseProduct(back);
    }
    r = std::move(r_in);
    out.levels[d] = r;
  }
  return out;
}

/// LRP for every sample of an eval-mode trace, seeded with `cfg.seed_value`
/// at each sample's target class and zero elsewhere, whatever the logits.
inline RelevanceBatch lrp_backward_batch(const Network& net, const ActivationTrace& trace, std::span<const int> targets,
                                         const LrpConfig& cfg = {}) {
  if (static_cast<Index>(targets.size()) != trace.batch_size())
    throw ShapeError("got " + std::to_string(targets.size()) + " targets for " + std::to_string(trace.batch_size()) +
                     " samples");
  Matrix seed = Matrix::Zero(trace.batch_size(), net.output_dim());
  for (std::size_t b = 0; b < targets.size(); ++b) {
    if (targets[b] < 0 || targets[b] >= net.output_dim())
      throw ShapeError("target class " + std::to_string(targets[b]) + " out of range");
    seed(static_cast<Index>(b), targets[b]) = cfg.seed_value;
  }
  auto out = lrp_propagate(net, trace, std::move(seed), cfg);
  out.targets.assign(targets.begin(), targets.end());
  return out;
}

/// LRP for a single-sample trace.
inline RelevanceMap lrp_backward(const Network& net, const ActivationTrace& trace, int target_class,
                                 const LrpConfig& cfg = {}) {
  if (trace.batch_size() != 1) throw ShapeError("lrp_backward expects a single-sample trace");
  const int t[] = {target_class};
  return lrp_backward_batch(net, trace, t, cfg).map(0);
}

/// Writes (layer_index, neuron_index, relevance) for every hidden unit.
inline void write_relevance_csv(std::ostream& out, const Network& net, const RelevanceMap& map) {
  if (map.levels.size() != net.num_dense() + 1) throw ShapeError("relevance map does not match the network");
  out << "layer_index,neuron_index,relevance\n";
  for (std::size_t d = 0; d < net.num_hidden(); ++d) {
    const auto& ids = net.dense(d).neuron_ids;
    const auto& r = map.hidden(d);
    if (r.size() != static_cast<Index>(ids.size())) throw ShapeError("relevance map does not match the network");
    for (std::size_t i = 0; i < ids.size(); ++i)
      out << d << ',' << ids[i] << ',' << csv::real(r(static_cast<Index>(i))) << '\n';
  }
}

}  // namespace lrpprune
