#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "lrpprune/lrpprune.hpp"

namespace testing_helpers {

using namespace lrpprune;

/// Dense-ReLU chain 2 -> widths... -> k with no dropout.
inline Network mlp(const std::vector<std::size_t>& widths, std::size_t k, std::uint64_t seed, std::size_t in = 2) {
  std::vector<LayerSpec> layers;
  std::size_t prev = in;
  for (auto w : widths) {
    layers.push_back(LayerSpec::dense(prev, w));
    layers.push_back(LayerSpec::relu(w));
    prev = w;
  }
  layers.push_back(LayerSpec::dense(prev, k));
  return build_network(layers, seed);
}

inline Network from_params(const std::vector<LayerSpec>& layers, std::vector<DenseParams> params) {
  return Network(layers, std::move(params));
}

inline DenseParams params(Matrix w, Vector b) {
  DenseParams p;
  p.weights = std::move(w);
  p.bias = std::move(b);
  return p;
}

inline Matrix random_inputs(Index rows, Index cols, std::uint64_t seed, double scale = 1.5) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix x(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) x(r, c) = u(rng);
  return x;
}

/// Independent scalar evaluation of the eval-mode layer chain. `mask[d]`
/// (optional) zeroes selected outputs of hidden dense layer d.
inline Vector naive_forward(const Network& net, const Vector& x, const std::vector<std::vector<bool>>& mask = {}) {
  std::vector<double> cur(x.data(), x.data() + x.size());
  std::size_t d = 0;
  for (const auto& l : net.layers()) {
    if (l.kind == LayerKind::dense) {
      const auto& p = net.dense(d);
      std::vector<double> next(static_cast<std::size_t>(p.weights.rows()));
      for (Index j = 0; j < p.weights.rows(); ++j) {
        double s = 0.0;
        for (Index i = 0; i < p.weights.cols(); ++i) s += p.weights(j, i) * cur[static_cast<std::size_t>(i)];
        next[static_cast<std::size_t>(j)] = s + p.bias(j);
      }
      cur = std::move(next);
      ++d;
    } else if (l.kind == LayerKind::relu) {
      for (auto& v : cur) v = std::max(v, 0.0);
      const std::size_t hidden = d - 1;
      if (hidden < mask.size())
        for (std::size_t j = 0; j < cur.size(); ++j)
          if (mask[hidden][j]) cur[j] = 0.0;
    }
  }
  return Eigen::Map<Vector>(cur.data(), static_cast<Index>(cur.size()));
}

inline double loss_of(const Network& net, const Matrix& x, const std::vector<int>& y) {
  const auto fw = forward(net, x, Mode::eval);
  return softmax_cross_entropy(fw.logits, y).first.mean();
}

}  // namespace testing_helpers
