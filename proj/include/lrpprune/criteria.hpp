#pragma once

// Unit importance criteria over a shared reference set:
//   weight   - l2 norm of the unit's incoming weights
//   gradient - mean |dL/dz| over the references (z: pre-activation)
//   taylor   - mean |a * dL/da| over the references
//   lrp      - summed alpha1-beta0 relevance over the references
// Weight, gradient and Taylor scores are l2-normalized per layer before
// global ranking; LRP scores are used as they are.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lrpprune/csv.hpp"
#include "lrpprune/datagen.hpp"
#include "lrpprune/error.hpp"
#include "lrpprune/network.hpp"
#include "lrpprune/relevance.hpp"

namespace lrpprune {

enum class Criterion { weight, gradient, taylor, lrp };

inline constexpr Criterion kAllCriteria[] = {Criterion::weight, Criterion::gradient, Criterion::taylor,
                                             Criterion::lrp};

inline std::string_view to_string(Criterion c) {
  switch (c) {
    case Criterion::weight: return "weight";
    case Criterion::gradient: return "gradient";
    case Criterion::taylor: return "taylor";
    case Criterion::lrp: return "lrp";
  }
  return "?";
}

inline Criterion parse_criterion(std::string_view s) {
  if (s == "weight" || s == "W") return Criterion::weight;
  if (s == "gradient" || s == "grad" || s == "G") return Criterion::gradient;
  if (s == "taylor" || s == "T") return Criterion::taylor;
  if (s == "lrp" || s == "L") return Criterion::lrp;
  throw ConfigError("unknown criterion '" + std::string(s) + "'");
}

/// Whether rankings of this criterion depend on reference samples.
inline bool is_data_dependent(Criterion c) { return c != Criterion::weight; }

/// Importance per registry unit; `units` and `scores` are aligned.
struct CriterionScores {
  Criterion criterion = Criterion::weight;
  std::vector<UnitId> units;
  std::vector<double> scores;
  std::size_t n_reference = 0;
  bool normalized = false;

  std::size_t size() const { return units.size(); }

  double score(const UnitId& u) const {
    for (std::size_t i = 0; i < units.size(); ++i)
      if (units[i] == u) return scores[i];
    throw ConfigError("unit (" + std::to_string(u.layer_index) + ", " + std::to_string(u.neuron_index) +
                      ") has no score");
  }
};

/// Sums per-unit relevance over samples.
inline CriterionScores unit_relevance(std::span<const RelevanceMap> maps, std::span<const UnitId> registry) {
  if (maps.empty()) throw ConfigError("unit_relevance needs at least one relevance map");
  CriterionScores out;
  out.criterion = Criterion::lrp;
  out.units.assign(registry.begin(), registry.end());
  out.scores.assign(registry.size(), 0.0);
  out.n_reference = maps.size();
  // Registry units are grouped by layer in row order.
  std::vector<std::size_t> layer_start;
  std::vector<std::size_t> layer_count;
  for (std::size_t i = 0; i < registry.size(); ++i) {
    const auto d = registry[i].layer_index;
    if (i > 0 && d < registry[i - 1].layer_index) throw ConfigError("registry must be ordered by layer");
    if (layer_start.size() <= d) {
      layer_start.resize(d + 1, i);
      layer_count.resize(d + 1, 0);
    }
    ++layer_count[d];
  }
  for (const auto& m : maps) {
    if (m.levels.size() < layer_count.size() + 2) throw ShapeError("relevance map has too few layers");
    for (std::size_t d = 0; d < layer_count.size(); ++d) {
      const auto& r = m.hidden(d);
      if (static_cast<std::size_t>(r.size()) != layer_count[d])
        throw ShapeError("relevance map layer " + std::to_string(d) + " does not match the registry");
      for (std::size_t i = 0; i < layer_count[d]; ++i) out.scores[layer_start[d] + i] += r(static_cast<Index>(i));
    }
  }
  return out;
}

inline CriterionScores unit_relevance(const std::vector<RelevanceMap>& maps, const std::vector<UnitId>& registry) {
  return unit_relevance(std::span<const RelevanceMap>(maps), std::span<const UnitId>(registry));
}

namespace detail {

inline CriterionScores empty_scores(const Network& net, Criterion c, std::size_t n_ref) {
  CriterionScores s;
  s.criterion = c;
  s.units = net.unit_registry();
  s.scores.assign(s.units.size(), 0.0);
  s.n_reference = n_ref;
  return s;
}

inline void check_refs(const Network& net, const Dataset& refs) {
  if (refs.size() == 0) throw ConfigError("criterion needs a nonempty reference set");
  if (refs.dim() != net.input_dim()) throw ShapeError("reference samples do not match the network input");
}

/// Calls fn(offset_in_registry, d, column_sums) per hidden layer for every
/// chunk of reference samples.
template <typename PerChunk>
void for_each_chunk(const Dataset& refs, PerChunk&& fn) {
  constexpr Index chunk = 512;
  for (Index start = 0; start < static_cast<Index>(refs.size()); start += chunk) {
    const Index len = std::min<Index>(chunk, static_cast<Index>(refs.size()) - start);
    const Matrix x = refs.inputs.middleRows(start, len);
    const std::span<const int> y(refs.labels.data() + start, static_cast<std::size_t>(len));
    fn(x, y);
  }
}

}  // namespace detail

inline CriterionScores score_weight(const Network& net) {
  auto out = detail::empty_scores(net, Criterion::weight, 0);
  std::size_t i = 0;
  for (std::size_t d = 0; d < net.num_hidden(); ++d) {
    const Vector norms = net.dense(d).weights.rowwise().norm();
    for (Index r = 0; r < norms.size(); ++r) out.scores[i++] = norms(r);
  }
  return out;
}

namespace detail {

enum class GradKind { gradient, taylor };

inline CriterionScores score_by_gradient(const Network& net, const Dataset& refs, GradKind kind) {
  check_refs(net, refs);
  auto out = empty_scores(net, kind == GradKind::gradient ? Criterion::gradient : Criterion::taylor, refs.size());
  for_each_chunk(refs, [&](const Matrix& x, std::span<const int> y) {
    const auto fw = forward(net, x, Mode::eval);
    const auto g = backward(net, fw.trace, y);
    std::size_t i = 0;
    for (std::size_t d = 0; d < net.num_hidden(); ++d) {
      RowVector sums = kind == GradKind::gradient
                           ? RowVector(g.preactivation_grads[d].cwiseAbs().colwise().sum())
                           : RowVector(fw.trace.post_activation(d).cwiseProduct(g.activation_grads[d]).cwiseAbs()
                                           .colwise().sum());
      for (Index r = 0; r < sums.size(); ++r) out.scores[i++] += sums(r);
    }
  });
  const double inv_n = 1.0 / static_cast<double>(refs.size());
  for (auto& s : out.scores) s *= inv_n;
  return out;
}

}  // namespace detail

/// Mean absolute loss gradient at each unit's pre-activation, in eval mode
/// at the true labels. Units whose ReLU is off on every sample score 0.
inline CriterionScores score_gradient(const Network& net, const Dataset& refs) {
  return detail::score_by_gradient(net, refs, detail::GradKind::gradient);
}

/// Mean |a * dL/da|: first-order estimate of the loss change when the unit's
/// activation is zeroed.
inline CriterionScores score_taylor(const Network& net, const Dataset& refs) {
  return detail::score_by_gradient(net, refs, detail::GradKind::taylor);
}

/// Summed LRP relevance of each unit, seeded at every reference sample's
/// true class.
inline CriterionScores score_lrp(const Network& net, const Dataset& refs, const LrpConfig& cfg = {}) {
  detail::check_refs(net, refs);
  auto out = detail::empty_scores(net, Criterion::lrp, refs.size());
  detail::for_each_chunk(refs, [&](const Matrix& x, std::span<const int> y) {
    const auto fw = forward(net, x, Mode::eval);
    const auto rel = lrp_backward_batch(net, fw.trace, y, cfg);
    std::size_t i = 0;
    for (std::size_t d = 0; d < net.num_hidden(); ++d) {
      const RowVector sums = rel.levels[d + 1].colwise().sum();
      for (Index r = 0; r < sums.size(); ++r) out.scores[i++] += sums(r);
    }
  });
  return out;
}

/// Raw (unnormalized) scores of any criterion.
inline CriterionScores compute_scores(Criterion c, const Network& net, const Dataset& refs,
                                      const LrpConfig& lrp = {}) {
  switch (c) {
    case Criterion::weight: return score_weight(net);
    case Criterion::gradient: return score_gradient(net, refs);
    case Criterion::taylor: return score_taylor(net, refs);
    case Criterion::lrp: return score_lrp(net, refs, lrp);
  }
  throw ConfigError("unknown criterion");
}

/// Divides each layer's score vector by its l2 norm. All-zero layers are
/// left unchanged.
inline CriterionScores normalize_per_layer(const CriterionScores& scores) {
  if (scores.normalized) throw ConfigError("scores are already normalized");
  CriterionScores out = scores;
  std::map<std::size_t, double> sq;
  for (std::size_t i = 0; i < out.size(); ++i) sq[out.units[i].layer_index] += out.scores[i] * out.scores[i];
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double n = std::sqrt(sq[out.units[i].layer_index]);
    if (n > 0.0) out.scores[i] /= n;
  }
  out.normalized = true;
  return out;
}

/// Scores as used for global ranking: per-layer normalized except for LRP.
inline CriterionScores ranking_scores(const CriterionScores& raw) {
  return raw.criterion == Criterion::lrp ? raw : normalize_per_layer(raw);
}

/// Units in ascending score order (least important first); ties keep
/// UnitId order.
inline std::vector<UnitId> rank_units(const CriterionScores& scores) {
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (!std::isfinite(scores.scores[i]))
      throw ConfigError("non-finite score for unit (" + std::to_string(scores.units[i].layer_index) + ", " +
                        std::to_string(scores.units[i].neuron_index) + ")");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (scores.scores[a] != scores.scores[b]) return scores.scores[a] < scores.scores[b];
    return scores.units[a] < scores.units[b];
  });
  std::vector<UnitId> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(scores.units[i]);
  return out;
}

/// criterion,layer_index,neuron_index,raw_score,normalized_score
inline void write_scores_csv(std::ostream& out, const CriterionScores& raw, const CriterionScores& ranked) {
  if (raw.units != ranked.units) throw ShapeError("raw and normalized scores cover different units");
  out << "criterion,layer_index,neuron_index,raw_score,normalized_score\n";
  for (std::size_t i = 0; i < raw.size(); ++i)
    out << to_string(raw.criterion) << ',' << raw.units[i].layer_index << ',' << raw.units[i].neuron_index << ','
        << csv::real(raw.scores[i]) << ',' << csv::real(ranked.scores[i]) << '\n';
}

}  // namespace lrpprune
