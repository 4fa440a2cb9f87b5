#pragma once

// Score -> rank -> remove -> (optionally) fine-tune, repeated until the
// planned number of iterations is reached. Units are ranked globally across
// all hidden layers.

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lrpprune/criteria.hpp"
#include "lrpprune/csv.hpp"
#include "lrpprune/error.hpp"
#include "lrpprune/network.hpp"
#include "lrpprune/rng.hpp"

namespace lrpprune {

/// How many units one pruning step removes.
struct PruneAmount {
  enum class Kind { count, ratio };
  Kind kind = Kind::count;
  double value = 0.0;

  static PruneAmount count(std::size_t n) { return {Kind::count, static_cast<double>(n)}; }
  static PruneAmount ratio(double r) { return {Kind::ratio, r}; }

  /// Units per step, given the registry size before the first step.
  std::size_t resolve(std::size_t original_registry) const {
    if (kind == Kind::count) return static_cast<std::size_t>(value);
    return static_cast<std::size_t>(std::llround(value * static_cast<double>(original_registry)));
  }
};

struct PrunePlan {
  Criterion criterion = Criterion::lrp;
  PruneAmount amount = PruneAmount::count(1000);
  std::size_t iterations = 1;
  std::size_t refs_per_class = 5;
  std::optional<TrainConfig> fine_tune;
  bool protect_layers = true;
  LrpConfig lrp;

  void validate(std::size_t registry_size) const {
    if (iterations < 1) throw ConfigError("prune plan needs at least one iteration");
    if (amount.kind == PruneAmount::Kind::ratio && !(amount.value > 0.0 && amount.value < 1.0))
      throw ConfigError("prune ratio must lie in (0, 1)");
    if (amount.kind == PruneAmount::Kind::count && (amount.value < 0.0 || amount.value != std::floor(amount.value)))
      throw ConfigError("prune count must be a nonnegative integer");
    const auto per_step = amount.resolve(registry_size);
    if (per_step > 0 && per_step * iterations >= registry_size)
      throw ConfigError("plan removes " + std::to_string(per_step * iterations) + " of " +
                        std::to_string(registry_size) + " units; at least one must remain");
    if (fine_tune) fine_tune->validate();
    lrp.validate();
  }
};

/// Optional datasets scored after each pruning step.
struct EvalSets {
  const Dataset* train = nullptr;
  const Dataset* test = nullptr;
};

struct IterationRecord {
  std::size_t iteration = 0;
  Criterion criterion = Criterion::lrp;
  std::vector<UnitId> removed;
  std::vector<std::size_t> survivors;  // per hidden layer
  double train_accuracy = std::numeric_limits<double>::quiet_NaN();
  double test_accuracy = std::numeric_limits<double>::quiet_NaN();
  double loss = std::numeric_limits<double>::quiet_NaN();  // training loss
  std::size_t parameters = 0;
};

struct PruneReport {
  std::vector<IterationRecord> iterations;
};

struct PruneResult {
  Network network;
  PruneReport report;
  CriterionScores scores;        // ranking scores of the last iteration
  std::vector<UnitId> ranking;   // ranking of the last iteration
};

inline std::vector<std::size_t> survivors_per_layer(const Network& net) {
  std::vector<std::size_t> out;
  for (std::size_t d = 0; d < net.num_hidden(); ++d) out.push_back(net.dense(d).neuron_ids.size());
  return out;
}

/// The first `count` units of a ranking, refusing to empty a layer when
/// `protect_layers` is set.
inline std::vector<UnitId> select_victims(const Network& net, const std::vector<UnitId>& ranking, std::size_t count,
                                          bool protect_layers) {
  if (count > ranking.size()) throw PruneError("cannot remove more units than the registry holds");
  std::vector<UnitId> victims(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(count));
  if (protect_layers) {
    auto left = survivors_per_layer(net);
    for (const auto& u : victims) {
      if (u.layer_index >= left.size()) throw PruneError("ranking names a non-hidden layer");
      if (--left[u.layer_index] == 0)
        throw PruneError("criterion selected every unit of hidden layer " + std::to_string(u.layer_index) +
                         "; removing them would disconnect the model input from the output");
    }
  }
  return victims;
}

namespace detail {

inline void check_refs_for_plan(const PrunePlan& plan, const Dataset& refs) {
  if (!is_data_dependent(plan.criterion)) return;
  if (refs.size() == 0) throw ConfigError("criterion " + std::string(to_string(plan.criterion)) + " needs references");
  if (refs.provenance.kind == Provenance::Kind::reference && refs.provenance.n_per_class != plan.refs_per_class)
    throw ConfigError("reference set has " + std::to_string(refs.provenance.n_per_class) +
                      " samples per class, plan expects " + std::to_string(plan.refs_per_class));
}

inline void fill_evaluation(IterationRecord& rec, const Network& net, const EvalSets& eval) {
  if (eval.train) {
    const auto e = evaluate(net, *eval.train);
    rec.train_accuracy = e.accuracy;
    rec.loss = e.loss;
  }
  if (eval.test) rec.test_accuracy = evaluate(net, *eval.test).accuracy;
  rec.parameters = net.parameter_count();
  rec.survivors = survivors_per_layer(net);
}

inline PruneResult prune_step(const Network& net, const PrunePlan& plan, const Dataset& refs, std::size_t count,
                              std::size_t iteration, const EvalSets& eval) {
  PruneResult out;
  out.scores = ranking_scores(compute_scores(plan.criterion, net, refs, plan.lrp));
  out.ranking = rank_units(out.scores);
  IterationRecord rec;
  rec.iteration = iteration;
  rec.criterion = plan.criterion;
  rec.removed = select_victims(net, out.ranking, count, plan.protect_layers);
  out.network = remove_units(net, rec.removed);
  out.network.set_mode(Mode::eval);
  if (plan.fine_tune && count > 0) {
    if (!eval.train) throw ConfigError("fine-tuning needs training data");
    auto cfg = *plan.fine_tune;
    cfg.seed = derive_seed(cfg.seed, {iteration});
    train(out.network, *eval.train, cfg);
  }
  fill_evaluation(rec, out.network, eval);
  out.report.iterations.push_back(std::move(rec));
  return out;
}

}  // namespace detail

/// One scoring and removal step of the plan's amount.
inline PruneResult prune_once(const Network& net, const PrunePlan& plan, const Dataset& refs,
                              const EvalSets& eval = {}) {
  plan.validate(net.registry_size());
  detail::check_refs_for_plan(plan, refs);
  return detail::prune_step(net, plan, refs, plan.amount.resolve(net.registry_size()), 1, eval);
}

/// plan.iterations steps, each recomputing the criterion on the pruned
/// network and optionally fine-tuning on eval.train afterwards.
inline PruneResult prune_iteratively(const Network& net, const PrunePlan& plan, const Dataset& refs,
                                     const EvalSets& eval = {}) {
  const auto original = net.registry_size();
  plan.validate(original);
  detail::check_refs_for_plan(plan, refs);
  const auto per_step = plan.amount.resolve(original);
  PruneResult out;
  out.network = net;
  for (std::size_t it = 1; it <= plan.iterations; ++it) {
    auto step = detail::prune_step(out.network, plan, refs, per_step, it, eval);
    out.network = std::move(step.network);
    out.scores = std::move(step.scores);
    out.ranking = std::move(step.ranking);
    for (auto& r : step.report.iterations) out.report.iterations.push_back(std::move(r));
  }
  return out;
}

/// iteration,criterion,removed_count,layer,survivors,train_acc,test_acc,loss,params
inline void write_report_csv(std::ostream& out, const PruneReport& report) {
  out << "iteration,criterion,removed_count,layer,survivors,train_acc,test_acc,loss,params\n";
  for (const auto& it : report.iterations)
    for (std::size_t d = 0; d < it.survivors.size(); ++d)
      out << it.iteration << ',' << to_string(it.criterion) << ',' << it.removed.size() << ',' << d << ','
          << it.survivors[d] << ',' << csv::real(it.train_accuracy) << ',' << csv::real(it.test_accuracy) << ','
          << csv::real(it.loss) << ',' << it.parameters << '\n';
}

}  // namespace lrpprune
