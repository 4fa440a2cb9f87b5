#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "helpers.hpp"

using namespace lrpprune;
using namespace testing_helpers;

namespace {

struct Fixture {
  DataConfig cfg = DataConfig::defaults(DatasetKind::moon, 200, 3);
  Dataset data = generate(cfg);
  Network net = [this] {
    auto n = build_toy_network(2, 30, 4);
    train(n, data, TrainConfig{5, 0.003, 0.9, 32, 5});
    return n;
  }();
};

PrunePlan plan_for(Criterion c, std::size_t count, std::size_t n = 5) {
  PrunePlan p;
  p.criterion = c;
  p.amount = PruneAmount::count(count);
  p.refs_per_class = n;
  return p;
}

std::size_t total(const std::vector<std::size_t>& v) {
  std::size_t s = 0;
  for (auto x : v) s += x;
  return s;
}

}  // namespace

TEST(PruneAmount, ResolvesCountsAndRatios) {
  EXPECT_EQ(PruneAmount::count(7).resolve(3000), 7u);
  EXPECT_EQ(PruneAmount::ratio(1.0 / 3.0).resolve(3000), 1000u);
  EXPECT_EQ(PruneAmount::ratio(0.5).resolve(5), 3u);  // rounds half away from zero
}

TEST(PrunePlan, RejectsImpossiblePlans) {
  auto p = plan_for(Criterion::weight, 90);
  EXPECT_THROW(p.validate(90), ConfigError);
  p.amount = PruneAmount::count(30);
  p.iterations = 3;
  EXPECT_THROW(p.validate(90), ConfigError);
  p.iterations = 0;
  EXPECT_THROW(p.validate(90), ConfigError);
  p.iterations = 1;
  p.amount = PruneAmount::ratio(1.0);
  EXPECT_THROW(p.validate(90), ConfigError);
  p.amount = PruneAmount::ratio(0.0);
  EXPECT_THROW(p.validate(90), ConfigError);
  p.amount = PruneAmount::count(0);
  EXPECT_NO_THROW(p.validate(90));
}

TEST(SelectVictims, ProtectsLayersFromBeingEmptied) {
  const auto net = build_toy_network(2, 3, 1);
  const std::vector<UnitId> ranking{{1, 0}, {1, 1}, {1, 2}, {0, 0}, {0, 1}, {0, 2}, {2, 0}, {2, 1}, {2, 2}};
  EXPECT_EQ(select_victims(net, ranking, 2, true).size(), 2u);
  EXPECT_THROW(select_victims(net, ranking, 3, true), PruneError);
  EXPECT_EQ(select_victims(net, ranking, 3, false).size(), 3u);
  EXPECT_THROW(select_victims(net, ranking, 10, false), PruneError);
}

TEST(PruneOnce, RemovesTheFirstRankedUnits) {
  Fixture f;
  const auto refs = draw_reference(f.cfg, 5, 9);
  for (auto c : kAllCriteria) {
    const auto r = prune_once(f.net, plan_for(c, 30), refs, {&f.data, nullptr});
    ASSERT_EQ(r.report.iterations.size(), 1u);
    const auto& it = r.report.iterations.front();
    EXPECT_EQ(it.removed, std::vector<UnitId>(r.ranking.begin(), r.ranking.begin() + 30)) << to_string(c);
    EXPECT_EQ(total(it.survivors), 60u);
    EXPECT_EQ(r.network.registry_size(), 60u);
    const auto left = r.network.unit_registry();
    const std::set<UnitId> remaining(left.begin(), left.end());
    for (const auto& u : it.removed) EXPECT_FALSE(remaining.contains(u));
    EXPECT_TRUE(std::isfinite(it.train_accuracy));
    EXPECT_TRUE(std::isnan(it.test_accuracy));
    EXPECT_EQ(it.parameters, r.network.parameter_count());
  }
}

TEST(PruneOnce, ZeroCountLeavesTheNetworkUnchanged) {
  Fixture f;
  const auto r = prune_once(f.net, plan_for(Criterion::taylor, 0), draw_reference(f.cfg, 5, 9));
  EXPECT_EQ(serialize(r.network), serialize([&] {
              auto n = f.net;
              n.set_mode(Mode::eval);
              return n;
            }()));
}

TEST(PruneOnce, ReferenceCountMustMatchThePlan) {
  Fixture f;
  EXPECT_THROW(prune_once(f.net, plan_for(Criterion::lrp, 10, 5), draw_reference(f.cfg, 3, 9)), ConfigError);
  Dataset none;
  none.inputs.resize(0, 2);
  none.num_classes = 2;
  EXPECT_THROW(prune_once(f.net, plan_for(Criterion::gradient, 10), none), ConfigError);
  EXPECT_NO_THROW(prune_once(f.net, plan_for(Criterion::weight, 10), none));
}

TEST(PruneOnce, IsDeterministic) {
  Fixture f;
  const auto refs = draw_reference(f.cfg, 5, 9);
  for (auto c : kAllCriteria) {
    const auto a = prune_once(f.net, plan_for(c, 20), refs);
    const auto b = prune_once(f.net, plan_for(c, 20), refs);
    EXPECT_EQ(serialize(a.network), serialize(b.network));
  }
}

TEST(PruneIteratively, RescoresThePrunedNetworkEachStep) {
  Fixture f;
  auto plan = plan_for(Criterion::lrp, 8);
  plan.iterations = 3;
  const auto r = prune_iteratively(f.net, plan, draw_reference(f.cfg, 5, 9), {&f.data, nullptr});
  ASSERT_EQ(r.report.iterations.size(), 3u);
  std::set<UnitId> removed;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& it = r.report.iterations[i];
    EXPECT_EQ(it.iteration, i + 1);
    EXPECT_EQ(total(it.survivors), 90u - 8u * (i + 1));
    for (const auto& u : it.removed) EXPECT_TRUE(removed.insert(u).second);
  }
  EXPECT_EQ(r.ranking.size(), 74u);  // the final step ranked the 74 units it started with
  EXPECT_EQ(r.network.registry_size(), 66u);
}

TEST(PruneIteratively, RatioIsResolvedAgainstTheOriginalSize) {
  Fixture f;
  auto plan = plan_for(Criterion::weight, 0);
  plan.amount = PruneAmount::ratio(0.1);
  plan.iterations = 2;
  const auto r = prune_iteratively(f.net, plan, Dataset{});
  EXPECT_EQ(r.report.iterations[0].removed.size(), 9u);
  EXPECT_EQ(r.report.iterations[1].removed.size(), 9u);
}

TEST(PruneIteratively, FineTuningNeedsTrainingDataAndHelps) {
  Fixture f;
  auto plan = plan_for(Criterion::weight, 40);
  plan.fine_tune = TrainConfig{3, 0.003, 0.9, 32, 11};
  EXPECT_THROW(prune_iteratively(f.net, plan, Dataset{}), ConfigError);
  const auto tuned = prune_iteratively(f.net, plan, Dataset{}, {&f.data, nullptr});
  plan.fine_tune.reset();
  const auto raw = prune_iteratively(f.net, plan, Dataset{}, {&f.data, nullptr});
  EXPECT_EQ(tuned.report.iterations[0].removed, raw.report.iterations[0].removed);
  EXPECT_LT(tuned.report.iterations[0].loss, raw.report.iterations[0].loss);
}

TEST(PruneReportCsv, OneRowPerIterationAndLayer) {
  Fixture f;
  auto plan = plan_for(Criterion::weight, 5);
  plan.iterations = 2;
  const auto r = prune_iteratively(f.net, plan, Dataset{}, {&f.data, &f.data});
  std::stringstream ss;
  write_report_csv(ss, r.report);
  const auto t = csv::read_table(ss);
  EXPECT_EQ(t.header, (std::vector<std::string>{"iteration", "criterion", "removed_count", "layer", "survivors",
                                                "train_acc", "test_acc", "loss", "params"}));
  ASSERT_EQ(t.rows.size(), 6u);
  EXPECT_EQ(t.rows[5][0], "2");
  EXPECT_EQ(t.rows[5][1], "weight");
  EXPECT_EQ(t.rows[5][2], "5");
}
