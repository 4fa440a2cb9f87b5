#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"

using namespace lrpprune;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "lrpprune_experiment_test" / name;
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig tiny(const fs::path& out) {
  auto c = ExperimentConfig::desk();
  c.datasets = ExperimentConfig::toy_datasets(40);
  c.hidden_width = 12;
  c.amount = PruneAmount::count(12);
  c.seeds = {0, 1, 2};
  c.n_values = {1, 3};
  c.analysis_n = 3;
  c.anchor_n = 3;
  c.k_values = {4};
  c.noise_sigmas = {0.0, 0.3};
  c.test_samples_per_class = 20;
  c.train = TrainConfig{3, 0.01, 0.9, 16, 0};
  c.output_dir = out.string();
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Presets, PaperAndDeskDifferOnlyInRepetitions) {
  const auto paper = ExperimentConfig::paper();
  const auto desk = ExperimentConfig::desk();
  EXPECT_EQ(paper.seeds.size(), 50u);
  EXPECT_EQ(desk.seeds.size(), 10u);
  EXPECT_EQ(paper.hidden_width, 1000u);
  EXPECT_EQ(desk.hidden_width, 1000u);
  EXPECT_EQ(paper.amount.resolve(paper.registry_size()), 1000u);
  EXPECT_EQ(paper.datasets.size(), 3u);
  EXPECT_EQ(paper.n_values, (std::vector<std::size_t>{1, 2, 5, 10, 20, 50, 100, 200}));
  EXPECT_NO_THROW(paper.validate());
  EXPECT_THROW(ExperimentConfig::preset("huge"), ConfigError);
}

TEST(Config, JsonRoundTrip) {
  auto c = tiny("x");
  c.fine_tune = TrainConfig{2, 0.001, 0.5, 8, 3};
  c.amount = PruneAmount::ratio(0.25);
  const auto back = config_from_json(to_json(c), ExperimentConfig::paper());
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST(Config, HashIgnoresRuntimeOptions) {
  auto a = tiny("a"), b = tiny("b");
  b.jobs = 4;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.master_seed = 7;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, OverlaysAndErrors) {
  const auto j = nlohmann::json::parse(R"({"preset": "desk", "datasets": ["moon"], "seeds": 3,
                                           "prune": {"ratio": 0.5}, "hidden_width": 10})");
  const auto c = config_from_json(j, ExperimentConfig::paper());
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{0, 1, 2}));
  EXPECT_EQ(c.datasets.size(), 1u);
  EXPECT_EQ(c.amount.kind, PruneAmount::Kind::ratio);
  EXPECT_EQ(c.hidden_width, 10u);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"hidden_width": "wide"})"), c), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"datasets": ["spiral"]})"), c), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse("[1, 2]"), c), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json", c), ConfigError);
  auto ok = c;
  ok.k_values = {30};
  ok.amount = PruneAmount::count(10);
  EXPECT_NO_THROW(ok.validate());
  auto bad = ok;
  bad.seeds = {1, 1};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = ok;
  bad.k_values = {31};
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Experiment, WritesTheResultBundle) {
  const auto dir = fresh_dir("bundle");
  const auto cfg = tiny(dir);
  const auto out = run_experiment(cfg);
  // Per dataset and seed: baseline + weight + 3 criteria x 2 n values.
  EXPECT_EQ(out.cells_computed, 3u * 3u * 8u);
  EXPECT_EQ(out.cells_failed, 0u);
  // Rows: (1 baseline + 4 criteria x 2 n) x (train + 2 sigmas) per dataset and seed.
  EXPECT_EQ(out.rows.size(), 3u * 3u * 9u * 3u);
  for (const auto* name : {"results.csv", "table1_like.csv", "table2_like.csv", "suppT2_like.csv"}) {
    ASSERT_TRUE(fs::exists(dir / name)) << name;
    const auto meta = nlohmann::json::parse(slurp(dir / (std::string(name) + ".meta.json")));
    EXPECT_EQ(meta.at("config_hash"), config_hash(cfg));
    EXPECT_EQ(meta.at("tool_version"), std::string(kToolVersion));
  }
  EXPECT_TRUE(fs::exists(dir / "cells" / "moon" / "rep_0" / "lrp_n3.csv.meta.json"));
  const auto t2 = csv::read_table((dir / "table2_like.csv").string());
  EXPECT_EQ(t2.header, (std::vector<std::string>{"dataset", "k", "criterion", "first_k", "last_k", "spearman"}));
  EXPECT_EQ(t2.rows.size(), 3u * 4u);
  const auto t3 = csv::read_table((dir / "suppT2_like.csv").string());
  EXPECT_EQ(t3.header, (std::vector<std::string>{"dataset", "k", "anchor_n", "m", "first_k", "last_k"}));
  EXPECT_EQ(t3.rows.size(), 3u * 2u);
  for (const auto& r : out.rows) {
    EXPECT_EQ(r.status, "ok");
    EXPECT_EQ(r.survivors, r.criterion == "none" ? 36u : 24u);
  }
}

TEST(Experiment, WeightRowsAndRankingsAreSharedAcrossN) {
  const auto dir = fresh_dir("weight");
  const auto out = run_experiment(tiny(dir));
  for (const auto& t : out.tables.table2)
    if (t.criterion == Criterion::weight) {
      EXPECT_EQ(t.comparison.first_k_similarity, 1.0);
      EXPECT_EQ(t.comparison.last_k_similarity, 1.0);
      EXPECT_EQ(t.comparison.spearman, 1.0);
    }
  const auto first = slurp(dir / "cells" / "circle" / "rep_0" / "weight.ranking.csv");
  EXPECT_EQ(first, slurp(dir / "cells" / "circle" / "rep_2" / "weight.ranking.csv"));
  std::map<std::tuple<std::string, std::uint64_t, std::string, double>, std::set<double>> acc_by_n;
  for (const auto& r : out.rows)
    if (r.criterion == "weight") acc_by_n[{r.dataset, r.seed, r.phase, r.sigma}].insert(r.accuracy);
  for (const auto& [key, accs] : acc_by_n)
    if (std::get<2>(key) == "train") EXPECT_EQ(accs.size(), 1u);
}

TEST(Experiment, ResumesWithoutRecomputing) {
  const auto dir = fresh_dir("resume");
  const auto cfg = tiny(dir);
  run_experiment(cfg);
  const auto before = slurp(dir / "results.csv");
  fs::remove(dir / "cells" / "multi" / "rep_1" / "taylor_n1.csv");
  fs::remove(dir / "results.csv");
  const auto again = run_experiment(cfg);
  EXPECT_EQ(again.cells_computed, 1u);
  EXPECT_EQ(again.cells_reused, 3u * 3u * 8u - 1u);
  EXPECT_EQ(slurp(dir / "results.csv"), before);
}

TEST(Experiment, RefusesToMixConfigurations) {
  const auto dir = fresh_dir("mix");
  auto cfg = tiny(dir);
  cfg.datasets.resize(1);
  cfg.seeds = {0, 1};
  run_experiment(cfg);
  cfg.master_seed += 1;
  EXPECT_THROW(run_experiment(cfg), ConfigError);
}

TEST(Experiment, JobCountDoesNotChangeResults) {
  const auto a = fresh_dir("jobs1"), b = fresh_dir("jobs3");
  auto ca = tiny(a), cb = tiny(b);
  cb.jobs = 3;
  run_experiment(ca);
  run_experiment(cb);
  for (const auto* name : {"results.csv", "table1_like.csv", "table2_like.csv", "suppT2_like.csv"})
    EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
}

TEST(Experiment, RetrainingPerSeedGivesDistinctBaselines) {
  const auto dir = fresh_dir("retrain");
  auto cfg = tiny(dir);
  cfg.datasets.resize(1);
  cfg.retrain_per_seed = true;
  cfg.save_checkpoints = true;
  run_experiment(cfg);
  EXPECT_TRUE(fs::exists(dir / "models" / "moon_rep_0.bin"));
  EXPECT_TRUE(fs::exists(dir / "models" / "moon_rep_2.bin"));
  EXPECT_NE(slurp(dir / "models" / "moon_rep_0.bin"), slurp(dir / "models" / "moon_rep_1.bin"));
}

TEST(Experiment, FailedCellsAreRecordedNotFatal) {
  const auto dir = fresh_dir("failing");
  auto cfg = tiny(dir);
  cfg.datasets.resize(1);
  cfg.hidden_width = 1;  // any two victims empty a layer
  cfg.amount = PruneAmount::count(2);
  cfg.k_values = {1};
  const auto out = run_experiment(cfg);
  EXPECT_EQ(out.cells_failed, 3u * 7u);
  std::size_t failed = 0;
  for (const auto& r : out.rows)
    if (r.status != "ok") {
      ++failed;
      EXPECT_EQ(r.status.rfind("failed:prune:", 0), 0u) << r.status;
      EXPECT_TRUE(std::isnan(r.accuracy));
    }
  EXPECT_EQ(failed, 3u * 8u * 3u);
  const auto summary = summarize(dir, true);
  EXPECT_TRUE(fs::exists(dir / "summary.csv"));
  for (const auto& s : summary) EXPECT_EQ(s.failed, 3u);
}

TEST(Summary, AggregatesMeansAndPlots) {
  const auto dir = fresh_dir("summary");
  run_experiment(tiny(dir));
  const auto rows = summarize(dir, true);
  // 3 datasets x 4 criteria x 2 n x 3 phase/sigma groups.
  EXPECT_EQ(rows.size(), 3u * 4u * 2u * 3u);
  for (const auto& s : rows) {
    EXPECT_EQ(s.accuracy.count, 3u);
    EXPECT_TRUE(std::isfinite(s.baseline));
  }
  EXPECT_TRUE(fs::exists(dir / "plots" / "moon_train.svg"));
  EXPECT_TRUE(fs::exists(dir / "plots" / "multi_test_sigma0.30.svg"));
  EXPECT_TRUE(fs::exists(dir / "summary.csv.meta.json"));
}

TEST(Analysis, RecomputedTablesMatchTheRun) {
  const auto dir = fresh_dir("reanalyze");
  run_experiment(tiny(dir));
  const auto before = slurp(dir / "table1_like.csv");
  fs::remove(dir / "table1_like.csv");
  analyze_results(dir);
  EXPECT_EQ(slurp(dir / "table1_like.csv"), before);
}
