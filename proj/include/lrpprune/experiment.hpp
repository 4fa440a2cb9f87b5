#pragma once

// Toy-protocol orchestration: train -> score -> prune -> evaluate -> analyze
// over a (dataset, repetition, criterion, n) grid, with per-cell result files
// that make reruns resumable and a result bundle that is a pure function of
// the configuration.
//
// Seeds: every random stream is derive_seed(master_seed, {dataset index,
// repetition, purpose, ...}). Reference draws use {d, rep, reference, n} and
// are therefore shared by all criteria of one repetition.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "json.hpp"
#include "lrpprune/analysis.hpp"
#include "lrpprune/checkpoint.hpp"
#include "lrpprune/criteria.hpp"
#include "lrpprune/csv.hpp"
#include "lrpprune/datagen.hpp"
#include "lrpprune/error.hpp"
#include "lrpprune/network.hpp"
#include "lrpprune/plot.hpp"
#include "lrpprune/pruning.hpp"
#include "lrpprune/rng.hpp"

namespace lrpprune {

inline constexpr std::string_view kToolVersion = "1.0.0";

struct DatasetEntry {
  std::string name;  // defaults to the kind
  DataConfig data;   // data.seed is ignored; seeds are derived
};

struct ExperimentConfig {
  std::vector<DatasetEntry> datasets;
  std::size_t hidden_width = 1000;
  std::vector<std::size_t> n_values{1, 2, 5, 10, 20, 50, 100, 200};
  std::vector<std::uint64_t> seeds;  // repetition ids
  std::uint64_t master_seed = 2021;
  std::vector<Criterion> criteria{kAllCriteria, kAllCriteria + 4};
  PruneAmount amount = PruneAmount::count(1000);
  std::size_t iterations = 1;
  bool protect_layers = true;
  std::optional<TrainConfig> fine_tune;
  double lrp_epsilon = 1e-9;
  std::vector<std::size_t> k_values{250, 1000};
  std::vector<double> noise_sigmas{0.3};
  std::size_t test_samples_per_class = 500;
  TrainConfig train{50, 0.003, 0.9, 64, 0};
  bool retrain_per_seed = false;
  std::size_t analysis_n = 10;
  std::size_t anchor_n = 10;
  bool plots = false;
  bool save_checkpoints = false;
  // Runtime options; they do not change any result and are not hashed.
  std::string output_dir = "results";
  std::size_t jobs = 1;

  static std::vector<DatasetEntry> toy_datasets(std::size_t per_class) {
    std::vector<DatasetEntry> out;
    for (auto k : {DatasetKind::moon, DatasetKind::circle, DatasetKind::multi})
      out.push_back({std::string(to_string(k)), DataConfig::defaults(k, per_class)});
    return out;
  }

  static std::vector<std::uint64_t> seed_range(std::size_t count) {
    std::vector<std::uint64_t> s(count);
    for (std::size_t i = 0; i < count; ++i) s[i] = i;
    return s;
  }

  /// Full protocol: width 1000, remove 1000 of 3000 units, 50 repetitions.
  static ExperimentConfig paper() {
    ExperimentConfig c;
    c.datasets = toy_datasets(1000);
    c.seeds = seed_range(50);
    return c;
  }

  /// The same grid with 10 repetitions instead of 50.
  static ExperimentConfig desk() {
    ExperimentConfig c = paper();
    c.seeds = seed_range(10);
    return c;
  }

  static ExperimentConfig preset(std::string_view name) {
    if (name == "paper") return paper();
    if (name == "desk") return desk();
    throw ConfigError("unknown preset '" + std::string(name) + "' (expected paper or desk)");
  }

  std::size_t registry_size() const { return 3 * hidden_width; }

  void validate() const {
    if (datasets.empty()) throw ConfigError("config lists no datasets");
    if (n_values.empty()) throw ConfigError("config lists no reference counts");
    if (seeds.empty()) throw ConfigError("config needs at least one seed");
    if (criteria.empty()) throw ConfigError("config lists no criteria");
    if (hidden_width < 1) throw ConfigError("hidden_width must be >= 1");
    if (test_samples_per_class < 1) throw ConfigError("test_samples_per_class must be >= 1");
    std::vector<std::string> names;
    for (const auto& d : datasets) {
      d.data.validate();
      names.push_back(d.name);
    }
    std::sort(names.begin(), names.end());
    if (std::adjacent_find(names.begin(), names.end()) != names.end()) throw ConfigError("dataset names must be unique");
    auto seeds_sorted = seeds;
    std::sort(seeds_sorted.begin(), seeds_sorted.end());
    if (std::adjacent_find(seeds_sorted.begin(), seeds_sorted.end()) != seeds_sorted.end())
      throw ConfigError("seeds must be unique");
    for (auto n : n_values)
      if (n < 1) throw ConfigError("reference counts must be >= 1");
    for (auto s : noise_sigmas)
      if (!(s >= 0.0)) throw ConfigError("noise sigmas must be nonnegative");
    for (auto k : k_values)
      if (k < 1 || k > registry_size()) throw ConfigError("k values must lie in [1, registry size]");
    train.validate();
    plan_for(Criterion::lrp, n_values.front()).validate(registry_size());
  }

  PrunePlan plan_for(Criterion c, std::size_t n) const {
    PrunePlan p;
    p.criterion = c;
    p.amount = amount;
    p.iterations = iterations;
    p.refs_per_class = n;
    p.fine_tune = fine_tune;
    p.protect_layers = protect_layers;
    p.lrp.epsilon = lrp_epsilon;
    return p;
  }
};

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline nlohmann::json train_to_json(const TrainConfig& t) {
  return {{"epochs", t.epochs}, {"learning_rate", t.learning_rate}, {"momentum", t.momentum},
          {"batch_size", t.batch_size}, {"seed", t.seed}};
}

inline TrainConfig train_from_json(const nlohmann::json& j, TrainConfig t) {
  t.epochs = j.value("epochs", t.epochs);
  t.learning_rate = j.value("learning_rate", t.learning_rate);
  t.momentum = j.value("momentum", t.momentum);
  t.batch_size = j.value("batch_size", t.batch_size);
  t.seed = j.value("seed", t.seed);
  return t;
}

}  // namespace detail

inline nlohmann::json to_json(const ExperimentConfig& c, bool include_runtime = true) {
  nlohmann::json j;
  j["datasets"] = nlohmann::json::array();
  for (const auto& d : c.datasets)
    j["datasets"].push_back({{"name", d.name},
                             {"kind", to_string(d.data.kind)},
                             {"samples_per_class", d.data.samples_per_class},
                             {"jitter", d.data.noise_sigma}});
  j["hidden_width"] = c.hidden_width;
  j["n_values"] = c.n_values;
  j["seeds"] = c.seeds;
  j["master_seed"] = c.master_seed;
  j["criteria"] = nlohmann::json::array();
  for (auto cr : c.criteria) j["criteria"].push_back(to_string(cr));
  nlohmann::json prune;
  if (c.amount.kind == PruneAmount::Kind::count)
    prune["count"] = static_cast<std::size_t>(c.amount.value);
  else
    prune["ratio"] = c.amount.value;
  prune["iterations"] = c.iterations;
  prune["protect_layers"] = c.protect_layers;
  prune["fine_tune"] = c.fine_tune ? detail::train_to_json(*c.fine_tune) : nlohmann::json();
  j["prune"] = prune;
  j["lrp_epsilon"] = c.lrp_epsilon;
  j["k_values"] = c.k_values;
  j["noise_sigmas"] = c.noise_sigmas;
  j["test_samples_per_class"] = c.test_samples_per_class;
  j["train"] = detail::train_to_json(c.train);
  j["retrain_per_seed"] = c.retrain_per_seed;
  j["analysis_n"] = c.analysis_n;
  j["anchor_n"] = c.anchor_n;
  j["plots"] = c.plots;
  j["save_checkpoints"] = c.save_checkpoints;
  if (include_runtime) {
    j["output_dir"] = c.output_dir;
    j["jobs"] = c.jobs;
  }
  return j;
}

/// Overlays the keys present in `j` on `base`.
inline ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base) {
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (j.contains("preset")) base = ExperimentConfig::preset(j.at("preset").get<std::string>());
    if (j.contains("datasets")) {
      base.datasets.clear();
      for (const auto& d : j.at("datasets")) {
        DatasetEntry e;
        if (d.is_string()) {
          e.data = DataConfig::defaults(parse_dataset_kind(d.get<std::string>()));
        } else {
          e.data = DataConfig::defaults(parse_dataset_kind(d.at("kind").get<std::string>()));
          e.data.samples_per_class = d.value("samples_per_class", e.data.samples_per_class);
          e.data.noise_sigma = d.value("jitter", e.data.noise_sigma);
          e.name = d.value("name", std::string());
        }
        if (e.name.empty()) e.name = std::string(to_string(e.data.kind));
        base.datasets.push_back(e);
      }
    }
    if (j.contains("samples_per_class"))
      for (auto& d : base.datasets) d.data.samples_per_class = j.at("samples_per_class").get<std::size_t>();
    base.hidden_width = j.value("hidden_width", base.hidden_width);
    if (j.contains("n_values")) base.n_values = j.at("n_values").get<std::vector<std::size_t>>();
    if (j.contains("seeds")) {
      const auto& s = j.at("seeds");
      base.seeds = s.is_array() ? s.get<std::vector<std::uint64_t>>()
                                : ExperimentConfig::seed_range(s.get<std::size_t>());
    }
    base.master_seed = j.value("master_seed", base.master_seed);
    if (j.contains("criteria")) {
      base.criteria.clear();
      for (const auto& c : j.at("criteria")) base.criteria.push_back(parse_criterion(c.get<std::string>()));
    }
    if (j.contains("prune")) {
      const auto& p = j.at("prune");
      if (p.contains("count")) base.amount = PruneAmount::count(p.at("count").get<std::size_t>());
      if (p.contains("ratio")) base.amount = PruneAmount::ratio(p.at("ratio").get<double>());
      base.iterations = p.value("iterations", base.iterations);
      base.protect_layers = p.value("protect_layers", base.protect_layers);
      if (p.contains("fine_tune")) {
        if (p.at("fine_tune").is_null())
          base.fine_tune.reset();
        else
          base.fine_tune = detail::train_from_json(p.at("fine_tune"), base.train);
      }
    }
    base.lrp_epsilon = j.value("lrp_epsilon", base.lrp_epsilon);
    if (j.contains("k_values")) base.k_values = j.at("k_values").get<std::vector<std::size_t>>();
    if (j.contains("noise_sigmas")) base.noise_sigmas = j.at("noise_sigmas").get<std::vector<double>>();
    base.test_samples_per_class = j.value("test_samples_per_class", base.test_samples_per_class);
    if (j.contains("train")) base.train = detail::train_from_json(j.at("train"), base.train);
    base.retrain_per_seed = j.value("retrain_per_seed", base.retrain_per_seed);
    base.analysis_n = j.value("analysis_n", base.analysis_n);
    base.anchor_n = j.value("anchor_n", base.anchor_n);
    base.plots = j.value("plots", base.plots);
    base.save_checkpoints = j.value("save_checkpoints", base.save_checkpoints);
    base.output_dir = j.value("output_dir", base.output_dir);
    base.jobs = j.value("jobs", base.jobs);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
  return base;
}

inline ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j, std::move(base));
}

/// FNV-1a of the canonical result-affecting configuration, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(to_json(c, false).dump())));
  return buf;
}

// ---------------------------------------------------------------------------
// Result rows

struct ResultRow {
  std::string dataset;
  std::string criterion;  // "none" for the unpruned model
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string phase;  // train | test
  double sigma = 0.0;
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  double loss = std::numeric_limits<double>::quiet_NaN();
  std::size_t survivors = 0;
  std::string status = "ok";
};

inline constexpr std::string_view kResultHeader = "dataset,criterion,n,seed,phase,sigma,accuracy,loss,survivors,status";

inline void write_rows(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kResultHeader << '\n';
  for (const auto& r : rows)
    out << r.dataset << ',' << r.criterion << ',' << r.n << ',' << r.seed << ',' << r.phase << ','
        << csv::real(r.sigma) << ',' << csv::real(r.accuracy) << ',' << csv::real(r.loss) << ',' << r.survivors
        << ',' << r.status << '\n';
}

inline std::vector<ResultRow> read_rows(const std::string& path) {
  const auto t = csv::read_table(path);
  const auto c_ds = t.column("dataset"), c_cr = t.column("criterion"), c_n = t.column("n"), c_s = t.column("seed"),
             c_ph = t.column("phase"), c_sg = t.column("sigma"), c_acc = t.column("accuracy"),
             c_loss = t.column("loss"), c_sv = t.column("survivors"), c_st = t.column("status");
  std::vector<ResultRow> out;
  for (const auto& r : t.rows)
    out.push_back({r[c_ds], r[c_cr], csv::parse_int<std::size_t>(r[c_n]), csv::parse_int<std::uint64_t>(r[c_s]),
                   r[c_ph], csv::parse_real(r[c_sg]), csv::parse_real(r[c_acc]), csv::parse_real(r[c_loss]),
                   csv::parse_int<std::size_t>(r[c_sv]), r[c_st]});
  return out;
}

inline void write_ranking(std::ostream& out, const Ranking& r) {
  out << "rank,layer_index,neuron_index\n";
  for (std::size_t i = 0; i < r.size(); ++i) out << i << ',' << r[i].layer_index << ',' << r[i].neuron_index << '\n';
}

inline Ranking read_ranking(const std::string& path) {
  const auto t = csv::read_table(path);
  const auto cl = t.column("layer_index"), cn = t.column("neuron_index");
  Ranking r;
  r.reserve(t.rows.size());
  for (const auto& row : t.rows)
    r.push_back({csv::parse_int<std::size_t>(row[cl]), csv::parse_int<std::size_t>(row[cn])});
  return r;
}

// ---------------------------------------------------------------------------
// Filesystem helpers

namespace detail {

namespace fs = std::filesystem;

/// Writes via a temporary file and rename so readers never see partial files.
inline void write_atomically(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out << content;
    if (!out) throw FormatError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline void write_sidecar(const fs::path& csv_path, const std::string& hash) {
  const nlohmann::json meta{{"file", csv_path.filename().string()},
                            {"config_hash", hash},
                            {"tool_version", std::string(kToolVersion)}};
  write_atomically(fs::path(csv_path.string() + ".meta.json"), meta.dump(2) + "\n");
}

/// The sidecar goes first: a present CSV always has its metadata.
inline void write_table(const fs::path& path, const std::string& content, const std::string& hash) {
  write_sidecar(path, hash);
  write_atomically(path, content);
}

inline std::string sanitize(std::string s) {
  for (auto& ch : s)
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
  return s;
}

/// Runs fn(i) for i in [0, count) on up to `jobs` threads; rethrows the first
/// exception after all workers stop.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn&& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex mu;
  std::vector<std::jthread> workers;
  for (std::size_t w = 0; w < jobs; ++w)
    workers.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < count;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  workers.clear();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Experiment

struct AnalysisTables {
  struct Table1Row {
    std::string dataset;
    std::size_t k;
    Criterion criterion;
    double first_k, last_k;
  };
  struct Table2Row {
    std::string dataset;
    std::size_t k;
    Criterion criterion;
    RankingComparison comparison;
  };
  struct CrossNTableRow {
    std::string dataset;
    std::size_t k;
    CrossNRow row;
  };
  std::vector<Table1Row> table1;
  std::vector<Table2Row> table2;
  std::vector<CrossNTableRow> cross_n;
};

struct ExperimentOutcome {
  std::filesystem::path output_dir;
  std::vector<ResultRow> rows;
  AnalysisTables tables;
  std::size_t cells_computed = 0;
  std::size_t cells_reused = 0;
  std::size_t cells_failed = 0;
};

using LogFn = std::function<void(const std::string&)>;

namespace detail {

inline constexpr std::uint64_t kSharedModel = ~std::uint64_t{0};

struct Paths {
  fs::path root;

  fs::path cell_dir(const std::string& dataset, std::uint64_t seed) const {
    return root / "cells" / dataset / ("rep_" + std::to_string(seed));
  }
  static std::string cell_name(Criterion c, std::size_t n) {
    return c == Criterion::weight ? "weight" : std::string(to_string(c)) + "_n" + std::to_string(n);
  }
  fs::path model(const std::string& dataset, std::uint64_t model_key) const {
    return root / "models" /
           (dataset + (model_key == kSharedModel ? std::string("_shared") : "_rep_" + std::to_string(model_key)) +
            ".bin");
  }
};

class ExperimentRunner {
 public:
  ExperimentRunner(ExperimentConfig cfg, LogFn log) : cfg_(std::move(cfg)), log_(std::move(log)) {
    cfg_.validate();
    paths_.root = cfg_.output_dir;
    hash_ = config_hash(cfg_);
  }

  ExperimentOutcome run() {
    fs::create_directories(paths_.root);
    if (const auto stored = paths_.root / "config.json"; fs::exists(stored)) {
      auto previous = load_config(stored.string(), ExperimentConfig::paper());
      if (config_hash(previous) != hash_)
        throw ConfigError(paths_.root.string() + " holds results of a different configuration (hash " +
                          config_hash(previous) + ", expected " + hash_ + ")");
    }
    write_atomically(paths_.root / "config.json", to_json(cfg_, false).dump(2) + "\n");
    train_shared_models();
    std::vector<std::pair<std::size_t, std::uint64_t>> cells;
    for (std::size_t d = 0; d < cfg_.datasets.size(); ++d)
      for (auto s : cfg_.seeds) cells.emplace_back(d, s);
    parallel_for(cells.size(), cfg_.jobs, [&](std::size_t i) { run_repetition(cells[i].first, cells[i].second); });
    shared_models_.clear();
    ExperimentOutcome out;
    out.output_dir = paths_.root;
    out.rows = collect_rows();
    write_table(paths_.root / "results.csv", rows_text(out.rows), hash_);
    out.tables = analyze();
    out.cells_computed = computed_;
    out.cells_reused = reused_;
    out.cells_failed = failed_;
    return out;
  }

  AnalysisTables analyze() const;
  std::vector<ResultRow> collect_rows() const;

 private:
  std::uint64_t model_key(std::uint64_t seed) const { return cfg_.retrain_per_seed ? seed : kSharedModel; }

  std::uint64_t seed_for(std::size_t d, std::uint64_t rep, SeedPurpose p, std::uint64_t extra = 0) const {
    return derive_seed(cfg_.master_seed, {d, rep, tag(p), extra});
  }

  Dataset training_data(std::size_t d, std::uint64_t key) const {
    auto dc = cfg_.datasets[d].data;
    dc.seed = seed_for(d, key, SeedPurpose::train_data);
    return generate(dc);
  }

  std::vector<std::string> cell_names() const {
    std::vector<std::string> names{"baseline"};
    for (auto c : cfg_.criteria) {
      if (c == Criterion::weight) {
        names.push_back(Paths::cell_name(c, 0));
        continue;
      }
      for (auto n : cfg_.n_values) names.push_back(Paths::cell_name(c, n));
    }
    return names;
  }

  bool repetition_complete(std::size_t d, std::uint64_t seed) const {
    const auto dir = paths_.cell_dir(cfg_.datasets[d].name, seed);
    for (const auto& name : cell_names())
      if (!fs::exists(dir / (name + ".csv"))) return false;
    return true;
  }

  Network obtain_model(std::size_t d, std::uint64_t key) const {
    const auto& entry = cfg_.datasets[d];
    const auto path = paths_.model(entry.name, key);
    if (cfg_.save_checkpoints && fs::exists(path)) return load_checkpoint(path.string());
    const auto data = training_data(d, key);
    auto net = build_toy_network(data.num_classes, cfg_.hidden_width, seed_for(d, key, SeedPurpose::init));
    auto tc = cfg_.train;
    tc.seed = seed_for(d, key, SeedPurpose::training);
    const auto report = train(net, data, tc);
    log("trained " + entry.name + (key == kSharedModel ? std::string(" (shared)") : " rep " + std::to_string(key)) +
        ": train accuracy " + csv::fixed(report.final_train_accuracy, 2) + "%");
    if (cfg_.save_checkpoints) {
      fs::create_directories(path.parent_path());
      write_atomically(path, serialize(net));
    }
    return net;
  }

  void train_shared_models() {
    if (cfg_.retrain_per_seed) return;
    std::vector<std::size_t> needed;
    for (std::size_t d = 0; d < cfg_.datasets.size(); ++d) {
      bool complete = true;
      for (auto s : cfg_.seeds) complete = complete && repetition_complete(d, s);
      if (!complete) needed.push_back(d);
    }
    std::vector<std::optional<Network>> models(cfg_.datasets.size());
    parallel_for(needed.size(), cfg_.jobs, [&](std::size_t i) { models[needed[i]] = obtain_model(needed[i], kSharedModel); });
    shared_models_ = std::move(models);
  }

  void run_repetition(std::size_t d, std::uint64_t seed) {
    const auto& entry = cfg_.datasets[d];
    const auto dir = paths_.cell_dir(entry.name, seed);
    if (repetition_complete(d, seed)) {
      reused_ += cell_names().size();
      return;
    }
    fs::create_directories(dir);
    const auto key = model_key(seed);
    std::optional<Network> local;
    if (cfg_.retrain_per_seed) local = obtain_model(d, key);
    const Network& net = cfg_.retrain_per_seed ? *local : *shared_models_[d];
    const auto train_set = training_data(d, key);
    std::vector<Dataset> tests;
    for (double sigma : cfg_.noise_sigmas)
      tests.push_back(noisy_test(entry.data, cfg_.test_samples_per_class, sigma, seed_for(d, seed, SeedPurpose::test)));

    auto evaluate_rows = [&](const Network& m, const std::string& crit, std::size_t n) {
      std::vector<ResultRow> rows;
      const auto tr = evaluate(m, train_set);
      rows.push_back({entry.name, crit, n, seed, "train", 0.0, tr.accuracy, tr.loss, m.registry_size(), "ok"});
      for (std::size_t i = 0; i < tests.size(); ++i) {
        const auto te = evaluate(m, tests[i]);
        rows.push_back({entry.name, crit, n, seed, "test", cfg_.noise_sigmas[i], te.accuracy, te.loss,
                        m.registry_size(), "ok"});
      }
      return rows;
    };
    auto failure_rows = [&](const std::string& crit, std::size_t n, const Error& e) {
      std::vector<ResultRow> rows;
      const std::string status = "failed:" + std::string(e.kind()) + ":" + sanitize(e.what());
      rows.push_back({entry.name, crit, n, seed, "train", 0.0, NAN, NAN, 0, status});
      for (double sigma : cfg_.noise_sigmas) rows.push_back({entry.name, crit, n, seed, "test", sigma, NAN, NAN, 0, status});
      return rows;
    };
    auto emit = [&](const std::string& name, const std::vector<ResultRow>& rows) {
      write_table(dir / (name + ".csv"), rows_text(rows), hash_);
    };

    if (!fs::exists(dir / "baseline.csv")) {
      emit("baseline", evaluate_rows(net, "none", 0));
      ++computed_;
    } else {
      ++reused_;
    }
    for (auto c : cfg_.criteria) {
      const bool data_dependent = is_data_dependent(c);
      const std::vector<std::size_t> ns = data_dependent ? cfg_.n_values : std::vector<std::size_t>{0};
      for (auto n : ns) {
        const auto name = Paths::cell_name(c, n);
        if (fs::exists(dir / (name + ".csv"))) {
          ++reused_;
          continue;
        }
        std::vector<ResultRow> rows;
        try {
          const std::size_t n_refs = data_dependent ? n : cfg_.n_values.front();
          const auto refs = draw_reference(entry.data, n_refs, seed_for(d, seed, SeedPurpose::reference, n_refs));
          const auto result = prune_iteratively(net, cfg_.plan_for(c, n_refs), refs, {&train_set, nullptr});
          // The ranking of the first scoring pass covers the full registry.
          const auto ranking = cfg_.iterations == 1
                                   ? result.ranking
                                   : rank_units(ranking_scores(compute_scores(c, net, refs, cfg_.plan_for(c, n_refs).lrp)));
          std::ostringstream rk;
          write_ranking(rk, ranking);
          write_table(dir / (name + ".ranking.csv"), rk.str(), hash_);
          if (data_dependent) {
            rows = evaluate_rows(result.network, std::string(to_string(c)), n);
          } else {
            // Weight scores ignore the references: one evaluation serves every n.
            const auto base = evaluate_rows(result.network, std::string(to_string(c)), 0);
            for (auto nv : cfg_.n_values)
              for (auto r : base) {
                r.n = nv;
                rows.push_back(r);
              }
          }
          ++computed_;
        } catch (const Error& e) {
          ++failed_;
          log("cell " + entry.name + "/rep_" + std::to_string(seed) + "/" + name + " failed: " + e.what());
          if (data_dependent) {
            rows = failure_rows(std::string(to_string(c)), n, e);
          } else {
            for (auto nv : cfg_.n_values)
              for (auto& r : failure_rows(std::string(to_string(c)), nv, e)) rows.push_back(r);
          }
        }
        emit(name, rows);
      }
    }
    log("finished " + entry.name + " rep " + std::to_string(seed));
  }

  static std::string rows_text(const std::vector<ResultRow>& rows) {
    std::ostringstream out;
    write_rows(out, rows);
    return out.str();
  }

  void log(const std::string& msg) const {
    if (!log_) return;
    std::lock_guard lock(log_mu_);
    log_(msg);
  }

  ExperimentConfig cfg_;
  LogFn log_;
  Paths paths_;
  std::string hash_;
  std::vector<std::optional<Network>> shared_models_;
  std::atomic<std::size_t> computed_{0}, reused_{0}, failed_{0};
  mutable std::mutex log_mu_;
};

inline std::vector<ResultRow> ExperimentRunner::collect_rows() const {
  std::vector<ResultRow> all;
  for (const auto& entry : cfg_.datasets)
    for (auto seed : cfg_.seeds) {
      const auto dir = paths_.cell_dir(entry.name, seed);
      for (const auto& name : cell_names()) {
        const auto path = dir / (name + ".csv");
        if (!fs::exists(path)) throw FormatError("missing cell result " + path.string());
        for (auto& r : read_rows(path.string())) all.push_back(std::move(r));
      }
    }
  return all;
}

inline AnalysisTables ExperimentRunner::analyze() const {
  AnalysisTables t;
  std::ostringstream t1, t2, t3;
  t1 << "dataset,k,criterion,first_k,last_k\n";
  t2 << "dataset,k,criterion,first_k,last_k,spearman\n";
  t3 << "dataset,k,anchor_n,m,first_k,last_k\n";
  const bool has_lrp = std::find(cfg_.criteria.begin(), cfg_.criteria.end(), Criterion::lrp) != cfg_.criteria.end();
  const bool has_analysis_n =
      std::find(cfg_.n_values.begin(), cfg_.n_values.end(), cfg_.analysis_n) != cfg_.n_values.end();
  const bool has_anchor_n = std::find(cfg_.n_values.begin(), cfg_.n_values.end(), cfg_.anchor_n) != cfg_.n_values.end();
  auto load = [&](const std::string& ds, std::uint64_t seed, Criterion c, std::size_t n) -> std::optional<Ranking> {
    const auto path = paths_.cell_dir(ds, seed) / (Paths::cell_name(c, n) + ".ranking.csv");
    if (!fs::exists(path)) return std::nullopt;  // failed cell
    return read_ranking(path.string());
  };
  for (const auto& entry : cfg_.datasets) {
    // Rankings at the analysis n, per criterion and repetition.
    std::map<Criterion, std::map<std::uint64_t, Ranking>> at_n;
    if (has_analysis_n)
      for (auto c : cfg_.criteria)
        for (auto seed : cfg_.seeds)
          if (auto r = load(entry.name, seed, c, cfg_.analysis_n)) at_n[c][seed] = std::move(*r);
    std::map<std::pair<std::size_t, std::uint64_t>, Ranking> lrp_by_n;
    if (has_lrp && has_anchor_n)
      for (auto n : cfg_.n_values)
        for (auto seed : cfg_.seeds)
          if (auto r = load(entry.name, seed, Criterion::lrp, n)) lrp_by_n[{n, seed}] = std::move(*r);

    for (auto k : cfg_.k_values) {
      if (has_lrp && has_analysis_n && !at_n[Criterion::lrp].empty()) {
        // Compare repetitions that succeeded for both the criterion and LRP.
        const auto& lrp = at_n[Criterion::lrp];
        for (auto c : cfg_.criteria) {
          std::map<Criterion, std::vector<Ranking>> pair_input;
          for (const auto& [seed, r] : lrp) {
            const auto it = at_n[c].find(seed);
            if (it == at_n[c].end()) continue;
            pair_input[Criterion::lrp].push_back(r);
            if (c != Criterion::lrp) pair_input[c].push_back(it->second);
          }
          if (pair_input.empty()) continue;
          for (const auto& row : cross_criterion_similarity(pair_input, k)) {
            if (row.criterion != c) continue;
            t.table1.push_back({entry.name, k, c, row.first_k, row.last_k});
            t1 << entry.name << ',' << k << ',' << to_string(c) << ',' << csv::real(row.first_k) << ','
               << csv::real(row.last_k) << '\n';
          }
        }
      }
      if (has_analysis_n)
        for (auto c : cfg_.criteria) {
          if (at_n[c].size() < 2) continue;
          const auto cmp = self_consistency(at_n[c], k);
          t.table2.push_back({entry.name, k, c, cmp});
          t2 << entry.name << ',' << k << ',' << to_string(c) << ',' << csv::real(cmp.first_k_similarity) << ','
             << csv::real(cmp.last_k_similarity) << ',' << csv::real(cmp.spearman) << '\n';
        }
      if (!lrp_by_n.empty()) {
        bool anchor_present = false;
        for (const auto& [key, r] : lrp_by_n) anchor_present = anchor_present || key.first == cfg_.anchor_n;
        if (anchor_present)
          for (const auto& row : cross_n_consistency(lrp_by_n, cfg_.anchor_n, k)) {
            t.cross_n.push_back({entry.name, k, row});
            t3 << entry.name << ',' << k << ',' << row.anchor_n << ',' << row.m << ',' << csv::real(row.first_k)
               << ',' << csv::real(row.last_k) << '\n';
          }
      }
    }
  }
  write_table(paths_.root / "table1_like.csv", t1.str(), hash_);
  write_table(paths_.root / "table2_like.csv", t2.str(), hash_);
  write_table(paths_.root / "suppT2_like.csv", t3.str(), hash_);
  return t;
}

}  // namespace detail

/// Runs the full grid and writes the result bundle to cfg.output_dir.
inline ExperimentOutcome run_experiment(const ExperimentConfig& cfg, LogFn log = {}) {
  detail::ExperimentRunner runner(cfg, std::move(log));
  return runner.run();
}

/// Reads the config stored in a result directory.
inline ExperimentConfig config_of_results(const std::filesystem::path& dir) {
  auto cfg = load_config((dir / "config.json").string(), ExperimentConfig::paper());
  cfg.output_dir = dir.string();
  return cfg;
}

/// Recomputes the analysis tables of an existing result directory.
inline AnalysisTables analyze_results(const std::filesystem::path& dir) {
  detail::ExperimentRunner runner(config_of_results(dir), {});
  return runner.analyze();
}

// ---------------------------------------------------------------------------
// Summary

struct SummaryRow {
  std::string dataset;
  std::string criterion;
  std::string phase;
  double sigma = 0.0;
  std::size_t n = 0;
  MeanStd accuracy;
  double baseline = std::numeric_limits<double>::quiet_NaN();  // mean unpruned accuracy
  std::size_t failed = 0;
};

/// Mean and population std of accuracy per (dataset, criterion, phase,
/// sigma, n) over repetitions; writes summary.csv and, with `plots`, one SVG
/// per (dataset, phase, sigma).
inline std::vector<SummaryRow> summarize(const std::filesystem::path& dir, bool plots) {
  namespace fs = std::filesystem;
  const auto rows = read_rows((dir / "results.csv").string());
  if (rows.empty()) throw ConfigError("no results in " + dir.string());
  std::string hash = "unknown";
  if (fs::exists(dir / "config.json")) hash = config_hash(config_of_results(dir));

  using Key = std::tuple<std::string, std::string, std::string, double, std::size_t>;
  std::map<Key, std::vector<double>> groups;
  std::map<Key, std::size_t> failures;
  std::map<std::tuple<std::string, std::string, double>, std::vector<double>> baseline;
  std::vector<std::string> dataset_order;
  for (const auto& r : rows) {
    if (std::find(dataset_order.begin(), dataset_order.end(), r.dataset) == dataset_order.end())
      dataset_order.push_back(r.dataset);
    if (r.criterion == "none") {
      if (r.status == "ok") baseline[{r.dataset, r.phase, r.sigma}].push_back(r.accuracy);
      continue;
    }
    const Key key{r.dataset, r.criterion, r.phase, r.sigma, r.n};
    if (r.status == "ok")
      groups[key].push_back(r.accuracy);
    else
      ++failures[key];
  }
  for (const auto& [key, count] : failures) groups.try_emplace(key);

  std::vector<SummaryRow> out;
  std::ostringstream csv_out;
  csv_out << "dataset,criterion,phase,sigma,n,mean_accuracy,std_accuracy,count,failed,baseline_accuracy\n";
  for (const auto& [key, accs] : groups) {
    SummaryRow s;
    std::tie(s.dataset, s.criterion, s.phase, s.sigma, s.n) = key;
    if (!accs.empty()) s.accuracy = mean_std(accs);
    else s.accuracy = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(), 0};
    if (auto it = failures.find(key); it != failures.end()) s.failed = it->second;
    if (auto b = baseline.find({s.dataset, s.phase, s.sigma}); b != baseline.end()) s.baseline = mean_std(b->second).mean;
    csv_out << s.dataset << ',' << s.criterion << ',' << s.phase << ',' << csv::real(s.sigma) << ',' << s.n << ','
            << csv::real(s.accuracy.mean) << ',' << csv::real(s.accuracy.std) << ',' << s.accuracy.count << ','
            << s.failed << ',' << csv::real(s.baseline) << '\n';
    out.push_back(s);
  }
  detail::write_table(dir / "summary.csv", csv_out.str(), hash);

  if (plots) {
    static const std::map<std::string, std::string> colors{
        {"weight", "black"}, {"taylor", "blue"}, {"gradient", "green"}, {"lrp", "red"}};
    std::map<std::tuple<std::string, std::string, double>, plot::Figure> figures;
    for (const auto& s : out) {
      if (s.accuracy.count == 0) continue;
      auto& fig = figures[{s.dataset, s.phase, s.sigma}];
      fig.title = s.dataset + " - " + s.phase + (s.phase == "test" ? " (sigma " + csv::fixed(s.sigma, 2) + ")" : "");
      fig.reference = s.baseline;
      auto it = std::find_if(fig.series.begin(), fig.series.end(), [&](const auto& x) { return x.label == s.criterion; });
      if (it == fig.series.end()) {
        const auto c = colors.find(s.criterion);
        fig.series.push_back({s.criterion, c == colors.end() ? "gray" : c->second, {}, {}, {}});
        it = std::prev(fig.series.end());
      }
      it->x.push_back(static_cast<double>(s.n));
      it->mean.push_back(s.accuracy.mean);
      it->std.push_back(s.accuracy.std);
    }
    fs::create_directories(dir / "plots");
    for (const auto& [key, fig] : figures) {
      const auto& [ds, phase, sigma] = key;
      plot::write_svg((dir / "plots" / (ds + "_" + phase + (phase == "test" ? "_sigma" + csv::fixed(sigma, 2) : "") + ".svg"))
                          .string(),
                      fig);
    }
  }
  return out;
}

}  // namespace lrpprune
