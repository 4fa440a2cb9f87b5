// Command-line front end: dataset generation, training, pruning, and the
// full experiment grid with its analysis and summary stages.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "lrpprune/lrpprune.hpp"

namespace {

using namespace lrpprune;

int exit_code_for(std::string_view kind) {
  if (kind == "config") return 2;
  if (kind == "shape") return 3;
  if (kind == "training") return 4;
  if (kind == "prune") return 5;
  if (kind == "format") return 6;
  return 1;
}

int report_error(std::string_view kind, const std::string& message) {
  const nlohmann::json err{{"status", "error"}, {"kind", std::string(kind)}, {"message", message}};
  std::cerr << err.dump() << '\n';
  return exit_code_for(kind);
}

// Single-command CSVs are tagged with a hash of the invocation's arguments.
std::string g_invocation_hash = "unknown";

std::string hash_arguments(int argc, char** argv) {
  std::string joined;
  for (int i = 1; i < argc; ++i) joined.append(argv[i]).push_back('\0');
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(joined)));
  return buf;
}

template <typename Fn>
void write_to(const std::string& path, Fn&& fn) {
  std::ostringstream out;
  fn(out);
  detail::write_table(path, out.str(), g_invocation_hash);
}

struct ConfigOptions {
  std::string config_path;
  std::string preset = "desk";
  std::optional<std::uint64_t> master_seed;
  std::optional<std::size_t> jobs;
  bool plots = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config overlaid on the preset")->check(CLI::ExistingFile);
    app->add_option("--preset", preset, "Base preset")->check(CLI::IsMember({"paper", "desk"}));
    app->add_option("--master-seed", master_seed, "Root of every derived seed");
    app->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    app->add_flag("--plots", plots, "Write SVG plots");
  }

  ExperimentConfig resolve() const {
    auto cfg = ExperimentConfig::preset(preset);
    if (!config_path.empty()) cfg = load_config(config_path, cfg);
    if (master_seed) cfg.master_seed = *master_seed;
    if (jobs) cfg.jobs = *jobs;
    if (plots) cfg.plots = true;
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pruning laboratory for small feed-forward networks"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a toy dataset as CSV");
  std::string gen_kind = "moon", gen_out;
  std::size_t gen_per_class = 1000;
  std::optional<double> gen_jitter;
  double gen_noise = 0.0;
  std::uint64_t gen_seed = 0;
  gen->add_option("--dataset", gen_kind, "moon, circle or multi")->check(CLI::IsMember({"moon", "circle", "multi"}));
  gen->add_option("--per-class", gen_per_class, "Samples per class");
  gen->add_option("--jitter", gen_jitter, "Generator jitter (blob std for multi)");
  gen->add_option("--noise", gen_noise, "Gaussian noise added after generation");
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--out", gen_out, "Output CSV")->required();

  // train
  auto* tr = app.add_subcommand("train", "Train the toy network on a dataset CSV");
  ConfigOptions tr_cfg;
  tr_cfg.attach(tr);
  std::string tr_data, tr_out;
  std::optional<std::size_t> tr_width, tr_epochs;
  std::optional<double> tr_lr;
  std::uint64_t tr_seed = 0;
  tr->add_option("--data", tr_data, "Training CSV")->required()->check(CLI::ExistingFile);
  tr->add_option("--out", tr_out, "Checkpoint path")->required();
  tr->add_option("--width", tr_width, "Hidden width (default from the preset)");
  tr->add_option("--epochs", tr_epochs, "Epochs (default from the preset)");
  tr->add_option("--lr", tr_lr, "Learning rate (default from the preset)");
  tr->add_option("--seed", tr_seed, "Seed for initialization and training");

  // prune
  auto* pr = app.add_subcommand("prune", "Score, rank and remove units of a checkpoint");
  std::string pr_model, pr_refs, pr_out, pr_train, pr_test, pr_report, pr_scores, pr_relevance, pr_criterion = "lrp";
  std::optional<std::size_t> pr_count;
  std::optional<double> pr_ratio;
  std::size_t pr_iterations = 1, pr_relevance_sample = 0;
  pr->add_option("--model", pr_model, "Input checkpoint")->required()->check(CLI::ExistingFile);
  pr->add_option("--refs", pr_refs, "Reference-sample CSV")->check(CLI::ExistingFile);
  pr->add_option("--criterion", pr_criterion, "weight, gradient, taylor or lrp");
  auto* count_opt = pr->add_option("--count", pr_count, "Units removed per iteration");
  pr->add_option("--ratio", pr_ratio, "Fraction of units removed per iteration")->excludes(count_opt);
  pr->add_option("--iterations", pr_iterations, "Pruning iterations");
  pr->add_option("--train-data", pr_train, "Dataset CSV to evaluate after pruning")->check(CLI::ExistingFile);
  pr->add_option("--test-data", pr_test, "Second dataset CSV to evaluate")->check(CLI::ExistingFile);
  pr->add_option("--out", pr_out, "Pruned checkpoint path");
  pr->add_option("--report", pr_report, "Prune report CSV");
  pr->add_option("--scores", pr_scores, "Score dump CSV (first iteration)");
  pr->add_option("--relevance", pr_relevance, "Relevance dump CSV for one reference sample");
  pr->add_option("--relevance-sample", pr_relevance_sample, "Reference row used by --relevance");

  // run
  auto* run = app.add_subcommand("run", "Run the experiment grid, analysis and summary");
  ConfigOptions run_cfg;
  run_cfg.attach(run);
  std::string run_out;
  bool quiet = false;
  run->add_option("--output", run_out, "Result directory (overrides the config)");
  run->add_flag("--quiet", quiet, "No progress messages");

  // analyze / summarize
  auto* an = app.add_subcommand("analyze", "Recompute the similarity tables of a result directory");
  std::string an_dir;
  an->add_option("--results", an_dir, "Result directory")->required()->check(CLI::ExistingDirectory);
  auto* su = app.add_subcommand("summarize", "Aggregate results.csv over repetitions");
  std::string su_dir;
  bool su_plots = false;
  su->add_option("--results", su_dir, "Result directory")->required()->check(CLI::ExistingDirectory);
  su->add_flag("--plots", su_plots, "Write SVG plots");

  g_invocation_hash = hash_arguments(argc, argv);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what());
  }

  try {
    if (*gen) {
      auto dc = DataConfig::defaults(parse_dataset_kind(gen_kind), gen_per_class, gen_seed);
      if (gen_jitter) dc.noise_sigma = *gen_jitter;
      const auto ds = noisy_test(dc, gen_per_class, gen_noise, gen_seed);
      write_to(gen_out, [&](std::ostream& o) { write_csv(o, ds); });
      std::cout << nlohmann::json{{"status", "ok"}, {"samples", ds.size()}, {"classes", ds.num_classes}}.dump()
                << '\n';
    } else if (*tr) {
      const auto cfg = tr_cfg.resolve();
      const auto data = read_csv(tr_data);
      auto tc = cfg.train;
      if (tr_epochs) tc.epochs = *tr_epochs;
      if (tr_lr) tc.learning_rate = *tr_lr;
      tc.seed = derive_seed(tr_seed, {tag(SeedPurpose::training)});
      auto net = build_toy_network(data.num_classes, tr_width.value_or(cfg.hidden_width),
                                   derive_seed(tr_seed, {tag(SeedPurpose::init)}));
      const auto report = train(net, data, tc);
      save_checkpoint(tr_out, net);
      std::cout << nlohmann::json{{"status", "ok"},
                                  {"train_accuracy", report.final_train_accuracy},
                                  {"train_loss", report.final_train_loss},
                                  {"epochs", tc.epochs}}
                       .dump()
                << '\n';
    } else if (*pr) {
      const auto net = load_checkpoint(pr_model);
      PrunePlan plan;
      plan.criterion = parse_criterion(pr_criterion);
      plan.iterations = pr_iterations;
      if (pr_count) plan.amount = PruneAmount::count(*pr_count);
      if (pr_ratio) plan.amount = PruneAmount::ratio(*pr_ratio);
      if (!pr_count && !pr_ratio) plan.amount = PruneAmount::ratio(1.0 / 3.0);
      Dataset refs;
      if (!pr_refs.empty()) {
        refs = read_csv(pr_refs, static_cast<int>(net.output_dim()));
        refs.provenance = {Provenance::Kind::reference, refs.size() / static_cast<std::size_t>(refs.num_classes), 0.0};
        plan.refs_per_class = refs.provenance.n_per_class;
      } else if (is_data_dependent(plan.criterion)) {
        throw ConfigError("criterion " + pr_criterion + " needs --refs");
      }
      std::optional<Dataset> train_set, test_set;
      if (!pr_train.empty()) train_set = read_csv(pr_train, static_cast<int>(net.output_dim()));
      if (!pr_test.empty()) test_set = read_csv(pr_test, static_cast<int>(net.output_dim()));
      if (!pr_scores.empty()) {
        const auto raw = compute_scores(plan.criterion, net, refs, plan.lrp);
        write_to(pr_scores, [&](std::ostream& o) { write_scores_csv(o, raw, ranking_scores(raw)); });
      }
      if (!pr_relevance.empty()) {
        if (pr_relevance_sample >= refs.size()) throw ConfigError("--relevance-sample is outside the reference set");
        const auto sample = refs.subset({static_cast<Index>(pr_relevance_sample)});
        const auto fw = forward(net, sample.inputs, Mode::eval);
        const auto map = lrp_backward(net, fw.trace, sample.labels.front(), plan.lrp);
        write_to(pr_relevance, [&](std::ostream& o) { write_relevance_csv(o, net, map); });
      }
      const auto result = prune_iteratively(net, plan, refs,
                                            {train_set ? &*train_set : nullptr, test_set ? &*test_set : nullptr});
      if (!pr_out.empty()) save_checkpoint(pr_out, result.network);
      if (!pr_report.empty()) write_to(pr_report, [&](std::ostream& o) { write_report_csv(o, result.report); });
      const auto& last = result.report.iterations.back();
      nlohmann::json summary{{"status", "ok"}, {"survivors", last.survivors}, {"parameters", last.parameters}};
      if (train_set) summary["train_accuracy"] = last.train_accuracy;
      if (test_set) summary["test_accuracy"] = last.test_accuracy;
      std::cout << summary.dump() << '\n';
    } else if (*run) {
      auto cfg = run_cfg.resolve();
      if (!run_out.empty()) cfg.output_dir = run_out;
      LogFn log;
      if (!quiet) log = [](const std::string& m) { std::clog << m << std::endl; };
      const auto outcome = run_experiment(cfg, log);
      summarize(outcome.output_dir, cfg.plots);
      std::cout << nlohmann::json{{"status", outcome.cells_failed ? "partial" : "ok"},
                                  {"output_dir", outcome.output_dir.string()},
                                  {"config_hash", config_hash(cfg)},
                                  {"cells_computed", outcome.cells_computed},
                                  {"cells_reused", outcome.cells_reused},
                                  {"cells_failed", outcome.cells_failed}}
                       .dump()
                << '\n';
    } else if (*an) {
      const auto tables = analyze_results(an_dir);
      std::cout << nlohmann::json{{"status", "ok"},
                                  {"table1_rows", tables.table1.size()},
                                  {"table2_rows", tables.table2.size()},
                                  {"cross_n_rows", tables.cross_n.size()}}
                       .dump()
                << '\n';
    } else if (*su) {
      const auto rows = summarize(su_dir, su_plots);
      std::cout << nlohmann::json{{"status", "ok"}, {"groups", rows.size()}}.dump() << '\n';
    }
  } catch (const Error& e) {
    return report_error(e.kind(), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return report_error("io", e.what());
  } catch (const std::exception& e) {
    return report_error("internal", e.what());
  }
  return EXIT_SUCCESS;
}
