// Trains a small network on the moon data, prunes a third of its hidden
// units with each criterion and prints the resulting training accuracy.
//
//   ./quickstart [hidden_width] [epochs]

#include <cstdlib>
#include <iomanip>
#include <iostream>

#include "lrpprune/lrpprune.hpp"

int main(int argc, char** argv) {
  using namespace lrpprune;
  const std::size_t width = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 100;
  const std::size_t epochs = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 20;

  const auto cfg = DataConfig::defaults(DatasetKind::moon, 1000, /*seed=*/1);
  const auto data = generate(cfg);
  auto net = build_toy_network(data.num_classes, width, /*seed=*/2);
  const auto report = train(net, data, TrainConfig{epochs, 0.003, 0.9, 64, /*seed=*/3});
  std::cout << std::fixed << std::setprecision(2) << "unpruned: " << report.final_train_accuracy << "%\n";

  // Five fresh samples per class drive the data-dependent criteria.
  const auto refs = draw_reference(cfg, 5, /*seed=*/4);
  for (auto c : kAllCriteria) {
    PrunePlan plan;
    plan.criterion = c;
    plan.amount = PruneAmount::count(width);
    plan.refs_per_class = 5;
    const auto result = prune_once(net, plan, refs, {&data, nullptr});
    const auto& it = result.report.iterations.front();
    std::cout << std::setw(9) << to_string(c) << ": " << it.train_accuracy << "%  survivors";
    for (auto s : it.survivors) std::cout << ' ' << s;
    std::cout << '\n';
  }
}
