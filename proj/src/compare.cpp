#include "hopgnn/compare.hpp"

#include "hopgnn/cluster.hpp"

namespace hopgnn {

std::vector<StrategySpec> comparison_strategies() {
  return {{StrategyKind::ModelCentric, false, false},
          {StrategyKind::Naive, false, false},
          {StrategyKind::LocalityOptimized, false, false},
          {StrategyKind::HopGnn, false, false},
          {StrategyKind::HopGnn, true, false},
          {StrategyKind::HopGnn, true, true}};
}

std::vector<ResultRow> compare_strategies(const SimConfig& cfg) {
  std::vector<ResultRow> rows;
  for (const auto& spec : comparison_strategies()) {
    const RunResult run = run_strategy(cfg, spec);
    rows.push_back(ResultRow::aggregate(run.epochs, cfg.model_dims()));
    rows.back().strategy = spec.name();
  }
  return rows;
}

}  // namespace hopgnn
