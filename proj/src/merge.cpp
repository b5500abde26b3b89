#include "hopgnn/merge.hpp"

#include <stdexcept>

#include "hopgnn/rng.hpp"

namespace hopgnn {

MergeResult merge_controller(Cluster& cluster, const StrategySpec& strategy,
                             std::size_t total_epochs, std::size_t k) {
  if (k == 0) throw std::invalid_argument("merge_controller: K must be >= 1");
  StrategySpec spec = strategy;
  spec.kind = StrategyKind::HopGnn;
  spec.merge = true;
  const std::size_t n = cluster.num_servers();

  MergeResult out;
  std::size_t epoch = 0;
  auto run_block = [&](const MergePattern& pattern, MergePhase phase, std::size_t count) {
    double total = 0.0;
    for (std::size_t i = 0; i < count && epoch < total_epochs; ++i, ++epoch) {
      EpochMetrics m = cluster.run_epoch(spec, epoch, pattern);
      total += m.sim_seconds;
      out.history.push_back({epoch, phase, n - pattern.size(), m.sim_seconds});
      out.epochs.push_back(std::move(m));
    }
    return count ? total / static_cast<double>(count) : 0.0;
  };

  if (total_epochs >= k) {
    double current = run_block(out.pattern, MergePhase::Baseline, k);
    while (n - out.pattern.size() >= 2 && epoch + k <= total_epochs) {
      const auto totals = cluster.epoch_column_totals(epoch, out.pattern);
      const auto col = find_fewest_column(totals);
      if (!col) break;
      MergePattern trial = out.pattern;
      trial.push_back(*col);
      const std::size_t first = epoch;
      const double measured = run_block(trial, MergePhase::Trial, k);
      const bool accept = measured < current;
      out.decisions.push_back({first, *col, current, measured, accept});
      if (!accept) break;
      out.pattern = std::move(trial);
      current = measured;
    }
  }
  run_block(out.pattern, MergePhase::Steady, total_epochs - epoch);
  out.final_columns = n - out.pattern.size();

  const std::size_t last = total_epochs ? total_epochs - 1 : 0;
  const auto batches = cluster.epoch_batches(last);
  if (!batches.empty()) out.final_table = cluster.iteration_table(last, 0, batches[0], out.pattern);
  return out;
}

MergeResult merge_controller(const SimConfig& cfg) {
  Cluster cluster(cfg);
  StrategySpec spec = cfg.strategy;
  return merge_controller(cluster, spec, cfg.epochs, cfg.merge_k);
}

}  // namespace hopgnn
