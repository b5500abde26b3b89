#pragma once

#include <cstddef>
#include <vector>

#include "hopgnn/cluster.hpp"
#include "hopgnn/trace_table.hpp"

namespace hopgnn {

enum class MergePhase { Baseline, Trial, Steady };

/// One executed epoch of the controller.
struct MergeEpoch {
  std::size_t epoch = 0;
  MergePhase phase = MergePhase::Baseline;
  std::size_t columns = 0;  // columns of the table the epoch ran with
  double sim_seconds = 0.0;
};

/// One tentative deletion and its verdict.
struct MergeDecision {
  std::size_t first_epoch = 0;
  std::size_t column = 0;
  double before = 0.0;  // K-epoch mean with the accepted pattern
  double after = 0.0;   // K-epoch mean with the tentative pattern
  bool accepted = false;
};

struct MergeResult {
  MergePattern pattern;  // accepted deletions, in order
  std::size_t final_columns = 0;
  std::vector<MergeEpoch> history;
  std::vector<MergeDecision> decisions;
  std::vector<EpochMetrics> epochs;
  TraceTable final_table;  // accepted pattern applied to the last epoch's first iteration
};

/// Greedy column removal. Epochs [0, K) measure the unmerged table; each trial
/// then deletes the column with the fewest roots (summed over the trial's first
/// epoch), runs K epochs and keeps the deletion only if the mean simulated
/// epoch time strictly drops. Stops at the first rejection, at one column, or
/// when fewer than K epochs remain; later epochs reuse the accepted pattern.
MergeResult merge_controller(Cluster& cluster, const StrategySpec& strategy,
                             std::size_t total_epochs, std::size_t k);
MergeResult merge_controller(const SimConfig& cfg);

}  // namespace hopgnn
