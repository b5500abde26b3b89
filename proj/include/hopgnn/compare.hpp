#pragma once

#include <vector>

#include "hopgnn/config.hpp"
#include "hopgnn/results_csv.hpp"

namespace hopgnn {

/// model-centric, naive, locality-optimized, hopgnn-mg, hopgnn-mg-pg, hopgnn-all
std::vector<StrategySpec> comparison_strategies();

/// Runs every comparison strategy from identical seeds and returns one
/// whole-run row per strategy, in comparison_strategies() order.
std::vector<ResultRow> compare_strategies(const SimConfig& cfg);

}  // namespace hopgnn
