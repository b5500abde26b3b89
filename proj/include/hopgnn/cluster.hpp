#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hopgnn/comm_ledger.hpp"
#include "hopgnn/config.hpp"
#include "hopgnn/featstore.hpp"
#include "hopgnn/gnn.hpp"
#include "hopgnn/graph.hpp"
#include "hopgnn/partition.hpp"
#include "hopgnn/trace_table.hpp"

namespace hopgnn {

/// Result of one training iteration under one strategy.
struct IterationMetrics {
  double sim_seconds = 0.0;
  std::size_t steps = 0;
  std::size_t columns = 0;
  CommLedger ledger;
  std::vector<double> server_busy;
  FetchStats fetch;
  std::uint64_t staged_bytes = 0;  // pre-gathered rows held across all servers
  double imbalance = 0.0;
  double loss_sum = 0.0;
  std::size_t loss_count = 0;
  /// trained[d]: roots model d actually trained, ascending.
  std::vector<std::vector<VertexId>> trained;
  /// Set when some model trained a different root set than its mini-batch.
  bool composition_diverged = false;

  std::uint64_t bytes(Category c) const { return ledger.category_bytes(c); }
};

struct EpochMetrics {
  std::size_t epoch = 0;
  std::string strategy;
  std::size_t iterations = 0;
  double sim_seconds = 0.0;
  std::size_t steps = 0;
  std::size_t columns = 0;
  CommLedger ledger;
  std::vector<double> server_busy;
  FetchStats fetch;
  std::uint64_t staged_bytes = 0;  // largest per-iteration staged total
  double imbalance = 0.0;          // mean over iterations
  double alpha = 0.0;
  double mean_loss = 0.0;
  bool composition_diverged = false;

  std::uint64_t bytes(Category c) const { return ledger.category_bytes(c); }
};

/// Remote training-data bytes per iteration over model parameter bytes.
double alpha_ratio(double remote_bytes_per_iteration, const ModelDims& dims);
double alpha_ratio(const EpochMetrics& m, const ModelDims& dims);

/// The simulated N-server cluster: one graph partition, feature shard and model
/// replica per server. Model d starts on server d.
class Cluster {
 public:
  explicit Cluster(const SimConfig& cfg);
  /// Uses the given graph and partition instead of the configured sources.
  Cluster(const SimConfig& cfg, Graph graph, PartitionMap partition);

  const SimConfig& config() const noexcept { return cfg_; }
  const Graph& graph() const noexcept { return graph_; }
  const PartitionMap& partition() const noexcept { return partition_; }
  const FeatureStore& features() const noexcept { return features_; }
  const LabelOracle& labels() const noexcept { return labels_; }
  std::span<const ModelState> models() const noexcept { return models_; }
  const std::vector<VertexId>& train_vertices() const noexcept { return train_; }
  std::size_t num_servers() const noexcept { return cfg_.servers; }

  /// Replays the same [iteration][model] root lists in every epoch.
  void set_fixed_batches(std::vector<std::vector<std::vector<VertexId>>> iterations);
  std::vector<std::vector<std::vector<VertexId>>> epoch_batches(std::size_t epoch) const;

  /// Merged Trace Table of one iteration.
  TraceTable iteration_table(std::size_t epoch, std::size_t iteration,
                             std::span<const std::vector<VertexId>> batches,
                             const MergePattern& pattern) const;
  /// Column totals summed over every iteration of `epoch` under `pattern`.
  std::vector<std::size_t> epoch_column_totals(std::size_t epoch, const MergePattern& pattern) const;

  IterationMetrics run_iteration(const StrategySpec& strategy, std::size_t epoch,
                                 std::size_t iteration,
                                 std::span<const std::vector<VertexId>> batches,
                                 const MergePattern& pattern = {});
  EpochMetrics run_epoch(const StrategySpec& strategy, std::size_t epoch,
                         const MergePattern& pattern = {},
                         std::vector<IterationMetrics>* iterations = nullptr);

  /// Restores the initial parameters on every replica.
  void reset_models();

 private:
  void init();

  SimConfig cfg_;
  Graph graph_;
  PartitionMap partition_;
  FeatureStore features_;
  LabelOracle labels_;
  std::vector<VertexId> train_;
  ModelState initial_;
  std::vector<ModelState> models_;
  std::vector<GradAccumulator> accs_;
  std::vector<std::vector<std::vector<VertexId>>> fixed_batches_;
};

Graph build_graph(const SimConfig& cfg);
PartitionMap build_partition(const SimConfig& cfg, const Graph& g);

struct RunResult {
  std::vector<EpochMetrics> epochs;
  ModelState final_model;
};

/// Runs cfg.epochs epochs of one strategy from freshly initialized models.
RunResult run_strategy(const SimConfig& cfg, const StrategySpec& strategy);
RunResult run_model_centric(const SimConfig& cfg);
RunResult run_naive_feature_centric(const SimConfig& cfg);
RunResult run_locality_optimized(const SimConfig& cfg);
/// Honors cfg.strategy.pregather; merging goes through merge_controller.
RunResult run_hopgnn(const SimConfig& cfg);

}  // namespace hopgnn
