#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "hopgnn/cost_model.hpp"
#include "hopgnn/gnn.hpp"
#include "hopgnn/graph.hpp"
#include "hopgnn/sampler.hpp"

namespace hopgnn {

enum class GraphKind { Sbm, EdgeList, CsrBinary };
enum class PartitionerKind { Hash, Greedy, File };
enum class StrategyKind { ModelCentric, Naive, LocalityOptimized, HopGnn };

struct StrategySpec {
  StrategyKind kind = StrategyKind::HopGnn;
  bool pregather = false;
  bool merge = false;

  /// model-centric, naive, locality-optimized, hopgnn-mg, hopgnn-mg-pg,
  /// hopgnn-mg-merge, hopgnn-all
  std::string name() const;
  static StrategySpec parse(std::string_view name);
};

/// Everything needed to reproduce a simulated run. Parsed from ASCII
/// "key = value" lines; see README for the key list.
struct SimConfig {
  GraphKind graph = GraphKind::Sbm;
  std::string graph_path;
  std::vector<std::size_t> sbm_blocks{100, 100};
  double p_in = 0.2;
  double p_out = 0.01;

  PartitionerKind partitioner = PartitionerKind::Greedy;
  std::string partition_path;
  double slack = 0.05;

  std::size_t servers = 4;
  SamplerConfig sampler;

  std::size_t feature_dim = 8;
  std::string feature_path;  // empty: generated features

  std::size_t hidden = 8;
  std::size_t classes = 4;
  Arch arch = Arch::Gcn;

  StrategySpec strategy;
  CostModel cost;

  std::uint64_t seed = 1;
  std::size_t epochs = 3;
  std::size_t merge_k = 1;
  std::size_t batch_size = 32;
  std::size_t iters_per_epoch = 0;  // 0: run the whole epoch
  double lr = 0.1;
  double train_fraction = 1.0;
  bool compute = true;
  std::size_t threads = 1;

  /// Component seeds derive from `seed` so --seed reseeds a whole run.
  std::uint64_t component_seed(std::string_view component) const;
  SbmSpec sbm_spec() const;
  ModelDims model_dims() const;

  /// Applies one "key = value" setting; throws ConfigError.
  void set(std::string_view key, std::string_view value);
  /// Throws ConfigError when fields are inconsistent.
  void validate() const;
};

SimConfig parse_config(std::istream& in);
SimConfig load_config(const std::string& path);
/// Canonical key = value rendering, parseable by parse_config.
void write_config(std::ostream& out, const SimConfig& cfg);

}  // namespace hopgnn
