#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "hopgnn/config.hpp"
#include "hopgnn/partition.hpp"
#include "hopgnn/sampler.hpp"

namespace hopgnn {

/// Fraction of the micrograph's distinct vertices homed with its root. The
/// root counts as co-located unless `include_root` is false.
double r_micro(const Micrograph& m, const PartitionMap& p, bool include_root = true);

/// Mean over roots of the fraction of the subgraph's distinct vertices homed
/// with that root. Throws std::invalid_argument for an empty subgraph.
double r_sub(const Subgraph& sg, const PartitionMap& p, bool include_root = true);

struct LocalityRow {
  std::size_t servers = 0;
  std::size_t layers = 0;
  SamplerMode mode = SamplerMode::NodeWise;
  PartitionerKind partitioner = PartitionerKind::Hash;
  double r_micro = 0.0;
  double r_sub = 0.0;
  std::size_t samples = 0;  // micrographs measured
};

struct LocalityStudy {
  std::vector<PartitionerKind> partitioners{PartitionerKind::Hash, PartitionerKind::Greedy};
  std::vector<SamplerMode> modes{SamplerMode::NodeWise};
  std::vector<std::size_t> servers{2, 4, 8, 16};
  std::vector<std::size_t> layers{2};
  std::vector<std::size_t> fanouts{10};
  std::size_t batch_size = 256;
  std::size_t batches = 4;  // sampled mini-batches per row
  double slack = 0.05;
  std::uint64_t seed = 1;
  bool include_root = true;
  std::size_t threads = 1;
};

/// One row per (partitioner, mode, servers, layers), in that nesting order.
/// File partitioners are rejected with ConfigError.
std::vector<LocalityRow> locality_report(const Graph& g, const LocalityStudy& study);

/// Header: servers,layers,sampler,partitioner,r_micro,r_sub,r_micro_pct,r_sub_pct,samples
void write_locality_csv(std::ostream& out, const std::vector<LocalityRow>& rows);

}  // namespace hopgnn
