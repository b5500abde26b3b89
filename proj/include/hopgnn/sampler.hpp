#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "hopgnn/common.hpp"
#include "hopgnn/graph.hpp"
#include "hopgnn/partition.hpp"
#include "hopgnn/rng.hpp"

namespace hopgnn {

enum class SamplerMode { NodeWise, LayerWise };

struct SamplerConfig {
  std::size_t n_layers = 2;
  /// fanouts[h] caps the hop that expands layer L-h into layer L-h-1 (the
  /// root's own neighbors use fanouts[0]). A single entry applies to all hops.
  std::vector<std::size_t> fanouts{10};
  SamplerMode mode = SamplerMode::NodeWise;
  std::uint64_t seed = 0;

  std::size_t fanout_for_hop(std::size_t hop) const;
  void validate() const;
};

/// One aggregation input: position in layer k aggregates position `src` of
/// layer k-1.
struct LayerEdge {
  std::uint32_t dst;
  std::uint32_t src;
  friend bool operator==(const LayerEdge&, const LayerEdge&) = default;
};

/// Per-root layered computation graph.
///
/// layers[L] == {root}. Every layers[k] is a prefix of layers[k-1], so the
/// vertex at position i of layer k finds its own previous activation at
/// position i of layer k-1; edges[k] lists its sampled neighbors. A vertex
/// without sampled neighbors aggregates only itself. layers[0] therefore holds
/// every vertex the micrograph touches.
struct Micrograph {
  VertexId root = 0;
  std::vector<std::vector<VertexId>> layers;
  std::vector<std::vector<LayerEdge>> edges;  // edges[0] is always empty

  std::size_t num_layers() const noexcept { return layers.empty() ? 0 : layers.size() - 1; }
  std::span<const VertexId> vertices() const noexcept { return layers.front(); }
  std::size_t num_vertices() const noexcept { return layers.front().size(); }
  /// Sum of layer sizes over 0..L; the unit of simulated compute work.
  std::size_t layer_entries() const noexcept;
  std::size_t num_edges() const noexcept;

  friend bool operator==(const Micrograph&, const Micrograph&) = default;
};

/// Samples the micrograph of `key.root`. Pure in (g, cfg, key): any server
/// replaying the same key obtains the same micrograph.
Micrograph sample_micrograph(const Graph& g, const SamplerConfig& cfg, const StreamKey& key);

/// Mini-batch computation: the disjoint union of its members' micrographs.
struct Subgraph {
  std::vector<Micrograph> members;
  std::vector<VertexId> roots;

  /// Distinct vertices across all members.
  std::vector<VertexId> unique_vertices() const;
};

/// Throws std::invalid_argument on duplicate roots.
Subgraph build_subgraph(std::vector<Micrograph> micros);

/// batches[d] is model d's mini-batch; groups[d][s] holds the roots of
/// batches[d] homed at server s, in batch order.
struct MiniBatchPlan {
  std::vector<std::vector<VertexId>> batches;
  std::vector<std::vector<std::vector<VertexId>>> groups;

  std::size_t num_models() const noexcept { return batches.size(); }
  std::size_t num_servers() const noexcept { return groups.empty() ? 0 : groups.front().size(); }
  /// Roots landing on server s across all models.
  std::size_t server_total(ServerId s) const;
};

MiniBatchPlan redistribute_roots(std::span<const std::vector<VertexId>> batches,
                                 const PartitionMap& p);

/// (max - min) / mean of per-server root totals; 0 for an empty plan.
double load_imbalance(const MiniBatchPlan& plan);

/// Shuffles `train` with a stream keyed on (seed, epoch) and cuts it into
/// iterations of n_models * batch_size roots. A short final iteration is split
/// as evenly as possible across models. Result: [iteration][model] -> roots.
std::vector<std::vector<std::vector<VertexId>>> make_epoch_batches(
    std::span<const VertexId> train, std::size_t n_models, std::size_t batch_size,
    std::uint64_t seed, std::uint64_t epoch);

/// Debug dump: one "epoch iter model root,root,..." line per model.
void write_batch_dump(std::ostream& out, std::uint64_t epoch, std::uint64_t iteration,
                      std::span<const std::vector<VertexId>> batches);

}  // namespace hopgnn
