#pragma once

#include <utility>
#include <vector>

#include "hopgnn/config.hpp"
#include "hopgnn/graph.hpp"
#include "hopgnn/partition.hpp"

namespace hopgnn::testing {

// Eight-vertex worked example. With fanout 2 and two layers every micrograph
// is fully determined (no vertex has more than two neighbors):
//   mg(6) = {6,5,7,1}    three of four homed with the root on server 0
//   mg(3) = {3,0,1,4,5}  three of five homed with the root on server 1
//   mg(5) = {5,1,6,3,7}, mg(0) = {0,3,4,1}
// Vertex 2 is isolated.
inline Graph fixture_graph() {
  const std::vector<std::pair<VertexId, VertexId>> edges = {{0, 3}, {0, 4}, {1, 3},
                                                            {1, 5}, {5, 6}, {6, 7}};
  return Graph::from_edges(8, edges);
}

inline PartitionMap fixture_partition() {
  return PartitionMap({1, 1, 1, 1, 0, 0, 0, 0}, 2);
}

// m0 = [6, 3], m1 = [5, 0].
inline std::vector<std::vector<std::vector<VertexId>>> fixture_batches() {
  return {{{6, 3}, {5, 0}}};
}

inline SimConfig fixture_config() {
  SimConfig cfg;
  cfg.servers = 2;
  cfg.sampler.n_layers = 2;
  cfg.sampler.fanouts = {2};
  cfg.feature_dim = 4;
  cfg.hidden = 4;
  cfg.classes = 3;
  cfg.epochs = 1;
  cfg.batch_size = 2;
  cfg.partitioner = PartitionerKind::Hash;
  return cfg;
}

// Small SBM run used across engine tests.
inline SimConfig small_sbm_config(std::size_t servers = 4) {
  SimConfig cfg;
  cfg.sbm_blocks = {100, 100};
  cfg.p_in = 0.2;
  cfg.p_out = 0.01;
  cfg.servers = servers;
  cfg.sampler.n_layers = 2;
  cfg.sampler.fanouts = {3};
  cfg.feature_dim = 8;
  cfg.hidden = 8;
  cfg.classes = 4;
  cfg.batch_size = 32;
  cfg.epochs = 1;
  cfg.partitioner = PartitionerKind::Greedy;
  return cfg;
}

// Sparse four-community graph where a greedy partition keeps most two-hop
// neighborhoods on the root's server. Feature rows are wide.
inline SimConfig community_config() {
  SimConfig cfg = small_sbm_config(4);
  cfg.sbm_blocks = {500, 500, 500, 500};
  cfg.p_in = 0.02;
  cfg.p_out = 0.0001;
  cfg.feature_dim = 128;
  return cfg;
}

}  // namespace hopgnn::testing
