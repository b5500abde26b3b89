#include <gtest/gtest.h>

#include <algorithm>
#include <queue>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "hopgnn/rng.hpp"
#include "hopgnn/sampler.hpp"

using namespace hopgnn;
using hopgnn::testing::fixture_graph;
using hopgnn::testing::fixture_partition;

namespace {

SamplerConfig node_wise(std::size_t layers, std::size_t fanout) {
  SamplerConfig c;
  c.n_layers = layers;
  c.fanouts = {fanout};
  return c;
}

std::set<VertexId> as_set(std::span<const VertexId> xs) { return {xs.begin(), xs.end()}; }

// Vertices within `hops` of `root`, by breadth-first search.
std::set<VertexId> bfs_ball(const Graph& g, VertexId root, std::size_t hops) {
  std::vector<std::size_t> dist(g.num_vertices(), ~std::size_t{0});
  std::queue<VertexId> q;
  dist[root] = 0;
  q.push(root);
  std::set<VertexId> out;
  while (!q.empty()) {
    const VertexId u = q.front();
    q.pop();
    out.insert(u);
    if (dist[u] == hops) continue;
    for (VertexId v : g.neighbors(u)) {
      if (dist[v] == ~std::size_t{0}) {
        dist[v] = dist[u] + 1;
        q.push(v);
      }
    }
  }
  return out;
}

// Structural checks every micrograph must pass.
void check_structure(const Graph& g, const Micrograph& m, const SamplerConfig& cfg) {
  const std::size_t L = cfg.n_layers;
  ASSERT_EQ(m.layers.size(), L + 1);
  ASSERT_EQ(m.layers[L], std::vector<VertexId>{m.root});
  EXPECT_TRUE(m.edges[0].empty());
  for (std::size_t k = L; k >= 1; --k) {
    const auto& upper = m.layers[k];
    const auto& lower = m.layers[k - 1];
    ASSERT_GE(lower.size(), upper.size());
    EXPECT_TRUE(std::equal(upper.begin(), upper.end(), lower.begin())) << "layer " << k;
    EXPECT_EQ(as_set(lower).size(), lower.size()) << "duplicates in layer " << k - 1;
    std::vector<std::set<VertexId>> srcs(upper.size());
    for (const auto& e : m.edges[k]) {
      ASSERT_LT(e.dst, upper.size());
      ASSERT_LT(e.src, lower.size());
      EXPECT_TRUE(g.has_edge(upper[e.dst], lower[e.src]));
      EXPECT_TRUE(srcs[e.dst].insert(lower[e.src]).second) << "repeated neighbor";
    }
    if (cfg.mode == SamplerMode::NodeWise) {
      const std::size_t fanout = cfg.fanout_for_hop(L - k);
      for (std::size_t i = 0; i < upper.size(); ++i)
        EXPECT_EQ(srcs[i].size(), std::min(fanout, g.degree(upper[i])));
    } else {
      std::set<VertexId> picked;
      for (const auto& s : srcs) picked.insert(s.begin(), s.end());
      EXPECT_LE(picked.size(), cfg.fanout_for_hop(L - k));
    }
  }
}

}  // namespace

TEST(Sampler, StarCenterTakesAllLeavesUnderFanout) {
  const std::vector<std::pair<VertexId, VertexId>> edges = {{0, 1}, {0, 2}};
  const Graph g = Graph::from_edges(3, edges);
  const auto m = sample_micrograph(g, node_wise(1, 10), StreamKey{1, 0, 0, 0});
  EXPECT_EQ(m.layers[0], (std::vector<VertexId>{0, 1, 2}));
  EXPECT_EQ(m.num_edges(), 2u);
}

TEST(Sampler, FixtureMicrographs) {
  const Graph g = fixture_graph();
  const auto cfg = node_wise(2, 2);
  auto vertices = [&](VertexId r) {
    return as_set(sample_micrograph(g, cfg, StreamKey{3, 0, 0, r}).vertices());
  };
  EXPECT_EQ(vertices(6), (std::set<VertexId>{6, 5, 7, 1}));
  EXPECT_EQ(vertices(3), (std::set<VertexId>{3, 0, 1, 4, 5}));
  EXPECT_EQ(vertices(5), (std::set<VertexId>{5, 1, 6, 3, 7}));
  EXPECT_EQ(vertices(0), (std::set<VertexId>{0, 3, 4, 1}));
  EXPECT_EQ(vertices(2), (std::set<VertexId>{2}));
}

TEST(Sampler, SameKeySameMicrograph) {
  const Graph g = generate_sbm({{60, 60}, 0.3, 0.02, 5});
  const auto cfg = node_wise(3, 4);
  for (VertexId r : {0u, 17u, 99u}) {
    const StreamKey key{42, 1, 2, r};
    EXPECT_EQ(sample_micrograph(g, cfg, key), sample_micrograph(g, cfg, key));
  }
}

TEST(Sampler, NodeWiseStructureOnRandomGraphs) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Graph g = generate_sbm({{40, 40}, 0.25, 0.03, seed});
    SamplerConfig cfg;
    cfg.n_layers = 1 + seed % 3;
    cfg.fanouts = {2 + seed % 4};
    const auto m = sample_micrograph(g, cfg, StreamKey{seed, 0, 0, static_cast<VertexId>(seed * 3)});
    check_structure(g, m, cfg);
    const auto ball = bfs_ball(g, m.root, cfg.n_layers);
    for (VertexId v : m.vertices()) EXPECT_TRUE(ball.contains(v));
  }
}

TEST(Sampler, FullFanoutEqualsBfsBall) {
  const Graph g = generate_sbm({{30, 30}, 0.15, 0.02, 2});
  std::size_t max_deg = 0;
  for (VertexId v = 0; v < g.num_vertices(); ++v) max_deg = std::max(max_deg, g.degree(v));
  for (std::size_t L : {1u, 2u, 3u}) {
    const auto cfg = node_wise(L, max_deg);
    for (VertexId r : {0u, 31u, 59u}) {
      const auto m = sample_micrograph(g, cfg, StreamKey{1, 0, 0, r});
      EXPECT_EQ(as_set(m.vertices()), bfs_ball(g, r, L));
    }
  }
}

TEST(Sampler, PerHopFanouts) {
  const Graph g = generate_sbm({{80}, 0.5, 0.5, 3});
  SamplerConfig cfg;
  cfg.n_layers = 2;
  cfg.fanouts = {5, 2};
  const auto m = sample_micrograph(g, cfg, StreamKey{1, 0, 0, 0});
  check_structure(g, m, cfg);
  EXPECT_EQ(m.edges[2].size(), 5u);
  EXPECT_EQ(m.edges[1].size(), 6u * 2u);
}

TEST(Sampler, LayerWiseStructure) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Graph g = generate_sbm({{50, 50}, 0.2, 0.02, seed});
    SamplerConfig cfg;
    cfg.n_layers = 2;
    cfg.fanouts = {6};
    cfg.mode = SamplerMode::LayerWise;
    const auto m = sample_micrograph(g, cfg, StreamKey{seed, 0, 0, static_cast<VertexId>(seed)});
    check_structure(g, m, cfg);
  }
}

TEST(Sampler, IsolatedRootSelfAggregates) {
  const Graph g = fixture_graph();
  for (auto mode : {SamplerMode::NodeWise, SamplerMode::LayerWise}) {
    SamplerConfig cfg = node_wise(3, 2);
    cfg.mode = mode;
    const auto m = sample_micrograph(g, cfg, StreamKey{1, 0, 0, 2});
    EXPECT_EQ(m.num_vertices(), 1u);
    EXPECT_EQ(m.num_edges(), 0u);
    EXPECT_EQ(m.layer_entries(), 4u);
  }
}

TEST(Sampler, RejectsBadInputs) {
  const Graph g = fixture_graph();
  EXPECT_THROW(sample_micrograph(g, node_wise(2, 2), StreamKey{1, 0, 0, 8}), std::out_of_range);
  EXPECT_THROW(sample_micrograph(g, node_wise(0, 2), StreamKey{1, 0, 0, 0}), std::invalid_argument);
  EXPECT_THROW(sample_micrograph(g, node_wise(2, 0), StreamKey{1, 0, 0, 0}), std::invalid_argument);
  SamplerConfig wrong = node_wise(3, 2);
  wrong.fanouts = {1, 2};
  EXPECT_THROW(wrong.validate(), std::invalid_argument);
}

TEST(Subgraph, MembersUnchangedAndSharedVerticesCountedOnce) {
  const Graph g = fixture_graph();
  const auto cfg = node_wise(2, 2);
  const auto m6 = sample_micrograph(g, cfg, StreamKey{1, 0, 0, 6});
  const auto m3 = sample_micrograph(g, cfg, StreamKey{1, 0, 0, 3});
  const Subgraph one = build_subgraph({m6});
  EXPECT_EQ(one.members.size(), 1u);
  const Subgraph sg = build_subgraph({m6, m3});
  ASSERT_EQ(sg.members.size(), 2u);
  EXPECT_EQ(sg.members[0], m6);
  EXPECT_EQ(sg.members[1], m3);
  EXPECT_EQ(sg.roots, (std::vector<VertexId>{6, 3}));
  // {6,5,7,1} and {3,0,1,4,5} share 1 and 5.
  EXPECT_EQ(sg.unique_vertices().size(), 7u);
  EXPECT_THROW(build_subgraph({m6, m6}), std::invalid_argument);
}

TEST(Redistribute, FixtureGroups) {
  const std::vector<std::vector<VertexId>> batches = {{6, 3}, {5, 0}};
  const auto plan = redistribute_roots(batches, fixture_partition());
  EXPECT_EQ(plan.groups[0][0], std::vector<VertexId>{6});
  EXPECT_EQ(plan.groups[1][0], std::vector<VertexId>{5});
  EXPECT_EQ(plan.groups[0][1], std::vector<VertexId>{3});
  EXPECT_EQ(plan.groups[1][1], std::vector<VertexId>{0});
}

TEST(Redistribute, AllRootsOnOneServer) {
  const std::vector<std::vector<VertexId>> batches = {{4, 5}, {6, 7}};
  const auto plan = redistribute_roots(batches, fixture_partition());
  for (std::size_t d = 0; d < 2; ++d) {
    EXPECT_EQ(plan.groups[d][0], batches[d]);
    EXPECT_TRUE(plan.groups[d][1].empty());
  }
}

TEST(Redistribute, SingleServerKeepsBatches) {
  const std::vector<std::vector<VertexId>> batches = {{3, 1, 2}};
  const auto plan = redistribute_roots(batches, PartitionMap({0, 0, 0, 0}, 1));
  EXPECT_EQ(plan.groups[0][0], batches[0]);
}

TEST(LoadImbalance, Examples) {
  MiniBatchPlan even;
  even.batches = {{0, 1, 2, 3}};
  even.groups = {{{0, 1}, {2, 3}}};
  EXPECT_EQ(load_imbalance(even), 0.0);
  MiniBatchPlan skew;
  skew.batches = {{0, 1, 2, 3}};
  skew.groups = {{{0, 1, 2}, {3}}};
  EXPECT_DOUBLE_EQ(load_imbalance(skew), 1.0);
  EXPECT_EQ(load_imbalance(MiniBatchPlan{}), 0.0);
}

TEST(EpochBatches, CoverTrainSetExactlyOnce) {
  std::vector<VertexId> train(103);
  for (VertexId v = 0; v < train.size(); ++v) train[v] = v * 2;
  const auto its = make_epoch_batches(train, 4, 8, 5, 0);
  ASSERT_EQ(its.size(), 4u);  // 32 + 32 + 32 + 7
  std::vector<VertexId> seen;
  for (const auto& it : its) {
    ASSERT_EQ(it.size(), 4u);
    for (const auto& b : it) seen.insert(seen.end(), b.begin(), b.end());
  }
  std::sort(seen.begin(), seen.end());
  EXPECT_EQ(seen, train);
  const auto& last = its.back();
  EXPECT_EQ(last[0].size(), 2u);
  EXPECT_EQ(last[3].size(), 1u);
}

TEST(EpochBatches, SeedAndEpochChangeOrder) {
  std::vector<VertexId> train(64);
  for (VertexId v = 0; v < 64; ++v) train[v] = v;
  EXPECT_EQ(make_epoch_batches(train, 2, 8, 1, 0), make_epoch_batches(train, 2, 8, 1, 0));
  EXPECT_NE(make_epoch_batches(train, 2, 8, 1, 0), make_epoch_batches(train, 2, 8, 1, 1));
  EXPECT_NE(make_epoch_batches(train, 2, 8, 1, 0), make_epoch_batches(train, 2, 8, 2, 0));
}

TEST(EpochBatches, DumpFormat) {
  std::ostringstream out;
  const std::vector<std::vector<VertexId>> batches = {{6, 3}, {5, 0}};
  write_batch_dump(out, 1, 2, batches);
  EXPECT_EQ(out.str(), "1 2 0 6,3\n1 2 1 5,0\n");
}
