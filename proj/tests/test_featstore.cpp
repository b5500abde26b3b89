#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "hopgnn/featstore.hpp"
#include "hopgnn/rng.hpp"
#include "hopgnn/sampler.hpp"

using namespace hopgnn;
using hopgnn::testing::fixture_graph;
using hopgnn::testing::fixture_partition;

namespace {

std::vector<Micrograph> fixture_micrographs(std::initializer_list<VertexId> roots) {
  SamplerConfig cfg;
  cfg.n_layers = 2;
  cfg.fanouts = {2};
  std::vector<Micrograph> out;
  for (VertexId r : roots) out.push_back(sample_micrograph(fixture_graph(), cfg, StreamKey{1, 0, 0, r}));
  return out;
}

}  // namespace

TEST(FeatureStore, GenerationIsDeterministic) {
  const PartitionMap p({0, 1, 0}, 2);
  const auto a = FeatureStore::generate(p, 4, 7);
  const auto b = FeatureStore::generate(p, 4, 7);
  for (VertexId v = 0; v < 3; ++v) {
    ASSERT_EQ(a.row(v).size(), 4u);
    EXPECT_TRUE(std::equal(a.row(v).begin(), a.row(v).end(), b.row(v).begin()));
  }
}

TEST(FeatureStore, RowsIndependentOfSharding) {
  std::vector<ServerId> two(10);
  std::vector<ServerId> four(10);
  for (VertexId v = 0; v < 10; ++v) {
    two[v] = v % 2;
    four[v] = (v * 3) % 4;
  }
  const auto a = FeatureStore::generate(PartitionMap(two, 2), 6, 3);
  const auto b = FeatureStore::generate(PartitionMap(four, 4), 6, 3);
  EXPECT_TRUE(std::equal(a.row(5).begin(), a.row(5).end(), b.row(5).begin()));
  EXPECT_TRUE(a.shard_holds(1, 5));
  EXPECT_FALSE(a.shard_holds(0, 5));
  EXPECT_EQ(a.shard_rows(0) + a.shard_rows(1), 10u);
}

TEST(FeatureStore, FileRoundTrip) {
  const PartitionMap p({0, 1, 1, 0}, 2);
  const auto fs = FeatureStore::generate(p, 3, 11);
  std::stringstream buf;
  write_feature_file(buf, fs);
  const auto back = FeatureStore::read(p, buf);
  for (VertexId v = 0; v < 4; ++v)
    EXPECT_TRUE(std::equal(fs.row(v).begin(), fs.row(v).end(), back.row(v).begin()));
}

TEST(FeatureStore, FileRowCountMismatchThrows) {
  const auto fs = FeatureStore::generate(PartitionMap({0, 0}, 1), 2, 1);
  std::stringstream buf;
  write_feature_file(buf, fs);
  EXPECT_THROW(FeatureStore::read(PartitionMap({0, 0, 0}, 1), buf), FormatError);
  std::stringstream bad("NOPE");
  EXPECT_THROW(FeatureStore::read(PartitionMap({0}, 1), bad), FormatError);
}

TEST(Fetch, AllLocalLeavesLedgerEmpty) {
  const auto fs = FeatureStore::generate(PartitionMap({0, 0, 1}, 2), 4, 1);
  CommLedger ledger;
  FetchStats stats;
  const std::vector<VertexId> ids = {0, 1};
  const auto rows = fetch(0, ids, fs, ledger, &stats);
  EXPECT_EQ(rows.size(), 8u);
  EXPECT_EQ(ledger.total_bytes(), 0u);
  EXPECT_EQ(stats.miss_rate(), 0.0);
}

TEST(Fetch, SingleRemoteRow) {
  const auto fs = FeatureStore::generate(PartitionMap({0, 1}, 2), 100, 1);
  CommLedger ledger;
  const std::vector<VertexId> ids = {1};
  const auto rows = fetch(0, ids, fs, ledger);
  EXPECT_EQ(ledger.link(1, 0, Category::Feature), (LinkCounter{400, 1}));
  EXPECT_TRUE(std::equal(rows.begin(), rows.end(), fs.row(1).begin()));
}

TEST(Fetch, RemoteRowsBatchedPerHome) {
  const auto fs = FeatureStore::generate(PartitionMap({0, 1, 1, 1, 2}, 3), 8, 1);
  CommLedger ledger;
  FetchStats stats;
  const std::vector<VertexId> ids = {0, 1, 2, 3, 4};
  fetch(0, ids, fs, ledger, &stats);
  EXPECT_EQ(ledger.link(1, 0, Category::Feature), (LinkCounter{3 * 8 * 4, 1}));
  EXPECT_EQ(ledger.link(2, 0, Category::Feature), (LinkCounter{8 * 4, 1}));
  EXPECT_EQ(ledger.total_messages(), 2u);
  EXPECT_DOUBLE_EQ(stats.miss_rate(), 0.8);
}

TEST(Pregather, FixtureTwoStepsThreeTransmissionsBecomeTwo) {
  // Server 0 hosts micrograph 6 in step 0 and micrograph 5 in step 1.
  const auto ms = fixture_micrographs({6, 5});
  const auto p = fixture_partition();
  std::size_t without = 0;
  for (const auto& m : ms) {
    const Micrograph* one[] = {&m};
    without += plan_pregather(0, one, p).num_rows();
  }
  const Micrograph* both[] = {&ms[0], &ms[1]};
  const auto plan = plan_pregather(0, both, p);
  EXPECT_EQ(without, 3u);
  EXPECT_EQ(plan.num_rows(), 2u);
  EXPECT_EQ(plan.by_source.at(1), (std::vector<VertexId>{1, 3}));
}

TEST(Pregather, LocalOnlyIsEmpty) {
  const std::vector<std::vector<VertexId>> sets = {{4, 5}, {6, 7}};
  EXPECT_TRUE(plan_pregather(0, sets, fixture_partition()).empty());
}

TEST(Pregather, DisjointNeedsGainNothing) {
  const PartitionMap p({0, 0, 1, 1}, 2);
  const std::vector<std::vector<VertexId>> sets = {{2}, {3}};
  const auto plan = plan_pregather(0, sets, p);
  EXPECT_EQ(plan.by_source.at(1), (std::vector<VertexId>{2, 3}));
  EXPECT_EQ(plan.num_rows(), 2u);
}

TEST(Pregather, ExecuteOneMessagePerSource) {
  const PartitionMap p({1, 1, 0}, 2);
  const auto fs = FeatureStore::generate(p, 8, 2);
  const std::vector<std::vector<VertexId>> sets = {{0, 1, 2}};
  CommLedger ledger;
  const auto staged = execute_pregather(plan_pregather(0, sets, p), fs, ledger);
  EXPECT_EQ(ledger.link(1, 0, Category::Feature), (LinkCounter{64, 1}));
  EXPECT_EQ(staged.num_rows(), 2u);
  EXPECT_EQ(staged.bytes(), 64u);
  EXPECT_TRUE(std::equal(staged.row(1).begin(), staged.row(1).end(), fs.row(1).begin()));

  CommLedger empty;
  execute_pregather(PregatherPlan{}, fs, empty);
  EXPECT_EQ(empty.total_messages(), 0u);
}

TEST(Pregather, StagedBytesBelowModelCentricFetchOnFixture) {
  // Model-centric: server 0 trains batch [6, 3] and fetches the remote part of
  // mg(6) and mg(3) in one go.
  const auto p = fixture_partition();
  const auto fs = FeatureStore::generate(p, 4, 1);
  const auto mc = fixture_micrographs({6, 3});
  std::vector<VertexId> ids;
  for (const auto& m : mc) ids.insert(ids.end(), m.vertices().begin(), m.vertices().end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  CommLedger mc_ledger;
  fetch(0, ids, fs, mc_ledger);

  const auto hop = fixture_micrographs({6, 5});
  const Micrograph* both[] = {&hop[0], &hop[1]};
  CommLedger pg_ledger;
  const auto staged = execute_pregather(plan_pregather(0, both, p), fs, pg_ledger);
  EXPECT_LT(staged.bytes(), mc_ledger.category_bytes(Category::Feature));
}

// Pre-gathered rows equal the distinct remote vertices and never exceed the
// per-micrograph fetch count.
TEST(Pregather, RandomConfigProperty) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    CounterRng rng({seed, 0x9e});
    const std::size_t S = 2 + rng.below(4);
    const Graph g = generate_sbm({{30, 30, 30}, 0.15, 0.02, seed});
    const auto p = partition_hash(g, S, seed);
    SamplerConfig cfg;
    cfg.n_layers = 1 + rng.below(3);
    cfg.fanouts = {2 + rng.below(4)};
    std::vector<Micrograph> ms;
    const std::size_t count = 2 + rng.below(6);
    for (std::size_t i = 0; i < count; ++i)
      ms.push_back(sample_micrograph(g, cfg, StreamKey{seed, 0, i, rng.below(90)}));
    const auto at = static_cast<ServerId>(rng.below(S));

    std::set<VertexId> unique_remote;
    std::size_t per_micrograph = 0;
    std::vector<const Micrograph*> ptrs;
    for (const auto& m : ms) {
      ptrs.push_back(&m);
      for (VertexId v : m.vertices()) {
        if (p.home(v) == at) continue;
        unique_remote.insert(v);
        ++per_micrograph;
      }
    }
    const auto plan = plan_pregather(at, ptrs, p);
    EXPECT_EQ(plan.num_rows(), unique_remote.size()) << "seed " << seed;
    EXPECT_LE(plan.num_rows(), per_micrograph) << "seed " << seed;
  }
}
