#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "hopgnn/cluster.hpp"
#include "hopgnn/merge.hpp"

using namespace hopgnn;
using namespace hopgnn::testing;

namespace {

const StrategySpec kModelCentric{StrategyKind::ModelCentric, false, false};
const StrategySpec kNaive{StrategyKind::Naive, false, false};
const StrategySpec kLocality{StrategyKind::LocalityOptimized, false, false};
const StrategySpec kHop{StrategyKind::HopGnn, false, false};
const StrategySpec kHopPg{StrategyKind::HopGnn, true, false};

Cluster fixture_cluster() {
  Cluster c(fixture_config(), fixture_graph(), fixture_partition());
  c.set_fixed_batches(fixture_batches());
  return c;
}

std::uint64_t remote_rows(const IterationMetrics& m) { return m.fetch.remote_rows; }

double max_rel_diff(const Parameters& a, const Parameters& b) {
  const auto fa = a.flatten();
  const auto fb = b.flatten();
  double worst = 0.0;
  for (std::size_t i = 0; i < fa.size(); ++i)
    worst = std::max(worst, std::abs(fa[i] - fb[i]) / std::max(1e-12, std::abs(fb[i])));
  return worst;
}

std::uint64_t ledger_event_total(const CommLedger& l) {
  std::uint64_t total = 0;
  for (const auto& e : l.events()) total += e.bytes;
  return total;
}

}  // namespace

TEST(Fixture, ModelCentricFetchesOnePlusTwoRowsAtServerZero) {
  Cluster c = fixture_cluster();
  const auto its = c.epoch_batches(0);
  const IterationMetrics m = c.run_iteration(kModelCentric, 0, 0, its[0]);
  const std::uint64_t row_bytes = 4 * 4;
  // Server 0 trains [6, 3]: remote {1} for mg(6), {0, 3} more for mg(3).
  EXPECT_EQ(m.ledger.link(1, 0, Category::Feature), (LinkCounter{3 * row_bytes, 1}));
  // Server 1 trains [5, 0]: remote {4, 5, 6, 7}.
  EXPECT_EQ(m.ledger.link(0, 1, Category::Feature), (LinkCounter{4 * row_bytes, 1}));
  EXPECT_EQ(remote_rows(m), 7u);
  EXPECT_EQ(m.bytes(Category::Model), 0u);
  EXPECT_EQ(m.bytes(Category::Intermediate), 0u);
  EXPECT_EQ(m.steps, 1u);
}

TEST(Fixture, HopGnnFetchesFewerRowsThanModelCentric) {
  Cluster mc = fixture_cluster();
  Cluster hop = fixture_cluster();
  Cluster pg = fixture_cluster();
  const auto its = mc.epoch_batches(0);
  const auto a = mc.run_iteration(kModelCentric, 0, 0, its[0]);
  const auto b = hop.run_iteration(kHop, 0, 0, its[0]);
  const auto c = pg.run_iteration(kHopPg, 0, 0, its[0]);
  EXPECT_EQ(remote_rows(b), 6u);
  EXPECT_LT(b.bytes(Category::Feature), a.bytes(Category::Feature));
  // Pre-gathering: server 0 needs {1} then {1, 3}; server 1 needs {4} then {4, 5}.
  EXPECT_EQ(c.bytes(Category::Feature), 4u * 4 * 4);
  EXPECT_EQ(c.ledger.category_messages(Category::Feature), 2u);
  EXPECT_EQ(c.staged_bytes, 4u * 4 * 4);
  // Miss rate counts rows used, whether staged or fetched on demand.
  EXPECT_EQ(b.fetch.remote_rows, c.fetch.remote_rows);
  EXPECT_EQ(b.steps, 2u);
  // One migration per model, model and gradient each.
  const auto pb = fixture_config().model_dims().param_bytes();
  EXPECT_EQ(b.bytes(Category::Model), 2 * pb);
  EXPECT_LE(max_rel_diff(hop.models()[0], mc.models()[0]), 1e-9);
}

TEST(Fixture, SimulatedTimeFollowsCostModel) {
  SimConfig cfg = fixture_config();
  cfg.cost = {1000.0, 0.01, 0.5, 0.0, 0.0};
  Cluster c(cfg, fixture_graph(), fixture_partition());
  c.set_fixed_batches(fixture_batches());
  const auto its = c.epoch_batches(0);
  const auto m = c.run_iteration(kModelCentric, 0, 0, its[0]);
  // Server 1 receives 4 rows * 16 bytes in one message; server 0 receives 48.
  const double step = 0.01 + 64.0 / 1000.0 + 0.5;
  const double allreduce = ring_allreduce_time(2, cfg.model_dims().param_bytes(), cfg.cost);
  EXPECT_DOUBLE_EQ(m.sim_seconds, step + allreduce);
  EXPECT_DOUBLE_EQ(m.server_busy[1], 0.01 + 64.0 / 1000.0 + allreduce);
}

TEST(Fixture, DuplicateRootIsAnInvariantViolation) {
  Cluster c(fixture_config(), fixture_graph(), fixture_partition());
  c.set_fixed_batches({{{6, 3}, {3, 0}}});
  EXPECT_THROW(c.run_epoch(kHop, 0), InvariantViolation);
}

TEST(SingleServer, AllStrategiesMatchModelCentric) {
  SimConfig cfg = small_sbm_config(1);
  cfg.batch_size = 40;
  const RunResult mc = run_model_centric(cfg);
  EXPECT_EQ(mc.epochs[0].bytes(Category::Feature), 0u);
  for (const StrategySpec& s : {kNaive, kLocality, kHop, kHopPg}) {
    const RunResult r = run_strategy(cfg, s);
    ASSERT_EQ(r.epochs.size(), mc.epochs.size());
    EXPECT_EQ(r.epochs[0].ledger, mc.epochs[0].ledger) << s.name();
    EXPECT_EQ(r.epochs[0].steps, mc.epochs[0].steps) << s.name();
    EXPECT_DOUBLE_EQ(r.epochs[0].sim_seconds, mc.epochs[0].sim_seconds) << s.name();
    EXPECT_EQ(r.epochs[0].fetch.miss_rate(), 0.0) << s.name();
    EXPECT_LE(max_rel_diff(r.final_model, mc.final_model), 1e-12) << s.name();
  }
}

TEST(Fidelity, HopGnnMatchesModelCentricParameters) {
  for (Arch arch : {Arch::Gcn, Arch::SageMean}) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      SimConfig cfg = small_sbm_config(4);
      cfg.arch = arch;
      cfg.seed = seed;
      cfg.epochs = 2;
      cfg.sampler.mode = seed == 3 ? SamplerMode::LayerWise : SamplerMode::NodeWise;
      const RunResult mc = run_model_centric(cfg);
      const RunResult hop = run_strategy(cfg, kHopPg);
      EXPECT_LE(max_rel_diff(hop.final_model, mc.final_model), 1e-9);
      EXPECT_FALSE(mc.final_model == Parameters::init(cfg.model_dims(), cfg.component_seed("model")));
    }
  }
}

TEST(Fidelity, MergedScheduleKeepsParameters) {
  SimConfig cfg = small_sbm_config(4);
  Cluster mc(cfg);
  Cluster hop(cfg);
  mc.run_epoch(kModelCentric, 0);
  const auto em = hop.run_epoch(kHop, 0, {1, 0});
  EXPECT_EQ(em.columns, 2u);
  EXPECT_LE(max_rel_diff(hop.models()[0], mc.models()[0]), 1e-9);
  EXPECT_FALSE(em.composition_diverged);
}

TEST(LocalityOptimized, CompositionDivergesHopGnnDoesNot) {
  SimConfig cfg = small_sbm_config(4);
  Cluster lo(cfg);
  Cluster hop(cfg);
  const auto its = lo.epoch_batches(0);
  const auto a = lo.run_iteration(kLocality, 0, 0, its[0]);
  const auto b = hop.run_iteration(kHop, 0, 0, its[0]);
  EXPECT_TRUE(a.composition_diverged);
  EXPECT_FALSE(b.composition_diverged);
  for (ModelId d = 0; d < 4; ++d) {
    auto expected = its[0][d];
    std::sort(expected.begin(), expected.end());
    EXPECT_EQ(b.trained[d], expected);
  }
  EXPECT_EQ(a.bytes(Category::Model), 0u);
  EXPECT_LE(a.bytes(Category::Feature), b.bytes(Category::Feature));
  EXPECT_GT(max_rel_diff(lo.models()[0], hop.models()[0]), 1e-9);
}

TEST(LocalityOptimized, FeatureBytesNeverExceedHopGnn) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SimConfig cfg = small_sbm_config(2 + seed % 3);
    cfg.seed = seed;
    cfg.compute = false;
    const auto lo = run_locality_optimized(cfg);
    const auto hop = run_hopgnn(cfg);
    EXPECT_LE(lo.epochs[0].bytes(Category::Feature), hop.epochs[0].bytes(Category::Feature));
  }
}

TEST(Naive, DeepConfigMovesMoreThanModelCentric) {
  SimConfig cfg = small_sbm_config(4);
  cfg.sampler.n_layers = 6;
  cfg.hidden = 256;
  cfg.feature_dim = 16;
  cfg.compute = false;
  cfg.iters_per_epoch = 2;
  const auto naive = run_naive_feature_centric(cfg);
  const auto mc = run_model_centric(cfg);
  EXPECT_GT(naive.epochs[0].ledger.total_bytes(), mc.epochs[0].ledger.total_bytes());
  EXPECT_GT(naive.epochs[0].bytes(Category::Intermediate), 0u);
  EXPECT_GT(naive.epochs[0].bytes(Category::Topology), 0u);
  EXPECT_EQ(naive.epochs[0].bytes(Category::Feature), 0u);
}

TEST(Naive, ShallowWideConfigMovesLessThanModelCentric) {
  SimConfig cfg = small_sbm_config(4);
  cfg.sampler.n_layers = 1;
  cfg.sampler.fanouts = {10};
  cfg.hidden = 4;
  cfg.feature_dim = 512;
  cfg.compute = false;
  const auto naive = run_naive_feature_centric(cfg);
  const auto mc = run_model_centric(cfg);
  EXPECT_LT(naive.epochs[0].ledger.total_bytes(), mc.epochs[0].ledger.total_bytes());
}

TEST(Naive, ComputesTheSameGradients) {
  SimConfig cfg = small_sbm_config(3);
  const auto naive = run_naive_feature_centric(cfg);
  const auto mc = run_model_centric(cfg);
  EXPECT_LE(max_rel_diff(naive.final_model, mc.final_model), 1e-9);
}

TEST(Naive, FixtureItinerary) {
  Cluster c = fixture_cluster();
  const auto its = c.epoch_batches(0);
  const auto m = c.run_iteration(kNaive, 0, 0, its[0]);
  // Both models need both servers: home, other, home.
  EXPECT_EQ(m.steps, 3u);
  const auto pb = fixture_config().model_dims().param_bytes();
  EXPECT_EQ(m.bytes(Category::Model), 4 * pb);
  EXPECT_EQ(m.ledger.category_messages(Category::Model), 4u);
  EXPECT_GT(m.bytes(Category::Intermediate), 0u);
}

TEST(Determinism, IndependentOfThreadCount) {
  for (const StrategySpec& s : {kModelCentric, kNaive, kLocality, kHopPg}) {
    SimConfig one = small_sbm_config(4);
    one.epochs = 2;
    SimConfig many = one;
    many.threads = 4;
    const auto a = run_strategy(one, s);
    const auto b = run_strategy(many, s);
    for (std::size_t e = 0; e < a.epochs.size(); ++e) {
      EXPECT_EQ(a.epochs[e].ledger, b.epochs[e].ledger) << s.name();
      EXPECT_EQ(a.epochs[e].sim_seconds, b.epochs[e].sim_seconds) << s.name();
      EXPECT_EQ(a.epochs[e].server_busy, b.epochs[e].server_busy) << s.name();
    }
    EXPECT_EQ(a.final_model, b.final_model) << s.name();
  }
}

TEST(Ledger, CategoryTotalsMatchEventLog) {
  SimConfig cfg = small_sbm_config(4);
  for (const StrategySpec& s : {kModelCentric, kNaive, kHopPg}) {
    const auto r = run_strategy(cfg, s);
    const auto& l = r.epochs[0].ledger;
    std::uint64_t by_category = 0;
    for (Category c : kAllCategories) by_category += l.category_bytes(c);
    EXPECT_EQ(by_category, ledger_event_total(l)) << s.name();
    EXPECT_EQ(by_category, l.total_bytes()) << s.name();
  }
}

TEST(Migration, ModelAndGradientShippedEveryHopIncludingIdleCells) {
  SimConfig cfg = small_sbm_config(4);
  cfg.compute = false;
  Cluster c(cfg);
  std::vector<IterationMetrics> its;
  const auto em = c.run_epoch(kHop, 0, {}, &its);
  const auto pb = cfg.model_dims().param_bytes();
  const std::uint64_t hops = em.iterations * 4 * 3;
  EXPECT_EQ(em.bytes(Category::Model), hops * pb);
  std::uint64_t allreduce = 0;
  for (auto b : ring_allreduce_link_bytes(4, pb)) allreduce += b;
  EXPECT_EQ(em.bytes(Category::Gradient), hops * pb + em.iterations * allreduce);
  EXPECT_EQ(em.steps, em.iterations * 4);
}

TEST(Alpha, Examples) {
  ModelDims dims{1, 1, 1, 2, Arch::Gcn};
  // in*hidden + hidden + hidden*classes = 2 + classes.
  dims.n_classes = 998;
  ASSERT_EQ(dims.param_count(), 1000u);
  EXPECT_DOUBLE_EQ(alpha_ratio(53600.0, dims), 13.4);
  EXPECT_EQ(alpha_ratio(0.0, dims), 0.0);
}

TEST(Alpha, ExceedsOneOnMidSizeGraph) {
  SimConfig cfg;
  cfg.sbm_blocks = {1000, 1000, 1000, 1000};
  cfg.p_in = 0.005;
  cfg.p_out = 0.0005;
  cfg.servers = 4;
  cfg.sampler.n_layers = 3;
  cfg.sampler.fanouts = {10};
  cfg.feature_dim = 128;
  cfg.hidden = 16;
  cfg.partitioner = PartitionerKind::Hash;
  cfg.compute = false;
  cfg.iters_per_epoch = 2;
  const auto r = run_model_centric(cfg);
  EXPECT_GT(r.epochs[0].alpha, 1.0);
  EXPECT_DOUBLE_EQ(r.epochs[0].alpha, alpha_ratio(r.epochs[0], cfg.model_dims()));
}

TEST(MergeController, NothingToSaveKeepsAllColumns) {
  SimConfig cfg = small_sbm_config(4);
  cfg.cost = {std::numeric_limits<double>::infinity(), 0.0, 0.0, 0.0, 0.0};
  cfg.epochs = 4;
  cfg.compute = false;
  const MergeResult r = merge_controller(cfg);
  EXPECT_EQ(r.final_columns, 4u);
  EXPECT_TRUE(r.pattern.empty());
  ASSERT_EQ(r.decisions.size(), 1u);
  EXPECT_FALSE(r.decisions[0].accepted);
}

TEST(MergeController, SyncDominatedMergesToOneColumn) {
  SimConfig cfg = small_sbm_config(4);
  cfg.cost = {1e12, 0.0, 10.0, 0.0, 0.0};
  cfg.epochs = 6;
  cfg.compute = false;
  const MergeResult r = merge_controller(cfg);
  EXPECT_EQ(r.final_columns, 1u);
  EXPECT_EQ(r.pattern.size(), 3u);
  EXPECT_TRUE(r.final_table.columns_are_bijections());
  EXPECT_EQ(r.final_table.num_columns(), 1u);
}

TEST(MergeController, BandwidthDominatedKeepsAllColumns) {
  SimConfig cfg = community_config();
  cfg.cost = {1e6, 0.0, 0.0, 0.0, 0.0};
  cfg.epochs = 4;
  cfg.compute = false;
  const MergeResult r = merge_controller(cfg);
  EXPECT_EQ(r.final_columns, 4u);
}

TEST(MergeController, HistoryIsMonotoneThenConstant) {
  SimConfig cfg = small_sbm_config(4);
  cfg.cost.sync_overhead = 2e-3;
  cfg.epochs = 8;
  cfg.merge_k = 2;
  cfg.compute = false;
  const MergeResult r = merge_controller(cfg);
  ASSERT_EQ(r.history.size(), 8u);
  ASSERT_EQ(r.epochs.size(), 8u);
  // Accepted column counts never rise; steady epochs all use the final table.
  std::size_t accepted = 4;
  for (const auto& d : r.decisions) {
    if (d.accepted) {
      EXPECT_LT(d.after, d.before);
      --accepted;
    }
  }
  EXPECT_EQ(accepted, r.final_columns);
  for (const auto& h : r.history)
    if (h.phase == MergePhase::Steady) EXPECT_EQ(h.columns, r.final_columns);
  for (std::size_t i = 0; i < cfg.merge_k; ++i) EXPECT_EQ(r.history[i].phase, MergePhase::Baseline);
}

TEST(MergeController, TablesKeepInvariantsAfterEveryStep) {
  SimConfig cfg = small_sbm_config(4);
  cfg.cost = {1e12, 0.0, 10.0, 0.0, 0.0};
  cfg.epochs = 6;
  cfg.compute = false;
  Cluster c(cfg);
  const MergeResult r = merge_controller(c, kHop, cfg.epochs, 1);
  for (std::size_t n = 0; n <= r.pattern.size(); ++n) {
    const MergePattern prefix(r.pattern.begin(), r.pattern.begin() + static_cast<std::ptrdiff_t>(n));
    const auto its = c.epoch_batches(0);
    for (std::size_t i = 0; i < its.size(); ++i) {
      const TraceTable tt = c.iteration_table(0, i, its[i], prefix);
      EXPECT_TRUE(tt.columns_are_bijections());
      const auto rows = tt.row_totals();
      for (ModelId d = 0; d < 4; ++d) EXPECT_EQ(rows[d], its[i][d].size());
    }
  }
}

TEST(ClusterSetup, RejectsMismatchedPartition) {
  SimConfig cfg = fixture_config();
  EXPECT_THROW(Cluster(cfg, fixture_graph(), PartitionMap({0, 0, 0}, 2)), ConfigError);
  cfg.servers = 3;
  EXPECT_THROW(Cluster(cfg, fixture_graph(), fixture_partition()), ConfigError);
}
