#include "hopgnn/cluster.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "hopgnn/merge.hpp"
#include "hopgnn/parallel.hpp"
#include "hopgnn/rng.hpp"

namespace hopgnn {

namespace {

struct Task {
  ModelId model = 0;
  std::vector<VertexId> roots;
};

// steps[c][s]: tasks server s runs during time step c.
using Schedule = std::vector<std::vector<std::vector<Task>>>;

// Micrographs of one iteration, looked up by root.
class MicroIndex {
 public:
  MicroIndex(const Graph& g, const SamplerConfig& sc, std::uint64_t seed, std::size_t epoch,
             std::size_t iteration, std::span<const std::vector<VertexId>> batches,
             std::size_t threads) {
    for (const auto& b : batches) roots_.insert(roots_.end(), b.begin(), b.end());
    micros_.resize(roots_.size());
    parallel_for(roots_.size(), threads, [&](std::size_t i) {
      micros_[i] = sample_micrograph(g, sc, StreamKey{seed, epoch, iteration, roots_[i]});
    });
    pos_.reserve(roots_.size() * 2);
    for (std::size_t i = 0; i < roots_.size(); ++i)
      if (!pos_.try_emplace(roots_[i], i).second)
        throw InvariantViolation("root " + std::to_string(roots_[i]) +
                                 " appears twice in one iteration");
  }

  const Micrograph& at(VertexId root) const { return micros_[pos_.at(root)]; }

 private:
  std::vector<VertexId> roots_;
  std::vector<Micrograph> micros_;
  std::unordered_map<VertexId, std::size_t> pos_;
};

std::vector<VertexId> union_vertices(const std::vector<const Micrograph*>& ms) {
  std::vector<VertexId> ids;
  for (const Micrograph* m : ms) ids.insert(ids.end(), m->vertices().begin(), m->vertices().end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::uint64_t micrograph_work(const Micrograph& m, std::size_t dim, std::size_t hidden) {
  std::uint64_t work = m.layers[0].size() * dim;
  for (std::size_t k = 1; k < m.layers.size(); ++k) work += m.layers[k].size() * hidden;
  return work;
}

// Output of one server over one time step.
struct ServerStep {
  ServerLoad load;
  CommLedger ledger;
  FetchStats fetch;
  double loss = 0.0;
  std::size_t losses = 0;
};

void add_received(ServerLoad& load, const CommLedger& ledger) {
  load.messages += ledger.total_messages();
  load.bytes += ledger.total_bytes();
}

}  // namespace

double alpha_ratio(double remote_bytes_per_iteration, const ModelDims& dims) {
  const auto param_bytes = static_cast<double>(dims.param_bytes());
  if (param_bytes <= 0.0) throw std::invalid_argument("alpha_ratio: model has no parameters");
  return remote_bytes_per_iteration / param_bytes;
}

double alpha_ratio(const EpochMetrics& m, const ModelDims& dims) {
  if (m.iterations == 0) return 0.0;
  return alpha_ratio(static_cast<double>(m.bytes(Category::Feature)) /
                         static_cast<double>(m.iterations),
                     dims);
}

Graph build_graph(const SimConfig& cfg) {
  switch (cfg.graph) {
    case GraphKind::Sbm: return generate_sbm(cfg.sbm_spec());
    case GraphKind::EdgeList: {
      std::ifstream in(cfg.graph_path);
      if (!in) throw ConfigError("cannot open graph file '" + cfg.graph_path + "'");
      return load_edge_list(in);
    }
    case GraphKind::CsrBinary: {
      std::ifstream in(cfg.graph_path, std::ios::binary);
      if (!in) throw ConfigError("cannot open graph file '" + cfg.graph_path + "'");
      return read_csr_binary(in);
    }
  }
  throw ConfigError("unknown graph source");
}

PartitionMap build_partition(const SimConfig& cfg, const Graph& g) {
  switch (cfg.partitioner) {
    case PartitionerKind::Hash:
      return partition_hash(g, cfg.servers, cfg.component_seed("partition"));
    case PartitionerKind::Greedy:
      return partition_greedy_locality(g, cfg.servers, cfg.slack);
    case PartitionerKind::File: {
      std::ifstream in(cfg.partition_path);
      if (!in) throw ConfigError("cannot open partition file '" + cfg.partition_path + "'");
      return read_partition_map(in, g.num_vertices(), cfg.servers);
    }
  }
  throw ConfigError("unknown partitioner");
}

Cluster::Cluster(const SimConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  graph_ = build_graph(cfg_);
  partition_ = build_partition(cfg_, graph_);
  init();
}

Cluster::Cluster(const SimConfig& cfg, Graph graph, PartitionMap partition)
    : cfg_(cfg), graph_(std::move(graph)), partition_(std::move(partition)) {
  cfg_.validate();
  init();
}

void Cluster::init() {
  if (partition_.num_vertices() != graph_.num_vertices())
    throw ConfigError("partition covers " + std::to_string(partition_.num_vertices()) +
                      " vertices, graph has " + std::to_string(graph_.num_vertices()));
  if (partition_.num_servers() != cfg_.servers)
    throw ConfigError("partition uses a different server count than the config");
  if (cfg_.feature_path.empty()) {
    features_ = FeatureStore::generate(partition_, cfg_.feature_dim, cfg_.component_seed("feature"));
  } else {
    std::ifstream in(cfg_.feature_path, std::ios::binary);
    if (!in) throw ConfigError("cannot open feature file '" + cfg_.feature_path + "'");
    features_ = FeatureStore::read(partition_, in);
    if (features_.dim() != cfg_.feature_dim)
      throw ConfigError("feature file dimension differs from feature_dim");
  }
  labels_ = {cfg_.component_seed("label"), cfg_.classes};
  const std::uint64_t train_key = cfg_.component_seed("train");
  for (VertexId v = 0; v < graph_.num_vertices(); ++v)
    if (cfg_.train_fraction >= 1.0 || to_unit(mix64(train_key, v)) < cfg_.train_fraction)
      train_.push_back(v);
  initial_ = Parameters::init(cfg_.model_dims(), cfg_.component_seed("model"));
  reset_models();
}

void Cluster::reset_models() {
  models_.assign(cfg_.servers, initial_);
  accs_.clear();
  for (ModelId d = 0; d < cfg_.servers; ++d) accs_.push_back(GradAccumulator::for_model(d, initial_));
}

void Cluster::set_fixed_batches(std::vector<std::vector<std::vector<VertexId>>> iterations) {
  for (const auto& it : iterations) {
    if (it.size() != cfg_.servers)
      throw std::invalid_argument("fixed batches need one mini-batch per model");
    for (const auto& b : it)
      for (VertexId v : b)
        if (v >= graph_.num_vertices()) throw std::out_of_range("fixed batch root out of range");
  }
  fixed_batches_ = std::move(iterations);
}

std::vector<std::vector<std::vector<VertexId>>> Cluster::epoch_batches(std::size_t epoch) const {
  if (!fixed_batches_.empty()) return fixed_batches_;
  auto its = make_epoch_batches(train_, cfg_.servers, cfg_.batch_size, cfg_.component_seed("batch"),
                                epoch);
  if (cfg_.iters_per_epoch > 0 && its.size() > cfg_.iters_per_epoch) its.resize(cfg_.iters_per_epoch);
  return its;
}

TraceTable Cluster::iteration_table(std::size_t epoch, std::size_t iteration,
                                    std::span<const std::vector<VertexId>> batches,
                                    const MergePattern& pattern) const {
  const MiniBatchPlan plan = redistribute_roots(batches, partition_);
  return apply_merge_pattern(TraceTable::initial(plan), pattern,
                             hash_words({cfg_.component_seed("merge"), epoch, iteration}));
}

std::vector<std::size_t> Cluster::epoch_column_totals(std::size_t epoch,
                                                      const MergePattern& pattern) const {
  std::vector<std::size_t> totals(cfg_.servers - std::min(pattern.size(), cfg_.servers), 0);
  const auto its = epoch_batches(epoch);
  for (std::size_t it = 0; it < its.size(); ++it) {
    const auto col = iteration_table(epoch, it, its[it], pattern).column_totals();
    for (std::size_t c = 0; c < totals.size() && c < col.size(); ++c) totals[c] += col[c];
  }
  return totals;
}

IterationMetrics Cluster::run_iteration(const StrategySpec& strategy, std::size_t epoch,
                                        std::size_t iteration,
                                        std::span<const std::vector<VertexId>> batches,
                                        const MergePattern& pattern) {
  const std::size_t N = cfg_.servers;
  if (batches.size() != N) throw std::invalid_argument("run_iteration: one mini-batch per model");
  const CostModel& cm = cfg_.cost;
  const std::size_t dim = cfg_.feature_dim;
  const std::size_t hidden = cfg_.hidden;
  const std::uint64_t param_bytes = cfg_.model_dims().param_bytes();
  const std::size_t threads = cfg_.threads;

  const MicroIndex micros(graph_, cfg_.sampler, cfg_.component_seed("sampler"), epoch, iteration,
                          batches, threads);
  const MiniBatchPlan plan = redistribute_roots(batches, partition_);

  IterationMetrics out;
  out.imbalance = load_imbalance(plan);
  out.server_busy.assign(N, 0.0);
  out.trained.assign(N, {});
  out.columns = 1;

  auto micrographs_of = [&](const std::vector<VertexId>& roots) {
    std::vector<const Micrograph*> ms;
    ms.reserve(roots.size());
    for (VertexId r : roots) ms.push_back(&micros.at(r));
    return ms;
  };

  // Forward + backward over `ms` with feature rows laid out by `ids`; adds
  // the gradients to model d's accumulator.
  auto train_on = [&](ModelId d, const std::vector<const Micrograph*>& ms,
                      const std::vector<VertexId>& ids, const std::vector<float>& rows,
                      ServerStep& st) {
    if (!cfg_.compute) return;
    for (const Micrograph* m : ms) {
      Eigen::MatrixXd inputs(static_cast<Eigen::Index>(m->num_vertices()),
                             static_cast<Eigen::Index>(dim));
      for (std::size_t i = 0; i < m->num_vertices(); ++i) {
        const auto pos = static_cast<std::size_t>(
            std::lower_bound(ids.begin(), ids.end(), m->layers[0][i]) - ids.begin());
        for (std::size_t j = 0; j < dim; ++j)
          inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[pos * dim + j];
      }
      const ForwardCache cache = forward(*m, inputs, models_[d]);
      LossGrad lg = loss_and_backward(*m, cache, labels_.label(m->root), models_[d]);
      accumulate(accs_[d], lg.grad);
      st.loss += lg.loss;
      ++st.losses;
    }
  };

  std::vector<std::vector<ServerLoad>> loads;
  std::vector<CommLedger> ledgers;  // merged in order after execution

  if (strategy.kind == StrategyKind::Naive) {
    // Every model walks home -> other servers holding its data (ascending) -> home.
    struct Walk {
      std::vector<ServerId> itinerary;
      std::vector<std::vector<ServerLoad>> loads;  // [hop][server]
      CommLedger ledger;
      ServerStep st;
    };
    std::vector<Walk> walks(N);
    parallel_for(N, threads, [&](std::size_t di) {
      const auto d = static_cast<ModelId>(di);
      Walk& w = walks[d];
      if (batches[d].empty()) return;
      const auto ms = micrographs_of(batches[d]);
      const auto ids = union_vertices(ms);
      std::vector<char> needed(N, 0);
      for (VertexId v : ids) needed[partition_.home(v)] = 1;
      w.itinerary.push_back(d);
      for (ServerId s = 0; s < N; ++s)
        if (s != d && needed[s]) w.itinerary.push_back(s);
      if (w.itinerary.size() > 1) w.itinerary.push_back(d);
      w.loads.assign(w.itinerary.size(), std::vector<ServerLoad>(N));

      std::vector<float> rows;
      rows.reserve(ids.size() * dim);
      for (VertexId v : ids) {
        auto r = features_.row(v);
        rows.insert(rows.end(), r.begin(), r.end());
      }
      w.st.fetch.local_rows += ids.size();

      // done[m][k][i]: activation i of layer k is final.
      std::vector<std::vector<std::vector<char>>> done(ms.size());
      for (std::size_t mi = 0; mi < ms.size(); ++mi) {
        done[mi].resize(ms[mi]->layers.size());
        for (std::size_t k = 0; k < ms[mi]->layers.size(); ++k)
          done[mi][k].assign(ms[mi]->layers[k].size(), 0);
      }
      std::vector<char> visited(N, 0);
      for (std::size_t h = 0; h < w.itinerary.size(); ++h) {
        const ServerId s = w.itinerary[h];
        ServerLoad& load = w.loads[h][s];
        ++load.launches;
        if (!visited[s]) {
          visited[s] = 1;
          for (std::size_t mi = 0; mi < ms.size(); ++mi) {
            const Micrograph& m = *ms[mi];
            for (std::size_t i = 0; i < m.layers[0].size(); ++i) {
              if (!done[mi][0][i] && partition_.home(m.layers[0][i]) == s) {
                done[mi][0][i] = 1;
                load.work += dim;
              }
            }
            for (std::size_t k = 1; k < m.layers.size(); ++k) {
              std::vector<char> ready(m.layers[k].size(), 1);
              for (const auto& e : m.edges[k])
                if (!done[mi][k - 1][e.src]) ready[e.dst] = 0;
              for (std::size_t i = 0; i < m.layers[k].size(); ++i) {
                if (!done[mi][k][i] && ready[i] && done[mi][k - 1][i]) {
                  done[mi][k][i] = 1;
                  load.work += hidden;
                }
              }
            }
          }
        }
        if (h + 1 == w.itinerary.size()) break;

        // Ship model, partial aggregation state and remaining topology.
        std::uint64_t partial = 0;
        std::uint64_t stored = 0;
        std::uint64_t remaining_edges = 0;
        for (std::size_t mi = 0; mi < ms.size(); ++mi) {
          const Micrograph& m = *ms[mi];
          for (std::size_t k = 0; k < m.layers.size(); ++k)
            for (char c : done[mi][k]) stored += c ? 1 : 0;
          for (std::size_t k = 1; k < m.layers.size(); ++k) {
            std::vector<char> touched(m.layers[k].size(), 0);
            for (std::size_t i = 0; i < m.layers[k].size(); ++i) touched[i] = done[mi][k - 1][i];
            for (const auto& e : m.edges[k]) {
              if (done[mi][k - 1][e.src]) {
                touched[e.dst] = 1;
              } else {
                ++remaining_edges;
              }
            }
            for (std::size_t i = 0; i < m.layers[k].size(); ++i)
              if (!done[mi][k][i] && touched[i]) ++partial;
          }
        }
        const ServerId next = w.itinerary[h + 1];
        CommLedger hop;
        hop.record(s, next, Category::Model, param_bytes);
        const std::uint64_t inter = (partial + stored) * hidden * kBytesPerElement;
        if (inter > 0) hop.record(s, next, Category::Intermediate, inter);
        if (remaining_edges > 0) hop.record(s, next, Category::Topology, 8 * remaining_edges);
        add_received(w.loads[h + 1][next], hop);
        w.ledger.merge(hop);
      }
      train_on(d, ms, ids, rows, w.st);
      out.trained[d] = batches[d];
    });
    std::size_t steps = 1;
    for (const auto& w : walks) steps = std::max(steps, w.itinerary.size());
    loads.assign(steps, std::vector<ServerLoad>(N));
    for (const auto& w : walks) {
      for (std::size_t h = 0; h < w.loads.size(); ++h)
        for (std::size_t s = 0; s < N; ++s) loads[h][s] += w.loads[h][s];
      ledgers.push_back(w.ledger);
      out.fetch += w.st.fetch;
      out.loss_sum += w.st.loss;
      out.loss_count += w.st.losses;
    }
  } else {
    Schedule schedule;
    std::vector<std::vector<ServerId>> placement;  // [step][model] -> server, for migrations
    switch (strategy.kind) {
      case StrategyKind::ModelCentric: {
        schedule.assign(1, std::vector<std::vector<Task>>(N));
        for (ModelId d = 0; d < N; ++d) schedule[0][d].push_back({d, batches[d]});
        break;
      }
      case StrategyKind::LocalityOptimized: {
        schedule.assign(1, std::vector<std::vector<Task>>(N));
        for (ServerId s = 0; s < N; ++s) {
          Task t{s, {}};
          for (ModelId d = 0; d < N; ++d)
            t.roots.insert(t.roots.end(), plan.groups[d][s].begin(), plan.groups[d][s].end());
          schedule[0][s].push_back(std::move(t));
        }
        break;
      }
      case StrategyKind::HopGnn: {
        const TraceTable tt = apply_merge_pattern(
            TraceTable::initial(plan), pattern,
            hash_words({cfg_.component_seed("merge"), epoch, iteration}));
        if (!tt.columns_are_bijections())
          throw InvariantViolation("trace table column is not a bijection");
        const auto rows = tt.row_totals();
        for (ModelId d = 0; d < N; ++d)
          if (rows[d] != batches[d].size())
            throw InvariantViolation("trace table lost roots of model " + std::to_string(d));
        out.columns = tt.num_columns();
        schedule.assign(tt.num_columns(), std::vector<std::vector<Task>>(N));
        for (std::size_t c = 0; c < tt.num_columns(); ++c) {
          placement.push_back(tt.column(c));
          for (ModelId d = 0; d < N; ++d) schedule[c][tt.server(d, c)].push_back({d, tt.cell(d, c)});
        }
        break;
      }
      case StrategyKind::Naive: break;
    }

    const std::size_t steps = schedule.size();
    loads.assign(steps, std::vector<ServerLoad>(N));

    std::vector<StagedFeatures> staged;
    if (strategy.pregather) {
      staged.resize(N);
      std::vector<CommLedger> pg(N);
      parallel_for(N, threads, [&](std::size_t s) {
        std::vector<const Micrograph*> ms;
        for (const auto& step : schedule)
          for (const Task& t : step[s])
            for (VertexId r : t.roots) ms.push_back(&micros.at(r));
        const PregatherPlan pp = plan_pregather(static_cast<ServerId>(s), ms, partition_);
        staged[s] = execute_pregather(pp, features_, pg[s]);
        add_received(loads[0][s], pg[s]);
      });
      for (std::size_t s = 0; s < N; ++s) {
        ledgers.push_back(std::move(pg[s]));
        out.staged_bytes += staged[s].bytes();
      }
    }

    for (std::size_t c = 0; c < steps; ++c) {
      std::vector<ServerStep> per_server(N);
      parallel_for(N, threads, [&](std::size_t si) {
        const auto s = static_cast<ServerId>(si);
        ServerStep& st = per_server[s];
        for (const Task& task : schedule[c][s]) {
          if (task.roots.empty()) continue;  // idle cell
          const auto ms = micrographs_of(task.roots);
          const auto ids = union_vertices(ms);
          std::vector<float> rows;
          if (strategy.pregather) {
            rows.reserve(ids.size() * dim);
            for (VertexId v : ids) {
              std::span<const float> r;
              if (partition_.home(v) == s) {
                ++st.fetch.local_rows;
                r = features_.row(v);
              } else {
                if (!staged[s].contains(v))
                  throw InvariantViolation("pre-gathered rows miss vertex " + std::to_string(v));
                ++st.fetch.remote_rows;
                r = staged[s].row(v);
              }
              rows.insert(rows.end(), r.begin(), r.end());
            }
          } else {
            rows = fetch(s, ids, features_, st.ledger, &st.fetch);
          }
          ++st.load.launches;
          for (const Micrograph* m : ms) st.load.work += micrograph_work(*m, dim, hidden);
          train_on(task.model, ms, ids, rows, st);
        }
        add_received(st.load, st.ledger);
      });
      for (ServerId s = 0; s < N; ++s) {
        loads[c][s] += per_server[s].load;
        ledgers.push_back(std::move(per_server[s].ledger));
        out.fetch += per_server[s].fetch;
        out.loss_sum += per_server[s].loss;
        out.loss_count += per_server[s].losses;
        for (const Task& t : schedule[c][s])
          out.trained[t.model].insert(out.trained[t.model].end(), t.roots.begin(), t.roots.end());
      }
      if (c + 1 < steps && !placement.empty()) {
        CommLedger moves;
        for (ModelId d = 0; d < N; ++d) {
          const ServerId from = placement[c][d];
          const ServerId to = placement[c + 1][d];
          if (from == to) continue;
          CommLedger hop;
          hop.record(from, to, Category::Model, param_bytes);
          hop.record(from, to, Category::Gradient, param_bytes);
          add_received(loads[c + 1][to], hop);
          moves.merge(hop);
        }
        ledgers.push_back(std::move(moves));
      }
    }
  }

  for (const auto& l : ledgers) out.ledger.merge(l);
  out.steps = loads.size();
  for (const auto& step : loads) {
    out.sim_seconds += simulated_step_time(step, cm);
    for (std::size_t s = 0; s < N; ++s) out.server_busy[s] += server_time(step[s], cm);
  }

  if (cfg_.compute) {
    sync_and_update(models_, accs_, cfg_.lr, &out.ledger);
  } else {
    record_ring_allreduce(out.ledger, N, param_bytes);
  }
  const double allreduce = ring_allreduce_time(N, param_bytes, cm);
  out.sim_seconds += allreduce;
  for (auto& busy : out.server_busy) busy += allreduce;

  for (ModelId d = 0; d < N; ++d) {
    std::sort(out.trained[d].begin(), out.trained[d].end());
    std::vector<VertexId> expected = batches[d];
    std::sort(expected.begin(), expected.end());
    if (out.trained[d] != expected) out.composition_diverged = true;
  }
  return out;
}

EpochMetrics Cluster::run_epoch(const StrategySpec& strategy, std::size_t epoch,
                                const MergePattern& pattern,
                                std::vector<IterationMetrics>* iterations) {
  EpochMetrics em;
  em.epoch = epoch;
  em.strategy = strategy.name();
  em.server_busy.assign(cfg_.servers, 0.0);
  em.columns = strategy.kind == StrategyKind::HopGnn ? cfg_.servers - pattern.size() : 1;
  const auto its = epoch_batches(epoch);
  double loss = 0.0;
  std::size_t losses = 0;
  for (std::size_t it = 0; it < its.size(); ++it) {
    IterationMetrics m = run_iteration(strategy, epoch, it, its[it], pattern);
    em.sim_seconds += m.sim_seconds;
    em.steps += m.steps;
    em.ledger.merge(m.ledger);
    for (std::size_t s = 0; s < cfg_.servers; ++s) em.server_busy[s] += m.server_busy[s];
    em.fetch += m.fetch;
    em.staged_bytes = std::max(em.staged_bytes, m.staged_bytes);
    em.imbalance += m.imbalance;
    em.composition_diverged = em.composition_diverged || m.composition_diverged;
    loss += m.loss_sum;
    losses += m.loss_count;
    if (iterations) iterations->push_back(std::move(m));
  }
  em.iterations = its.size();
  if (em.iterations > 0) em.imbalance /= static_cast<double>(em.iterations);
  em.mean_loss = losses ? loss / static_cast<double>(losses) : 0.0;
  em.alpha = alpha_ratio(em, cfg_.model_dims());
  return em;
}

RunResult run_strategy(const SimConfig& cfg, const StrategySpec& strategy) {
  if (strategy.kind == StrategyKind::HopGnn && strategy.merge) {
    Cluster cluster(cfg);
    MergeResult mr = merge_controller(cluster, strategy, cfg.epochs, cfg.merge_k);
    return {std::move(mr.epochs), cluster.models()[0]};
  }
  Cluster cluster(cfg);
  RunResult out;
  for (std::size_t e = 0; e < cfg.epochs; ++e) out.epochs.push_back(cluster.run_epoch(strategy, e));
  out.final_model = cluster.models()[0];
  return out;
}

RunResult run_model_centric(const SimConfig& cfg) {
  return run_strategy(cfg, {StrategyKind::ModelCentric, false, false});
}

RunResult run_naive_feature_centric(const SimConfig& cfg) {
  return run_strategy(cfg, {StrategyKind::Naive, false, false});
}

RunResult run_locality_optimized(const SimConfig& cfg) {
  return run_strategy(cfg, {StrategyKind::LocalityOptimized, false, false});
}

RunResult run_hopgnn(const SimConfig& cfg) {
  return run_strategy(cfg, {StrategyKind::HopGnn, cfg.strategy.pregather, cfg.strategy.merge});
}

}  // namespace hopgnn
