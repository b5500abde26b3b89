// hopsim: simulated multi-server GNN training driver.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>

#include "hopgnn/cluster.hpp"
#include "hopgnn/compare.hpp"
#include "hopgnn/config.hpp"
#include "hopgnn/locality.hpp"
#include "hopgnn/merge.hpp"
#include "hopgnn/results_csv.hpp"

using namespace hopgnn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInvariant = 3;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  std::vector<std::string> overrides;

  SimConfig load() const {
    SimConfig cfg = config_path.empty() ? SimConfig{} : load_config(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) cfg.seed = *seed;
    cfg.validate();
    return cfg;
  }
};

// Writes to --out when given, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path, bool binary = false) {
    if (path.empty()) return;
    file_ = std::make_unique<std::ofstream>(path, binary ? std::ios::binary : std::ios::out);
    if (!*file_) throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "key=value config file");
  sub->add_option("--seed", c.seed, "master seed (overrides the config)");
  sub->add_option("--out", c.out_path, "output path (default stdout)");
  sub->add_option("--set", c.overrides, "extra key=value setting, repeatable");
}

std::vector<std::size_t> parse_list(const std::string& s) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const std::string item = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    try {
      out.push_back(std::stoul(item));
    } catch (const std::exception&) {
      throw ConfigError("bad list item '" + item + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulated multi-server GNN training: locality, strategies, micrograph merging"};
  app.require_subcommand(1);
  Common common;

  auto* gen = app.add_subcommand("gen-graph", "generate the configured SBM graph");
  add_common(gen, common);
  bool gen_csr = false;
  gen->add_flag("--csr", gen_csr, "write the binary CSR1 layout instead of an edge list");

  auto* part = app.add_subcommand("partition", "partition the configured graph");
  add_common(part, common);

  auto* loc = app.add_subcommand("locality", "R_micro / R_sub report");
  add_common(loc, common);
  std::string loc_servers = "2,4,8,16";
  std::string loc_layers;
  std::string loc_partitioners = "hash,greedy";
  std::string loc_samplers;
  std::size_t loc_batches = 4;
  bool loc_non_root = false;
  loc->add_option("--servers", loc_servers, "comma-separated server counts");
  loc->add_option("--layers", loc_layers, "comma-separated layer counts (default: config)");
  loc->add_option("--partitioners", loc_partitioners, "hash,greedy");
  loc->add_option("--samplers", loc_samplers, "node,layer (default: config)");
  loc->add_option("--batches", loc_batches, "sampled mini-batches per row");
  loc->add_flag("--non-root", loc_non_root, "exclude the root from the co-located count");

  auto* train = app.add_subcommand("train", "train one strategy, one CSV row per epoch");
  add_common(train, common);
  std::string dump_batches;
  std::string params_path;
  train->add_option("--dump-batches", dump_batches, "write every epoch's mini-batches here");
  train->add_option("--params", params_path, "write final parameters here");

  auto* merge = app.add_subcommand("merge-study", "run the micrograph merging controller");
  add_common(merge, common);

  auto* cmp = app.add_subcommand("compare", "run all strategies, one CSV row each");
  add_common(cmp, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    const SimConfig cfg = common.load();

    if (gen->parsed()) {
      const Graph g = build_graph(cfg);
      Output out(common.out_path, gen_csr);
      if (gen_csr) {
        write_csr_binary(out.stream(), g);
      } else {
        write_edge_list(out.stream(), g);
      }
      std::cerr << "vertices " << g.num_vertices() << " edges " << g.num_undirected_edges() << '\n';
    } else if (part->parsed()) {
      const Graph g = build_graph(cfg);
      const PartitionMap p = build_partition(cfg, g);
      Output out(common.out_path);
      write_partition_map(out.stream(), p);
      std::cerr << "edge_cut " << edge_cut(g, p) << '\n';
    } else if (loc->parsed()) {
      const Graph g = build_graph(cfg);
      LocalityStudy study;
      study.servers = parse_list(loc_servers);
      study.layers = loc_layers.empty() ? std::vector<std::size_t>{cfg.sampler.n_layers}
                                        : parse_list(loc_layers);
      study.fanouts = cfg.sampler.fanouts;
      study.batch_size = cfg.batch_size;
      study.batches = loc_batches;
      study.slack = cfg.slack;
      study.seed = cfg.seed;
      study.include_root = !loc_non_root;
      study.threads = cfg.threads;
      study.partitioners.clear();
      for (const char* name : {"hash", "greedy"})
        if (loc_partitioners.find(name) != std::string::npos)
          study.partitioners.push_back(std::string_view(name) == "hash" ? PartitionerKind::Hash
                                                                        : PartitionerKind::Greedy);
      if (study.partitioners.empty()) throw ConfigError("--partitioners names no partitioner");
      if (loc_samplers.empty()) {
        study.modes = {cfg.sampler.mode};
      } else {
        study.modes.clear();
        if (loc_samplers.find("node") != std::string::npos) study.modes.push_back(SamplerMode::NodeWise);
        if (loc_samplers.find("layer") != std::string::npos) study.modes.push_back(SamplerMode::LayerWise);
        if (study.modes.empty()) throw ConfigError("--samplers names no sampler");
      }
      Output out(common.out_path);
      write_locality_csv(out.stream(), locality_report(g, study));
    } else if (train->parsed()) {
      Cluster cluster(cfg);
      if (!dump_batches.empty()) {
        Output dump(dump_batches);
        for (std::size_t e = 0; e < cfg.epochs; ++e) {
          const auto its = cluster.epoch_batches(e);
          for (std::size_t it = 0; it < its.size(); ++it) write_batch_dump(dump.stream(), e, it, its[it]);
        }
      }
      std::vector<EpochMetrics> epochs;
      if (cfg.strategy.kind == StrategyKind::HopGnn && cfg.strategy.merge) {
        epochs = merge_controller(cluster, cfg.strategy, cfg.epochs, cfg.merge_k).epochs;
      } else {
        for (std::size_t e = 0; e < cfg.epochs; ++e) epochs.push_back(cluster.run_epoch(cfg.strategy, e));
      }
      std::vector<ResultRow> rows;
      for (const auto& m : epochs) rows.push_back(ResultRow::from_epoch(m));
      Output out(common.out_path);
      write_results_csv(out.stream(), rows);
      if (!params_path.empty()) {
        Output params(params_path);
        write_parameters(params.stream(), cluster.models()[0]);
      }
    } else if (merge->parsed()) {
      Cluster cluster(cfg);
      StrategySpec spec = cfg.strategy;
      spec.kind = StrategyKind::HopGnn;
      const MergeResult mr = merge_controller(cluster, spec, cfg.epochs, cfg.merge_k);
      Output out(common.out_path);
      out.stream() << "epoch,phase,columns,sim_seconds\n";
      for (const auto& h : mr.history) {
        const char* phase = h.phase == MergePhase::Baseline ? "baseline"
                            : h.phase == MergePhase::Trial  ? "trial"
                                                            : "steady";
        out.stream() << h.epoch << ',' << phase << ',' << h.columns << ',' << h.sim_seconds << '\n';
      }
      std::cerr << "final_columns " << mr.final_columns << '\n';
    } else if (cmp->parsed()) {
      const auto rows = compare_strategies(cfg);
      Output out(common.out_path);
      write_results_csv(out.stream(), rows);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitOk;
}
