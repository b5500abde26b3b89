#include "hopgnn/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "hopgnn/rng.hpp"

namespace hopgnn {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw ConfigError("invalid value '" + std::string(value) + "' for key '" + std::string(key) + "'");
}

std::uint64_t to_u64(std::string_view key, std::string_view value) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) bad_value(key, value);
  return out;
}

std::size_t to_size(std::string_view key, std::string_view value) {
  return static_cast<std::size_t>(to_u64(key, value));
}

double to_double(std::string_view key, std::string_view value) {
  if (value == "inf" || value == "infinity") return std::numeric_limits<double>::infinity();
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size() || std::isnan(out))
    bad_value(key, value);
  return out;
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value);
}

std::vector<std::size_t> to_size_list(std::string_view key, std::string_view value) {
  std::vector<std::size_t> out;
  while (true) {
    const auto comma = value.find(',');
    out.push_back(to_size(key, trim(value.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    value.remove_prefix(comma + 1);
  }
  return out;
}

std::string join(const std::vector<std::size_t>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + std::to_string(xs[i]);
  return out;
}

std::string fmt_double(double x) {
  if (std::isinf(x)) return "inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

}  // namespace

std::string StrategySpec::name() const {
  switch (kind) {
    case StrategyKind::ModelCentric: return "model-centric";
    case StrategyKind::Naive: return "naive";
    case StrategyKind::LocalityOptimized: return "locality-optimized";
    case StrategyKind::HopGnn: break;
  }
  if (pregather && merge) return "hopgnn-all";
  if (merge) return "hopgnn-mg-merge";
  return pregather ? "hopgnn-mg-pg" : "hopgnn-mg";
}

StrategySpec StrategySpec::parse(std::string_view name) {
  if (name == "model-centric") return {StrategyKind::ModelCentric, false, false};
  if (name == "naive") return {StrategyKind::Naive, false, false};
  if (name == "locality-optimized") return {StrategyKind::LocalityOptimized, false, false};
  if (name == "hopgnn" || name == "hopgnn-mg") return {StrategyKind::HopGnn, false, false};
  if (name == "hopgnn-mg-pg") return {StrategyKind::HopGnn, true, false};
  if (name == "hopgnn-mg-merge") return {StrategyKind::HopGnn, false, true};
  if (name == "hopgnn-all") return {StrategyKind::HopGnn, true, true};
  throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

std::uint64_t SimConfig::component_seed(std::string_view component) const {
  std::uint64_t tag = 0;
  for (char c : component) tag = tag * 131 + static_cast<unsigned char>(c);
  return hash_words({seed, tag});
}

SbmSpec SimConfig::sbm_spec() const {
  return {sbm_blocks, p_in, p_out, component_seed("graph")};
}

ModelDims SimConfig::model_dims() const {
  return {feature_dim, hidden, sampler.n_layers, classes, arch};
}

void SimConfig::set(std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "graph") {
    if (value == "sbm") {
      graph = GraphKind::Sbm;
    } else if (value.starts_with("edgelist:")) {
      graph = GraphKind::EdgeList;
      graph_path = value.substr(9);
    } else if (value.starts_with("csr:")) {
      graph = GraphKind::CsrBinary;
      graph_path = value.substr(4);
    } else {
      bad_value(key, value);
    }
  } else if (key == "sbm_blocks") {
    sbm_blocks = to_size_list(key, value);
  } else if (key == "p_in") {
    p_in = to_double(key, value);
  } else if (key == "p_out") {
    p_out = to_double(key, value);
  } else if (key == "partitioner") {
    if (value == "hash") {
      partitioner = PartitionerKind::Hash;
    } else if (value == "greedy") {
      partitioner = PartitionerKind::Greedy;
    } else if (value.starts_with("file:")) {
      partitioner = PartitionerKind::File;
      partition_path = value.substr(5);
    } else {
      bad_value(key, value);
    }
  } else if (key == "slack") {
    slack = to_double(key, value);
  } else if (key == "servers") {
    servers = to_size(key, value);
  } else if (key == "layers") {
    sampler.n_layers = to_size(key, value);
  } else if (key == "fanout" || key == "fanouts") {
    sampler.fanouts = to_size_list(key, value);
  } else if (key == "sampler") {
    if (value == "node") {
      sampler.mode = SamplerMode::NodeWise;
    } else if (value == "layer") {
      sampler.mode = SamplerMode::LayerWise;
    } else {
      bad_value(key, value);
    }
  } else if (key == "feature_dim") {
    feature_dim = to_size(key, value);
  } else if (key == "feature_file") {
    feature_path = value;
  } else if (key == "hidden") {
    hidden = to_size(key, value);
  } else if (key == "classes") {
    classes = to_size(key, value);
  } else if (key == "arch") {
    if (value == "gcn") {
      arch = Arch::Gcn;
    } else if (value == "sage" || value == "sage-mean") {
      arch = Arch::SageMean;
    } else {
      bad_value(key, value);
    }
  } else if (key == "strategy") {
    strategy = StrategySpec::parse(value);
  } else if (key == "pregather") {
    strategy.pregather = to_bool(key, value);
  } else if (key == "merge") {
    strategy.merge = to_bool(key, value);
  } else if (key == "bandwidth") {
    cost.bandwidth = to_double(key, value);
  } else if (key == "latency") {
    cost.latency = to_double(key, value);
  } else if (key == "sync_overhead") {
    cost.sync_overhead = to_double(key, value);
  } else if (key == "kernel_launch") {
    cost.kernel_launch = to_double(key, value);
  } else if (key == "compute_rate") {
    cost.compute_rate = to_double(key, value);
  } else if (key == "seed") {
    seed = to_u64(key, value);
  } else if (key == "epochs") {
    epochs = to_size(key, value);
  } else if (key == "K" || key == "merge_k") {
    merge_k = to_size(key, value);
  } else if (key == "batch_size") {
    batch_size = to_size(key, value);
  } else if (key == "iters_per_epoch") {
    iters_per_epoch = to_size(key, value);
  } else if (key == "lr") {
    lr = to_double(key, value);
  } else if (key == "train_fraction") {
    train_fraction = to_double(key, value);
  } else if (key == "compute") {
    compute = to_bool(key, value);
  } else if (key == "threads") {
    threads = to_size(key, value);
  } else {
    throw ConfigError("unknown key '" + std::string(key) + "'");
  }
}

void SimConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  require(servers >= 1, "servers must be >= 1");
  require(feature_dim >= 1 && hidden >= 1, "feature_dim and hidden must be >= 1");
  require(classes >= 2, "classes must be >= 2");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(merge_k >= 1, "K must be >= 1");
  require(threads >= 1, "threads must be >= 1");
  require(train_fraction > 0.0 && train_fraction <= 1.0, "train_fraction must be in (0, 1]");
  require(std::isfinite(lr), "lr must be finite");
  require(slack >= 0.0, "slack must be >= 0");
  require(graph == GraphKind::Sbm || !graph_path.empty(), "graph file path is empty");
  require(partitioner != PartitionerKind::File || !partition_path.empty(),
          "partition file path is empty");
  if (graph == GraphKind::Sbm) {
    require(!sbm_blocks.empty(), "sbm_blocks is empty");
    for (auto b : sbm_blocks) require(b >= 1, "sbm block sizes must be >= 1");
    require(0.0 <= p_out && p_out <= p_in && p_in <= 1.0, "need 0 <= p_out <= p_in <= 1");
  }
  try {
    sampler.validate();
    cost.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

SimConfig parse_config(std::istream& in) {
  SimConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view s = line;
    if (auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    try {
      cfg.set(trim(s.substr(0, eq)), s.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

void write_config(std::ostream& out, const SimConfig& cfg) {
  switch (cfg.graph) {
    case GraphKind::Sbm: out << "graph = sbm\n"; break;
    case GraphKind::EdgeList: out << "graph = edgelist:" << cfg.graph_path << '\n'; break;
    case GraphKind::CsrBinary: out << "graph = csr:" << cfg.graph_path << '\n'; break;
  }
  out << "sbm_blocks = " << join(cfg.sbm_blocks) << '\n';
  out << "p_in = " << fmt_double(cfg.p_in) << '\n';
  out << "p_out = " << fmt_double(cfg.p_out) << '\n';
  switch (cfg.partitioner) {
    case PartitionerKind::Hash: out << "partitioner = hash\n"; break;
    case PartitionerKind::Greedy: out << "partitioner = greedy\n"; break;
    case PartitionerKind::File: out << "partitioner = file:" << cfg.partition_path << '\n'; break;
  }
  out << "slack = " << fmt_double(cfg.slack) << '\n';
  out << "servers = " << cfg.servers << '\n';
  out << "layers = " << cfg.sampler.n_layers << '\n';
  out << "fanout = " << join(cfg.sampler.fanouts) << '\n';
  out << "sampler = " << (cfg.sampler.mode == SamplerMode::NodeWise ? "node" : "layer") << '\n';
  out << "feature_dim = " << cfg.feature_dim << '\n';
  if (!cfg.feature_path.empty()) out << "feature_file = " << cfg.feature_path << '\n';
  out << "hidden = " << cfg.hidden << '\n';
  out << "classes = " << cfg.classes << '\n';
  out << "arch = " << (cfg.arch == Arch::Gcn ? "gcn" : "sage") << '\n';
  out << "strategy = " << cfg.strategy.name() << '\n';
  out << "bandwidth = " << fmt_double(cfg.cost.bandwidth) << '\n';
  out << "latency = " << fmt_double(cfg.cost.latency) << '\n';
  out << "sync_overhead = " << fmt_double(cfg.cost.sync_overhead) << '\n';
  out << "kernel_launch = " << fmt_double(cfg.cost.kernel_launch) << '\n';
  out << "compute_rate = " << fmt_double(cfg.cost.compute_rate) << '\n';
  out << "seed = " << cfg.seed << '\n';
  out << "epochs = " << cfg.epochs << '\n';
  out << "K = " << cfg.merge_k << '\n';
  out << "batch_size = " << cfg.batch_size << '\n';
  out << "iters_per_epoch = " << cfg.iters_per_epoch << '\n';
  out << "lr = " << fmt_double(cfg.lr) << '\n';
  out << "train_fraction = " << fmt_double(cfg.train_fraction) << '\n';
  out << "compute = " << (cfg.compute ? "true" : "false") << '\n';
  out << "threads = " << cfg.threads << '\n';
}

}  // namespace hopgnn
