#include "hopgnn/locality.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "hopgnn/parallel.hpp"
#include "hopgnn/rng.hpp"

namespace hopgnn {

namespace {

std::string shortest(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string pct(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * x);
  return buf;
}

}  // namespace

double r_micro(const Micrograph& m, const PartitionMap& p, bool include_root) {
  const ServerId home = p.home(m.root);
  std::size_t colocated = 0;
  for (VertexId v : m.vertices())
    if (p.home(v) == home && (include_root || v != m.root)) ++colocated;
  return static_cast<double>(colocated) / static_cast<double>(m.num_vertices());
}

double r_sub(const Subgraph& sg, const PartitionMap& p, bool include_root) {
  if (sg.roots.empty()) throw std::invalid_argument("r_sub: subgraph has no roots");
  const auto all = sg.unique_vertices();
  std::vector<std::size_t> per_server(p.num_servers(), 0);
  for (VertexId v : all) ++per_server[p.home(v)];
  double sum = 0.0;
  for (VertexId r : sg.roots) {
    const std::size_t colocated = per_server[p.home(r)] - (include_root ? 0 : 1);
    sum += static_cast<double>(colocated) / static_cast<double>(all.size());
  }
  return sum / static_cast<double>(sg.roots.size());
}

std::vector<LocalityRow> locality_report(const Graph& g, const LocalityStudy& study) {
  if (g.num_vertices() == 0) throw std::invalid_argument("locality_report: empty graph");
  if (study.batch_size == 0 || study.batches == 0)
    throw std::invalid_argument("locality_report: batch size and batch count must be >= 1");
  std::vector<LocalityRow> rows;
  for (auto part : study.partitioners) {
    if (part == PartitionerKind::File)
      throw ConfigError("locality_report: file partitions are not supported");
    for (auto mode : study.modes)
      for (auto s : study.servers)
        for (auto l : study.layers) rows.push_back({s, l, mode, part, 0.0, 0.0, 0});
  }

  std::vector<VertexId> all(g.num_vertices());
  for (VertexId v = 0; v < all.size(); ++v) all[v] = v;

  parallel_for(rows.size(), study.threads, [&](std::size_t i) {
    LocalityRow& row = rows[i];
    const PartitionMap p =
        row.partitioner == PartitionerKind::Hash
            ? partition_hash(g, row.servers, hash_words({study.seed, 0x9a27}))
            : partition_greedy_locality(g, row.servers, study.slack);
    SamplerConfig sc;
    sc.n_layers = row.layers;
    sc.fanouts = study.fanouts;
    sc.mode = row.mode;
    double micro_sum = 0.0;
    double sub_sum = 0.0;
    for (std::size_t b = 0; b < study.batches; ++b) {
      const auto its = make_epoch_batches(all, 1, study.batch_size, study.seed, b);
      const auto& roots = its.front().front();
      std::vector<Micrograph> ms;
      ms.reserve(roots.size());
      for (VertexId r : roots) {
        ms.push_back(sample_micrograph(g, sc, StreamKey{study.seed, b, 0, r}));
        micro_sum += r_micro(ms.back(), p, study.include_root);
      }
      row.samples += ms.size();
      sub_sum += r_sub(build_subgraph(std::move(ms)), p, study.include_root);
    }
    row.r_micro = micro_sum / static_cast<double>(row.samples);
    row.r_sub = sub_sum / static_cast<double>(study.batches);
  });
  return rows;
}

void write_locality_csv(std::ostream& out, const std::vector<LocalityRow>& rows) {
  out << "servers,layers,sampler,partitioner,r_micro,r_sub,r_micro_pct,r_sub_pct,samples\n";
  for (const auto& r : rows) {
    out << r.servers << ',' << r.layers << ',' << (r.mode == SamplerMode::NodeWise ? "node" : "layer")
        << ',' << (r.partitioner == PartitionerKind::Hash ? "hash" : "greedy") << ','
        << shortest(r.r_micro) << ',' << shortest(r.r_sub) << ',' << pct(r.r_micro) << ','
        << pct(r.r_sub) << ',' << r.samples << '\n';
  }
}

}  // namespace hopgnn
