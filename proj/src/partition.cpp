#include "hopgnn/partition.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "hopgnn/rng.hpp"

namespace hopgnn {

PartitionMap::PartitionMap(std::vector<ServerId> home, std::size_t n_servers)
    : home_(std::move(home)), n_servers_(n_servers) {
  if (n_servers_ == 0) throw std::invalid_argument("partition needs at least one server");
  for (ServerId s : home_)
    if (s >= n_servers_) throw std::invalid_argument("partition home out of range");
}

std::vector<std::size_t> PartitionMap::part_sizes() const {
  std::vector<std::size_t> sizes(n_servers_, 0);
  for (ServerId s : home_) ++sizes[s];
  return sizes;
}

PartitionMap partition_hash(const Graph& g, std::size_t n_servers, std::uint64_t seed) {
  if (n_servers == 0) throw std::invalid_argument("partition_hash: S must be >= 1");
  std::vector<ServerId> home(g.num_vertices());
  for (VertexId v = 0; v < home.size(); ++v)
    home[v] = static_cast<ServerId>(mix64(seed, v) % n_servers);
  return PartitionMap(std::move(home), n_servers);
}

std::size_t greedy_part_capacity(std::size_t n_vertices, std::size_t n_servers, double slack) {
  const double raw = (1.0 + slack) * static_cast<double>(n_vertices) / static_cast<double>(n_servers);
  // Guard against 10.000000001-style rounding pushing ceil one too high.
  const double rounded = std::round(raw);
  const double target = std::abs(raw - rounded) < 1e-9 ? rounded : std::ceil(raw);
  return std::max<std::size_t>(1, static_cast<std::size_t>(target));
}

PartitionMap partition_greedy_locality(const Graph& g, std::size_t n_servers, double slack,
                                       std::uint64_t /*seed*/) {
  if (n_servers == 0) throw std::invalid_argument("partition_greedy_locality: S must be >= 1");
  if (!(slack >= 0.0)) throw std::invalid_argument("partition_greedy_locality: slack must be >= 0");
  const std::size_t n = g.num_vertices();
  const std::size_t cap = greedy_part_capacity(n, n_servers, slack);
  constexpr ServerId kUnassigned = ~ServerId{0};

  std::vector<VertexId> order(n);
  std::iota(order.begin(), order.end(), VertexId{0});
  std::stable_sort(order.begin(), order.end(), [&](VertexId a, VertexId b) {
    return g.degree(a) > g.degree(b);
  });

  std::vector<ServerId> home(n, kUnassigned);
  std::vector<std::size_t> size(n_servers, 0);
  ServerId part = 0;
  std::deque<VertexId> queue;
  for (VertexId seed : order) {
    if (home[seed] != kUnassigned || g.degree(seed) == 0) continue;
    if (part >= n_servers) break;
    home[seed] = part;
    ++size[part];
    queue.assign(1, seed);
    while (!queue.empty() && size[part] < cap) {
      const VertexId u = queue.front();
      queue.pop_front();
      for (VertexId w : g.neighbors(u)) {
        if (home[w] != kUnassigned) continue;
        home[w] = part;
        queue.push_back(w);
        if (++size[part] == cap) break;
      }
    }
    if (size[part] == cap) ++part;
  }

  // Leftovers: isolated vertices, plus anything unreached once parts filled.
  std::size_t next = 0;
  for (VertexId v = 0; v < n; ++v) {
    if (home[v] != kUnassigned) continue;
    for (std::size_t tries = 0; tries < n_servers; ++tries, next = (next + 1) % n_servers) {
      if (size[next] < cap) break;
    }
    home[v] = static_cast<ServerId>(next);
    ++size[next];
    next = (next + 1) % n_servers;
  }
  return PartitionMap(std::move(home), n_servers);
}

double edge_cut(const Graph& g, const PartitionMap& p) {
  if (p.num_vertices() != g.num_vertices())
    throw std::invalid_argument("edge_cut: partition does not cover the graph");
  std::size_t total = 0;
  std::size_t cut = 0;
  for (VertexId u = 0; u < g.num_vertices(); ++u) {
    for (VertexId v : g.neighbors(u)) {
      if (u >= v) continue;
      ++total;
      if (p.home(u) != p.home(v)) ++cut;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(cut) / static_cast<double>(total);
}

PartitionMap read_partition_map(std::istream& in, std::size_t n_vertices,
                                std::optional<std::size_t> n_servers) {
  constexpr ServerId kUnset = ~ServerId{0};
  std::vector<ServerId> home(n_vertices, kUnset);
  std::size_t max_server = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    long long v = -1;
    long long s = -1;
    std::string extra;
    if (!(fields >> v >> s) || (fields >> extra)) throw ParseError(line_no, "expected 'vertex server'");
    if (v < 0 || static_cast<std::size_t>(v) >= n_vertices || s < 0)
      throw std::out_of_range("line " + std::to_string(line_no) + ": id out of range");
    if (home[v] != kUnset) throw ParseError(line_no, "vertex listed twice");
    home[v] = static_cast<ServerId>(s);
    max_server = std::max(max_server, static_cast<std::size_t>(s));
  }
  for (ServerId h : home)
    if (h == kUnset) throw FormatError("partition map does not cover every vertex");
  return PartitionMap(std::move(home), n_servers.value_or(n_vertices == 0 ? 1 : max_server + 1));
}

void write_partition_map(std::ostream& out, const PartitionMap& p) {
  for (VertexId v = 0; v < p.num_vertices(); ++v) out << v << ' ' << p.home(v) << '\n';
}

}  // namespace hopgnn
