#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "hopgnn/common.hpp"
#include "hopgnn/graph.hpp"

namespace hopgnn {

/// Assigns every vertex a single home server in [0, n_servers).
class PartitionMap {
 public:
  PartitionMap() = default;
  /// Throws std::invalid_argument if n_servers is 0 or a home is out of range.
  PartitionMap(std::vector<ServerId> home, std::size_t n_servers);

  ServerId home(VertexId v) const { return home_.at(v); }
  std::size_t num_servers() const noexcept { return n_servers_; }
  std::size_t num_vertices() const noexcept { return home_.size(); }
  std::span<const ServerId> homes() const noexcept { return home_; }

  std::vector<std::size_t> part_sizes() const;

  friend bool operator==(const PartitionMap&, const PartitionMap&) = default;

 private:
  std::vector<ServerId> home_;
  std::size_t n_servers_ = 1;
};

/// home(v) = mix64(seed, v) mod n_servers.
PartitionMap partition_hash(const Graph& g, std::size_t n_servers, std::uint64_t seed);

/// BFS region growing. Seeds are taken in (degree desc, id asc) order; each
/// part grows by BFS until it holds ceil((1 + slack) * n / S) vertices.
/// Isolated vertices are dealt round-robin into parts with room left.
/// `seed` is accepted for interface symmetry; the result does not depend on it.
PartitionMap partition_greedy_locality(const Graph& g, std::size_t n_servers, double slack,
                                       std::uint64_t seed = 0);

/// Largest part size partition_greedy_locality may produce.
std::size_t greedy_part_capacity(std::size_t n_vertices, std::size_t n_servers, double slack);

/// Fraction of undirected edges whose endpoints live on different servers.
double edge_cut(const Graph& g, const PartitionMap& p);

/// ASCII "vertex_id server_id" lines; '#' comments allowed. Every vertex in
/// [0, n_vertices) must appear exactly once.
PartitionMap read_partition_map(std::istream& in, std::size_t n_vertices,
                                std::optional<std::size_t> n_servers = std::nullopt);
void write_partition_map(std::ostream& out, const PartitionMap& p);

}  // namespace hopgnn
