#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hopgnn/common.hpp"

namespace hopgnn {

/// Immutable adjacency in compressed sparse row form.
///
/// Neighbor ranges are sorted and duplicate-free. Undirected inputs are stored
/// with both directions present; samplers read a vertex's range as the set of
/// message sources feeding it.
class Graph {
 public:
  Graph() = default;

  /// Builds from an arbitrary edge list. Duplicates collapse and, when
  /// `symmetrize` is set, every (u, v) also inserts (v, u). Self-loops are
  /// dropped.
  static Graph from_edges(std::size_t n_vertices,
                          std::span<const std::pair<VertexId, VertexId>> edges,
                          bool symmetrize = true);

  /// Adopts already-canonical CSR arrays; throws FormatError if they are not.
  static Graph from_csr(std::vector<std::uint64_t> offsets, std::vector<VertexId> targets);

  std::size_t num_vertices() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  /// Number of stored (directed) entries.
  std::size_t num_entries() const noexcept { return targets_.size(); }
  /// Number of undirected edges for symmetric graphs, self-loops counted once.
  std::size_t num_undirected_edges() const;

  std::span<const VertexId> neighbors(VertexId v) const noexcept {
    return {targets_.data() + offsets_[v], targets_.data() + offsets_[v + 1]};
  }
  std::size_t degree(VertexId v) const noexcept { return offsets_[v + 1] - offsets_[v]; }
  bool has_edge(VertexId u, VertexId v) const;

  std::span<const std::uint64_t> offsets() const noexcept { return offsets_; }
  std::span<const VertexId> targets() const noexcept { return targets_; }

  /// Returns a copy where every vertex lists itself as a neighbor.
  Graph add_self_loops() const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::vector<std::uint64_t> offsets_{0};
  std::vector<VertexId> targets_;
};

/// Parses "u v" lines ('#' comments and blank lines skipped) into an
/// undirected graph. A comment of the form "# vertices N" declares the vertex
/// count; `declared_vertices` overrides it. Ids beyond the declared count raise
/// std::out_of_range, malformed lines raise ParseError.
Graph load_edge_list(std::istream& in, std::optional<std::size_t> declared_vertices = std::nullopt);

/// Writes each undirected edge once (u < v) behind a "# vertices N" header.
void write_edge_list(std::ostream& out, const Graph& g);

/// Binary cache: "CSR1", u64 n, u64 m, (n+1) u64 offsets, m u64 targets, all
/// little-endian.
void write_csr_binary(std::ostream& out, const Graph& g);
Graph read_csr_binary(std::istream& in);

struct SbmSpec {
  std::vector<std::size_t> block_sizes;
  double p_in = 0.0;
  double p_out = 0.0;
  std::uint64_t seed = 0;
};

/// Stochastic block model: each unordered pair {u, v} is drawn once from a
/// counter stream keyed on (seed, u, v).
Graph generate_sbm(const SbmSpec& spec);

}  // namespace hopgnn
