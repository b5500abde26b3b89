#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hopgnn/common.hpp"
#include "hopgnn/sampler.hpp"

namespace hopgnn {

/// Server that hosts model d at time step t of the unmerged schedule.
constexpr ServerId migration_target(ModelId d, std::size_t t, std::size_t n) {
  return static_cast<ServerId>((d + t) % n);
}

/// Per-iteration schedule of models over servers.
///
/// columns[c][d] is the server model d occupies during time step c; each
/// column is a bijection. roots[d][c] lists the root vertices model d trains
/// there (possibly none: an idle cell).
class TraceTable {
 public:
  TraceTable() = default;

  /// Column t places model d on server (d + t) mod N and assigns it
  /// plan.groups[d][that server].
  static TraceTable initial(const MiniBatchPlan& plan);
  /// Same layout as initial() for N models, with synthetic root ids per cell
  /// (counts[d][c] of them). Used to reason about counts alone.
  static TraceTable from_counts(const std::vector<std::vector<std::size_t>>& counts);

  std::size_t num_models() const noexcept { return roots_.size(); }
  std::size_t num_columns() const noexcept { return columns_.size(); }

  ServerId server(ModelId d, std::size_t c) const { return columns_.at(c).at(d); }
  const std::vector<VertexId>& cell(ModelId d, std::size_t c) const { return roots_.at(d).at(c); }
  std::size_t root_count(ModelId d, std::size_t c) const { return cell(d, c).size(); }
  std::vector<std::vector<std::size_t>> root_counts() const;
  std::vector<std::size_t> column_totals() const;
  std::vector<std::size_t> row_totals() const;

  /// Column c's model -> server assignment.
  const std::vector<ServerId>& column(std::size_t c) const { return columns_.at(c); }

  /// True iff every column maps models one-to-one onto servers.
  bool columns_are_bijections() const;

 private:
  friend TraceTable delete_column_and_redistribute(const TraceTable&, std::size_t, std::uint64_t);

  std::vector<std::vector<ServerId>> columns_;
  std::vector<std::vector<std::vector<VertexId>>> roots_;
};

/// Column with the fewest roots (ties: lowest index); nullopt when fewer than
/// two columns remain.
std::optional<std::size_t> find_fewest_column(const TraceTable& tt);
std::optional<std::size_t> find_fewest_column(std::span<const std::size_t> column_totals);

/// Drops column `col`. Each model's roots from that column are shuffled with a
/// stream keyed on `stream_key` and dealt to its surviving columns in equal
/// shares, remainder to the lowest-indexed survivors. Throws
/// std::invalid_argument with fewer than two columns.
TraceTable delete_column_and_redistribute(const TraceTable& tt, std::size_t col,
                                          std::uint64_t stream_key);

/// Ordered column deletions, replayed against every iteration's initial table.
using MergePattern = std::vector<std::size_t>;

TraceTable apply_merge_pattern(TraceTable tt, const MergePattern& pattern, std::uint64_t stream_key);

}  // namespace hopgnn
