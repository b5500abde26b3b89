#include "hopgnn/trace_table.hpp"

#include <algorithm>
#include <stdexcept>

#include "hopgnn/rng.hpp"

namespace hopgnn {

TraceTable TraceTable::initial(const MiniBatchPlan& plan) {
  const std::size_t n = plan.num_models();
  if (n == 0) return {};
  if (plan.num_servers() != n)
    throw std::invalid_argument("trace table needs one model per server");
  TraceTable tt;
  tt.columns_.assign(n, std::vector<ServerId>(n));
  tt.roots_.assign(n, std::vector<std::vector<VertexId>>(n));
  for (std::size_t t = 0; t < n; ++t) {
    for (ModelId d = 0; d < n; ++d) {
      const ServerId s = migration_target(d, t, n);
      tt.columns_[t][d] = s;
      tt.roots_[d][t] = plan.groups[d][s];
    }
  }
  return tt;
}

TraceTable TraceTable::from_counts(const std::vector<std::vector<std::size_t>>& counts) {
  const std::size_t n = counts.size();
  MiniBatchPlan plan;
  plan.batches.resize(n);
  plan.groups.assign(n, std::vector<std::vector<VertexId>>(n));
  VertexId next = 0;
  for (ModelId d = 0; d < n; ++d) {
    if (counts[d].size() != n) throw std::invalid_argument("from_counts: matrix must be N x N");
    for (std::size_t t = 0; t < n; ++t)
      for (std::size_t i = 0; i < counts[d][t]; ++i)
        plan.groups[d][migration_target(d, t, n)].push_back(next++);
  }
  return initial(plan);
}

std::vector<std::vector<std::size_t>> TraceTable::root_counts() const {
  std::vector<std::vector<std::size_t>> out(num_models(), std::vector<std::size_t>(num_columns()));
  for (ModelId d = 0; d < num_models(); ++d)
    for (std::size_t c = 0; c < num_columns(); ++c) out[d][c] = roots_[d][c].size();
  return out;
}

std::vector<std::size_t> TraceTable::column_totals() const {
  std::vector<std::size_t> out(num_columns(), 0);
  for (const auto& row : roots_)
    for (std::size_t c = 0; c < row.size(); ++c) out[c] += row[c].size();
  return out;
}

std::vector<std::size_t> TraceTable::row_totals() const {
  std::vector<std::size_t> out;
  for (const auto& row : roots_) {
    std::size_t sum = 0;
    for (const auto& cell : row) sum += cell.size();
    out.push_back(sum);
  }
  return out;
}

bool TraceTable::columns_are_bijections() const {
  const std::size_t n = num_models();
  for (const auto& col : columns_) {
    if (col.size() != n) return false;
    std::vector<bool> seen(n, false);
    for (ServerId s : col) {
      if (s >= n || seen[s]) return false;
      seen[s] = true;
    }
  }
  return true;
}

std::optional<std::size_t> find_fewest_column(std::span<const std::size_t> totals) {
  if (totals.size() < 2) return std::nullopt;
  return static_cast<std::size_t>(std::min_element(totals.begin(), totals.end()) - totals.begin());
}

std::optional<std::size_t> find_fewest_column(const TraceTable& tt) {
  const auto totals = tt.column_totals();
  return find_fewest_column(totals);
}

TraceTable delete_column_and_redistribute(const TraceTable& tt, std::size_t col,
                                          std::uint64_t stream_key) {
  const std::size_t cols = tt.num_columns();
  if (cols < 2) throw std::invalid_argument("cannot delete the last column");
  if (col >= cols) throw std::out_of_range("column index out of range");

  TraceTable out;
  out.columns_ = tt.columns_;
  out.columns_.erase(out.columns_.begin() + static_cast<std::ptrdiff_t>(col));
  out.roots_.resize(tt.num_models());
  const std::size_t survivors = cols - 1;
  for (ModelId d = 0; d < tt.num_models(); ++d) {
    auto row = tt.roots_[d];
    std::vector<VertexId> moved = std::move(row[col]);
    row.erase(row.begin() + static_cast<std::ptrdiff_t>(col));

    CounterRng rng({stream_key, d, col});
    for (std::size_t i = moved.size(); i > 1; --i) std::swap(moved[i - 1], moved[rng.below(i)]);

    const std::size_t share = moved.size() / survivors;
    const std::size_t extra = moved.size() % survivors;
    auto it = moved.begin();
    for (std::size_t c = 0; c < survivors; ++c) {
      const std::size_t take = share + (c < extra ? 1 : 0);
      row[c].insert(row[c].end(), it, it + static_cast<std::ptrdiff_t>(take));
      it += static_cast<std::ptrdiff_t>(take);
    }
    out.roots_[d] = std::move(row);
  }
  return out;
}

TraceTable apply_merge_pattern(TraceTable tt, const MergePattern& pattern, std::uint64_t stream_key) {
  for (std::size_t step = 0; step < pattern.size(); ++step)
    tt = delete_column_and_redistribute(tt, pattern[step], hash_words({stream_key, step}));
  return tt;
}

}  // namespace hopgnn
