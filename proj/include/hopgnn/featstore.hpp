#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <unordered_map>
#include <vector>

#include "hopgnn/comm_ledger.hpp"
#include "hopgnn/common.hpp"
#include "hopgnn/partition.hpp"
#include "hopgnn/sampler.hpp"

namespace hopgnn {

/// Value of element j of vertex v's generated feature row, in [-1, 1).
float generated_feature(std::uint64_t seed, VertexId v, std::size_t j);

/// Vertex feature rows sharded by home server. Row v is stored only in shard
/// home(v); shards are immutable once built.
class FeatureStore {
 public:
  FeatureStore() = default;
  /// Rows depend only on (seed, v, dim), never on the partition.
  static FeatureStore generate(const PartitionMap& p, std::size_t dim, std::uint64_t seed);
  /// Reads the "FEAT" binary layout; throws FormatError on a bad header or a
  /// row count that differs from the partition's vertex count.
  static FeatureStore read(const PartitionMap& p, std::istream& in);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t num_vertices() const noexcept { return local_index_.size(); }
  const PartitionMap& partition() const noexcept { return partition_; }

  /// Row of v as held by its home shard.
  std::span<const float> row(VertexId v) const;
  std::size_t shard_rows(ServerId s) const { return shards_.at(s).ids.size(); }
  bool shard_holds(ServerId s, VertexId v) const;

 private:
  struct Shard {
    std::vector<VertexId> ids;  // ascending
    std::vector<float> data;    // ids.size() * dim, row-major
  };

  FeatureStore(const PartitionMap& p, std::size_t dim);

  std::size_t dim_ = 0;
  PartitionMap partition_;
  std::vector<Shard> shards_;
  std::vector<std::uint32_t> local_index_;
};

/// "FEAT", u64 n, u64 dim, then n * dim little-endian f32, row-major.
void write_feature_file(std::ostream& out, const FeatureStore& fs);

struct FetchStats {
  std::uint64_t local_rows = 0;
  std::uint64_t remote_rows = 0;

  double miss_rate() const noexcept {
    const auto total = local_rows + remote_rows;
    return total == 0 ? 0.0 : static_cast<double>(remote_rows) / static_cast<double>(total);
  }
  FetchStats& operator+=(const FetchStats& o) noexcept {
    local_rows += o.local_rows;
    remote_rows += o.remote_rows;
    return *this;
  }
};

/// Gathers rows for `ids` on behalf of server `at`, in input order. Remote ids
/// are batched into one feature message per home server.
std::vector<float> fetch(ServerId at, std::span<const VertexId> ids, const FeatureStore& fs,
                         CommLedger& ledger, FetchStats* stats = nullptr);

/// Remote rows a server needs for one iteration, grouped by source server,
/// each group ascending and duplicate-free.
struct PregatherPlan {
  ServerId at = 0;
  std::map<ServerId, std::vector<VertexId>> by_source;

  std::size_t num_rows() const noexcept;
  bool empty() const noexcept { return by_source.empty(); }
};

PregatherPlan plan_pregather(ServerId at, std::span<const std::vector<VertexId>> vertex_sets,
                             const PartitionMap& p);
PregatherPlan plan_pregather(ServerId at, std::span<const Micrograph* const> micrographs,
                             const PartitionMap& p);

/// Remote rows staged on a server for the duration of one iteration.
class StagedFeatures {
 public:
  StagedFeatures() = default;
  explicit StagedFeatures(std::size_t dim) : dim_(dim) {}

  void insert(VertexId v, std::span<const float> row);
  bool contains(VertexId v) const { return index_.contains(v); }
  std::span<const float> row(VertexId v) const;
  std::size_t num_rows() const noexcept { return index_.size(); }
  std::uint64_t bytes() const noexcept { return data_.size() * kBytesPerElement; }

 private:
  std::size_t dim_ = 0;
  std::unordered_map<VertexId, std::size_t> index_;
  std::vector<float> data_;
};

/// Executes a plan: one feature message per source server.
StagedFeatures execute_pregather(const PregatherPlan& plan, const FeatureStore& fs,
                                 CommLedger& ledger);

}  // namespace hopgnn
