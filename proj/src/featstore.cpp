#include "hopgnn/featstore.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

#include "hopgnn/rng.hpp"

namespace hopgnn {

namespace {

constexpr char kFeatMagic[4] = {'F', 'E', 'A', 'T'};

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw FormatError("FEAT: truncated header");
  return v;
}

}  // namespace

float generated_feature(std::uint64_t seed, VertexId v, std::size_t j) {
  const std::uint64_t bits = mix64(hash_words({seed, 0xfea7, v}), j);
  return static_cast<float>(2.0 * to_unit(bits) - 1.0);
}

FeatureStore::FeatureStore(const PartitionMap& p, std::size_t dim)
    : dim_(dim), partition_(p), shards_(p.num_servers()), local_index_(p.num_vertices()) {
  if (dim == 0) throw std::invalid_argument("feature dim must be >= 1");
  for (VertexId v = 0; v < p.num_vertices(); ++v) {
    auto& shard = shards_[p.home(v)];
    local_index_[v] = static_cast<std::uint32_t>(shard.ids.size());
    shard.ids.push_back(v);
  }
  for (auto& shard : shards_) shard.data.resize(shard.ids.size() * dim_);
}

FeatureStore FeatureStore::generate(const PartitionMap& p, std::size_t dim, std::uint64_t seed) {
  FeatureStore fs(p, dim);
  for (auto& shard : fs.shards_)
    for (std::size_t r = 0; r < shard.ids.size(); ++r)
      for (std::size_t j = 0; j < dim; ++j)
        shard.data[r * dim + j] = generated_feature(seed, shard.ids[r], j);
  return fs;
}

FeatureStore FeatureStore::read(const PartitionMap& p, std::istream& in) {
  static_assert(std::endian::native == std::endian::little);
  char magic[4] = {};
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kFeatMagic, 4) != 0)
    throw FormatError("FEAT: bad magic");
  const std::uint64_t n = read_u64(in);
  const std::uint64_t dim = read_u64(in);
  if (n != p.num_vertices())
    throw FormatError("FEAT: file has " + std::to_string(n) + " rows, graph has " +
                      std::to_string(p.num_vertices()) + " vertices");
  if (dim == 0) throw FormatError("FEAT: zero dimension");
  FeatureStore fs(p, dim);
  std::vector<float> row(dim);
  for (VertexId v = 0; v < n; ++v) {
    if (!in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(dim * sizeof(float))))
      throw FormatError("FEAT: truncated row data");
    auto& shard = fs.shards_[p.home(v)];
    std::copy(row.begin(), row.end(), shard.data.begin() + static_cast<std::ptrdiff_t>(fs.local_index_[v] * dim));
  }
  return fs;
}

std::span<const float> FeatureStore::row(VertexId v) const {
  const auto& shard = shards_[partition_.home(v)];
  return {shard.data.data() + static_cast<std::size_t>(local_index_[v]) * dim_, dim_};
}

bool FeatureStore::shard_holds(ServerId s, VertexId v) const {
  const auto& ids = shards_.at(s).ids;
  return std::binary_search(ids.begin(), ids.end(), v);
}

void write_feature_file(std::ostream& out, const FeatureStore& fs) {
  out.write(kFeatMagic, 4);
  const std::uint64_t header[2] = {fs.num_vertices(), fs.dim()};
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  for (VertexId v = 0; v < fs.num_vertices(); ++v) {
    auto r = fs.row(v);
    out.write(reinterpret_cast<const char*>(r.data()), static_cast<std::streamsize>(r.size_bytes()));
  }
}

std::vector<float> fetch(ServerId at, std::span<const VertexId> ids, const FeatureStore& fs,
                         CommLedger& ledger, FetchStats* stats) {
  const std::size_t dim = fs.dim();
  const auto& p = fs.partition();
  std::vector<float> rows(ids.size() * dim);
  std::map<ServerId, std::uint64_t> remote_per_home;
  FetchStats local;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const ServerId home = p.home(ids[i]);
    auto r = fs.row(ids[i]);
    std::copy(r.begin(), r.end(), rows.begin() + static_cast<std::ptrdiff_t>(i * dim));
    if (home == at) {
      ++local.local_rows;
    } else {
      ++local.remote_rows;
      ++remote_per_home[home];
    }
  }
  for (auto [home, count] : remote_per_home)
    ledger.record(home, at, Category::Feature, count * dim * kBytesPerElement, 1);
  if (stats) *stats += local;
  return rows;
}

std::size_t PregatherPlan::num_rows() const noexcept {
  std::size_t total = 0;
  for (const auto& [src, ids] : by_source) total += ids.size();
  return total;
}

PregatherPlan plan_pregather(ServerId at, std::span<const std::vector<VertexId>> vertex_sets,
                             const PartitionMap& p) {
  std::vector<VertexId> remote;
  for (const auto& set : vertex_sets)
    for (VertexId v : set)
      if (p.home(v) != at) remote.push_back(v);
  std::sort(remote.begin(), remote.end());
  remote.erase(std::unique(remote.begin(), remote.end()), remote.end());
  PregatherPlan plan;
  plan.at = at;
  for (VertexId v : remote) plan.by_source[p.home(v)].push_back(v);
  return plan;
}

PregatherPlan plan_pregather(ServerId at, std::span<const Micrograph* const> micrographs,
                             const PartitionMap& p) {
  std::vector<std::vector<VertexId>> sets;
  sets.reserve(micrographs.size());
  for (const Micrograph* m : micrographs) sets.emplace_back(m->vertices().begin(), m->vertices().end());
  return plan_pregather(at, sets, p);
}

void StagedFeatures::insert(VertexId v, std::span<const float> row) {
  if (row.size() != dim_) throw std::invalid_argument("staged row has wrong dimension");
  auto [it, inserted] = index_.try_emplace(v, data_.size());
  if (inserted) data_.insert(data_.end(), row.begin(), row.end());
}

std::span<const float> StagedFeatures::row(VertexId v) const {
  return {data_.data() + index_.at(v), dim_};
}

StagedFeatures execute_pregather(const PregatherPlan& plan, const FeatureStore& fs,
                                 CommLedger& ledger) {
  StagedFeatures staged(fs.dim());
  for (const auto& [src, ids] : plan.by_source) {
    if (ids.empty()) continue;
    ledger.record(src, plan.at, Category::Feature, ids.size() * fs.dim() * kBytesPerElement, 1);
    for (VertexId v : ids) staged.insert(v, fs.row(v));
  }
  return staged;
}

}  // namespace hopgnn
