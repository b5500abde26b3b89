#include "hopgnn/sampler.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace hopgnn {

namespace {

// Partial Fisher-Yates: the first k entries of `pool` become a uniform sample
// without replacement.
void select_prefix(std::vector<VertexId>& pool, std::size_t k, CounterRng& rng) {
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
}

// Layer under construction: starts as a copy of the layer above it.
class LayerBuilder {
 public:
  explicit LayerBuilder(const std::vector<VertexId>& upper) : vertices_(upper) {
    index_.reserve(upper.size() * 4);
    for (std::uint32_t i = 0; i < upper.size(); ++i) index_.emplace(upper[i], i);
  }

  std::uint32_t index_of(VertexId v) {
    auto [it, inserted] = index_.try_emplace(v, static_cast<std::uint32_t>(vertices_.size()));
    if (inserted) vertices_.push_back(v);
    return it->second;
  }

  std::vector<VertexId> take() { return std::move(vertices_); }

 private:
  std::vector<VertexId> vertices_;
  std::unordered_map<VertexId, std::uint32_t> index_;
};

}  // namespace

std::size_t SamplerConfig::fanout_for_hop(std::size_t hop) const {
  if (fanouts.empty()) throw std::invalid_argument("sampler: no fanout configured");
  return fanouts.size() == 1 ? fanouts.front() : fanouts.at(hop);
}

void SamplerConfig::validate() const {
  if (n_layers == 0) throw std::invalid_argument("sampler: n_layers must be >= 1");
  if (fanouts.empty() || (fanouts.size() != 1 && fanouts.size() != n_layers))
    throw std::invalid_argument("sampler: need one fanout or one per layer");
  for (std::size_t f : fanouts)
    if (f == 0) throw std::invalid_argument("sampler: fanouts must be >= 1");
}

std::size_t Micrograph::layer_entries() const noexcept {
  std::size_t total = 0;
  for (const auto& layer : layers) total += layer.size();
  return total;
}

std::size_t Micrograph::num_edges() const noexcept {
  std::size_t total = 0;
  for (const auto& e : edges) total += e.size();
  return total;
}

Micrograph sample_micrograph(const Graph& g, const SamplerConfig& cfg, const StreamKey& key) {
  cfg.validate();
  if (key.root >= g.num_vertices()) throw std::out_of_range("sample_micrograph: root out of range");
  const std::size_t L = cfg.n_layers;

  Micrograph m;
  m.root = static_cast<VertexId>(key.root);
  m.layers.resize(L + 1);
  m.edges.resize(L + 1);
  m.layers[L] = {m.root};
  const std::uint64_t stream = key.hash();

  std::vector<VertexId> pool;
  for (std::size_t k = L; k >= 1; --k) {
    const std::size_t fanout = cfg.fanout_for_hop(L - k);
    const auto& upper = m.layers[k];
    LayerBuilder lower(upper);
    auto& edges = m.edges[k];

    if (cfg.mode == SamplerMode::NodeWise) {
      for (std::uint32_t i = 0; i < upper.size(); ++i) {
        auto nb = g.neighbors(upper[i]);
        pool.assign(nb.begin(), nb.end());
        if (pool.size() > fanout) {
          CounterRng rng({stream, k, upper[i]});
          select_prefix(pool, fanout, rng);
          pool.resize(fanout);
          std::sort(pool.begin(), pool.end());
        }
        for (VertexId w : pool) edges.push_back({i, lower.index_of(w)});
      }
    } else {
      pool.clear();
      for (VertexId v : upper) {
        auto nb = g.neighbors(v);
        pool.insert(pool.end(), nb.begin(), nb.end());
      }
      std::sort(pool.begin(), pool.end());
      pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
      if (pool.size() > fanout) {
        CounterRng rng({stream, k});
        select_prefix(pool, fanout, rng);
        pool.resize(fanout);
        std::sort(pool.begin(), pool.end());
      }
      for (std::uint32_t i = 0; i < upper.size(); ++i) {
        for (VertexId w : g.neighbors(upper[i])) {
          if (std::binary_search(pool.begin(), pool.end(), w))
            edges.push_back({i, lower.index_of(w)});
        }
      }
    }
    m.layers[k - 1] = lower.take();
  }
  return m;
}

std::vector<VertexId> Subgraph::unique_vertices() const {
  std::vector<VertexId> all;
  for (const auto& m : members) all.insert(all.end(), m.vertices().begin(), m.vertices().end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

Subgraph build_subgraph(std::vector<Micrograph> micros) {
  Subgraph sg;
  std::unordered_set<VertexId> seen;
  for (const auto& m : micros) {
    if (!seen.insert(m.root).second)
      throw std::invalid_argument("build_subgraph: duplicate root " + std::to_string(m.root));
    sg.roots.push_back(m.root);
  }
  sg.members = std::move(micros);
  return sg;
}

std::size_t MiniBatchPlan::server_total(ServerId s) const {
  std::size_t total = 0;
  for (const auto& per_server : groups) total += per_server.at(s).size();
  return total;
}

MiniBatchPlan redistribute_roots(std::span<const std::vector<VertexId>> batches,
                                 const PartitionMap& p) {
  MiniBatchPlan plan;
  plan.batches.assign(batches.begin(), batches.end());
  plan.groups.assign(batches.size(), std::vector<std::vector<VertexId>>(p.num_servers()));
  for (std::size_t d = 0; d < batches.size(); ++d)
    for (VertexId v : batches[d]) plan.groups[d][p.home(v)].push_back(v);
  return plan;
}

double load_imbalance(const MiniBatchPlan& plan) {
  const std::size_t S = plan.num_servers();
  if (S == 0) return 0.0;
  std::size_t lo = ~std::size_t{0};
  std::size_t hi = 0;
  std::size_t sum = 0;
  for (ServerId s = 0; s < S; ++s) {
    const std::size_t t = plan.server_total(s);
    lo = std::min(lo, t);
    hi = std::max(hi, t);
    sum += t;
  }
  if (sum == 0) return 0.0;
  const double mean = static_cast<double>(sum) / static_cast<double>(S);
  return static_cast<double>(hi - lo) / mean;
}

std::vector<std::vector<std::vector<VertexId>>> make_epoch_batches(
    std::span<const VertexId> train, std::size_t n_models, std::size_t batch_size,
    std::uint64_t seed, std::uint64_t epoch) {
  if (n_models == 0 || batch_size == 0)
    throw std::invalid_argument("make_epoch_batches: models and batch size must be >= 1");
  std::vector<VertexId> order(train.begin(), train.end());
  CounterRng rng({seed, epoch, 0xba7c4});
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

  const std::size_t per_iteration = n_models * batch_size;
  std::vector<std::vector<std::vector<VertexId>>> iterations;
  for (std::size_t start = 0; start < order.size(); start += per_iteration) {
    const std::size_t count = std::min(per_iteration, order.size() - start);
    std::vector<std::vector<VertexId>> batches(n_models);
    std::size_t pos = start;
    for (std::size_t d = 0; d < n_models; ++d) {
      const std::size_t take = count / n_models + (d < count % n_models ? 1 : 0);
      batches[d].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                        order.begin() + static_cast<std::ptrdiff_t>(pos + take));
      pos += take;
    }
    iterations.push_back(std::move(batches));
  }
  return iterations;
}

void write_batch_dump(std::ostream& out, std::uint64_t epoch, std::uint64_t iteration,
                      std::span<const std::vector<VertexId>> batches) {
  for (std::size_t d = 0; d < batches.size(); ++d) {
    out << epoch << ' ' << iteration << ' ' << d << ' ';
    for (std::size_t i = 0; i < batches[d].size(); ++i) out << (i ? "," : "") << batches[d][i];
    out << '\n';
  }
}

}  // namespace hopgnn
