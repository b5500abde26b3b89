#include "hopgnn/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hopgnn {

void CostModel::validate() const {
  if (!(bandwidth > 0.0)) throw std::invalid_argument("cost model: bandwidth must be > 0");
  for (double v : {latency, sync_overhead, kernel_launch, compute_rate})
    if (!(v >= 0.0) || std::isinf(v)) throw std::invalid_argument("cost model: fields must be finite and >= 0");
}

double server_time(const ServerLoad& load, const CostModel& cm) {
  const double compute = cm.kernel_launch * static_cast<double>(load.launches) +
                         cm.compute_rate * static_cast<double>(load.work);
  const double comm = cm.latency * static_cast<double>(load.messages) +
                      static_cast<double>(load.bytes) / cm.bandwidth;
  return compute + comm;
}

double simulated_step_time(std::span<const ServerLoad> servers, const CostModel& cm) {
  double slowest = 0.0;
  for (const auto& s : servers) slowest = std::max(slowest, server_time(s, cm));
  return slowest + cm.sync_overhead;
}

std::vector<std::uint64_t> ring_allreduce_link_bytes(std::size_t n, std::uint64_t payload) {
  if (n <= 1) return std::vector<std::uint64_t>(n, 0);
  auto chunk = [&](std::size_t c) { return payload / n + (c < payload % n ? 1 : 0); };
  std::vector<std::uint64_t> link(n, 0);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      link[s] += chunk((s + n - i) % n);          // reduce-scatter
      link[s] += chunk((s + 1 + n - i) % n);      // all-gather
    }
  }
  return link;
}

void record_ring_allreduce(CommLedger& ledger, std::size_t n, std::uint64_t payload) {
  if (n <= 1) return;
  const auto link = ring_allreduce_link_bytes(n, payload);
  for (std::size_t s = 0; s < n; ++s)
    ledger.record(static_cast<ServerId>(s), static_cast<ServerId>((s + 1) % n), Category::Gradient,
                  link[s], 2 * (n - 1));
}

double ring_allreduce_time(std::size_t n, std::uint64_t payload, const CostModel& cm) {
  if (n <= 1) return 0.0;
  const auto link = ring_allreduce_link_bytes(n, payload);
  double slowest = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    ServerLoad in;
    in.messages = 2 * (n - 1);
    in.bytes = link[(s + n - 1) % n];
    slowest = std::max(slowest, server_time(in, cm));
  }
  return slowest;
}

}  // namespace hopgnn
