#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hopgnn/comm_ledger.hpp"

namespace hopgnn {

/// Analytic stand-in for wall-clock time. Bandwidth may be +infinity.
struct CostModel {
  double bandwidth = 1.25e9;     // bytes / second per link
  double latency = 5e-5;         // seconds per message
  double sync_overhead = 1e-3;   // seconds per time step
  double kernel_launch = 2e-5;   // seconds per micrograph-batch launch
  double compute_rate = 1e-9;    // seconds per (vertex * dim)

  void validate() const;
};

/// What one server did during one time step. Messages and bytes are the ones
/// it received.
struct ServerLoad {
  std::uint64_t launches = 0;
  std::uint64_t work = 0;
  std::uint64_t messages = 0;
  std::uint64_t bytes = 0;

  ServerLoad& operator+=(const ServerLoad& o) noexcept {
    launches += o.launches;
    work += o.work;
    messages += o.messages;
    bytes += o.bytes;
    return *this;
  }
};

double server_time(const ServerLoad& load, const CostModel& cm);

/// max over servers of compute + communication, plus the per-step sync overhead.
double simulated_step_time(std::span<const ServerLoad> servers, const CostModel& cm);

/// Bytes ring all-reduce moves on link s -> (s+1) mod n for a tensor of
/// `payload_bytes` split into n near-equal chunks: 2(n-1) chunk sends per link.
std::vector<std::uint64_t> ring_allreduce_link_bytes(std::size_t n_servers,
                                                     std::uint64_t payload_bytes);

/// Records the all-reduce on the gradient category.
void record_ring_allreduce(CommLedger& ledger, std::size_t n_servers, std::uint64_t payload_bytes);

/// Duration of the all-reduce (no sync overhead).
double ring_allreduce_time(std::size_t n_servers, std::uint64_t payload_bytes, const CostModel& cm);

}  // namespace hopgnn
