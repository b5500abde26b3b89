#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hopgnn/cluster.hpp"

namespace hopgnn {

inline constexpr const char* kResultsHeader =
    "epoch,strategy,sim_seconds,steps,feature_bytes,model_bytes,gradient_bytes,"
    "intermediate_bytes,topology_bytes,miss_rate,alpha,imbalance";

struct ResultRow {
  std::size_t epoch = 0;
  std::string strategy;
  double sim_seconds = 0.0;
  std::size_t steps = 0;
  std::uint64_t feature_bytes = 0;
  std::uint64_t model_bytes = 0;
  std::uint64_t gradient_bytes = 0;
  std::uint64_t intermediate_bytes = 0;
  std::uint64_t topology_bytes = 0;
  double miss_rate = 0.0;
  double alpha = 0.0;
  double imbalance = 0.0;

  std::uint64_t total_bytes() const noexcept {
    return feature_bytes + model_bytes + gradient_bytes + intermediate_bytes + topology_bytes;
  }

  static ResultRow from_epoch(const EpochMetrics& m);
  /// Whole-run row: sums over epochs; `epoch` holds the epoch count, miss rate
  /// and alpha are recomputed from the totals, imbalance is the epoch mean.
  static ResultRow aggregate(std::span<const EpochMetrics> epochs, const ModelDims& dims);

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

/// Doubles use the shortest representation that parses back bit-exactly.
void write_results_csv(std::ostream& out, std::span<const ResultRow> rows);
std::string format_result_row(const ResultRow& row);
/// Throws ParseError on a wrong header or malformed row.
std::vector<ResultRow> read_results_csv(std::istream& in);

}  // namespace hopgnn
