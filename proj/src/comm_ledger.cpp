#include "hopgnn/comm_ledger.hpp"

#include <string>

namespace hopgnn {

std::string_view to_string(Category c) {
  switch (c) {
    case Category::Feature: return "feature";
    case Category::Model: return "model";
    case Category::Gradient: return "gradient";
    case Category::Intermediate: return "intermediate";
    case Category::Topology: return "topology";
  }
  return "unknown";
}

void CommLedger::record(ServerId src, ServerId dst, Category category, std::uint64_t bytes,
                        std::uint64_t messages) {
  if (src == dst)
    throw InvariantViolation("ledger: self-link " + std::to_string(src) + " -> " +
                             std::to_string(dst));
  auto& c = counters_[{src, dst, category}];
  c.bytes += bytes;
  c.messages += messages;
  events_.push_back({src, dst, category, bytes, messages});
}

void CommLedger::merge(const CommLedger& other) {
  for (const auto& [key, c] : other.counters_) {
    auto& mine = counters_[key];
    mine.bytes += c.bytes;
    mine.messages += c.messages;
  }
  events_.insert(events_.end(), other.events_.begin(), other.events_.end());
}

LinkCounter CommLedger::link(ServerId src, ServerId dst, Category category) const {
  auto it = counters_.find({src, dst, category});
  return it == counters_.end() ? LinkCounter{} : it->second;
}

std::uint64_t CommLedger::category_bytes(Category category) const {
  std::uint64_t total = 0;
  for (const auto& [key, c] : counters_)
    if (std::get<2>(key) == category) total += c.bytes;
  return total;
}

std::uint64_t CommLedger::category_messages(Category category) const {
  std::uint64_t total = 0;
  for (const auto& [key, c] : counters_)
    if (std::get<2>(key) == category) total += c.messages;
  return total;
}

std::uint64_t CommLedger::total_bytes() const {
  std::uint64_t total = 0;
  for (const auto& [key, c] : counters_) total += c.bytes;
  return total;
}

std::uint64_t CommLedger::total_messages() const {
  std::uint64_t total = 0;
  for (const auto& [key, c] : counters_) total += c.messages;
  return total;
}

}  // namespace hopgnn
