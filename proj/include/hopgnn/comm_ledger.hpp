#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string_view>
#include <tuple>
#include <vector>

#include "hopgnn/common.hpp"

namespace hopgnn {

enum class Category : std::uint8_t { Feature, Model, Gradient, Intermediate, Topology };
inline constexpr std::size_t kNumCategories = 5;
inline constexpr std::array<Category, kNumCategories> kAllCategories = {
    Category::Feature, Category::Model, Category::Gradient, Category::Intermediate,
    Category::Topology};

std::string_view to_string(Category c);

struct LinkCounter {
  std::uint64_t bytes = 0;
  std::uint64_t messages = 0;
  friend bool operator==(const LinkCounter&, const LinkCounter&) = default;
};

struct LedgerEvent {
  ServerId src;
  ServerId dst;
  Category category;
  std::uint64_t bytes;
  std::uint64_t messages;
};

/// Byte and message counters per directed link and traffic category.
/// Counters only grow; merging is plain addition and therefore
/// order-independent.
class CommLedger {
 public:
  using Key = std::tuple<ServerId, ServerId, Category>;

  /// Throws InvariantViolation for a self-link.
  void record(ServerId src, ServerId dst, Category category, std::uint64_t bytes,
              std::uint64_t messages = 1);
  void merge(const CommLedger& other);

  LinkCounter link(ServerId src, ServerId dst, Category category) const;
  std::uint64_t category_bytes(Category category) const;
  std::uint64_t category_messages(Category category) const;
  std::uint64_t total_bytes() const;
  std::uint64_t total_messages() const;

  const std::map<Key, LinkCounter>& counters() const noexcept { return counters_; }
  /// Every record() call in arrival order (merged ledgers append).
  const std::vector<LedgerEvent>& events() const noexcept { return events_; }

  friend bool operator==(const CommLedger& a, const CommLedger& b) {
    return a.counters_ == b.counters_;
  }

 private:
  std::map<Key, LinkCounter> counters_;
  std::vector<LedgerEvent> events_;
};

}  // namespace hopgnn
