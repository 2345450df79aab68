#pragma once

#include <map>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace dpclust {

struct Spend {
  double epsilon = 0.0;
  double delta = 0.0;
};

/// Where a mechanism sits in the composition tree. Mechanisms sharing a
/// `group` run on disjoint data (parallel composition: the group costs the
/// max over its slots); charges inside one slot compose sequentially, and
/// distinct groups compose sequentially.
struct BudgetTag {
  std::string mechanism;
  std::string group;
  std::string slot;
};

struct LedgerEntry {
  BudgetTag tag;
  Spend spend;
};

class PrivacyBudget {
 public:
  /// Registers one mechanism. A mechanism id may only be charged once;
  /// a second registration throws ContractViolation.
  void charge(const BudgetTag& tag, Spend spend);

  /// Composed spend over every group.
  Spend total() const { return total_with_prefix(""); }
  /// Composed spend over groups whose name starts with `prefix`.
  Spend total_with_prefix(std::string_view prefix) const;

  const std::vector<LedgerEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::vector<LedgerEntry> entries_;
  std::unordered_set<std::string> ids_;
  std::map<std::string, std::map<std::string, Spend>> groups_;
};

}  // namespace dpclust
