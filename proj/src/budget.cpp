#include "dpclust/budget.hpp"

#include <algorithm>

#include "dpclust/errors.hpp"

namespace dpclust {

void PrivacyBudget::charge(const BudgetTag& tag, Spend spend) {
  if (!(spend.epsilon >= 0.0) || !(spend.delta >= 0.0)) {
    throw ContractViolation("budget charge must be nonnegative: " + tag.mechanism);
  }
  if (!ids_.insert(tag.mechanism).second) {
    throw ContractViolation("mechanism charged twice: " + tag.mechanism);
  }
  auto& slot = groups_[tag.group][tag.slot];
  slot.epsilon += spend.epsilon;
  slot.delta += spend.delta;
  entries_.push_back({tag, spend});
}

Spend PrivacyBudget::total_with_prefix(std::string_view prefix) const {
  Spend out;
  for (const auto& [group, slots] : groups_) {
    if (!std::string_view(group).starts_with(prefix)) continue;
    Spend g;
    for (const auto& [_, s] : slots) {
      g.epsilon = std::max(g.epsilon, s.epsilon);
      g.delta = std::max(g.delta, s.delta);
    }
    out.epsilon += g.epsilon;
    out.delta += g.delta;
  }
  return out;
}

}  // namespace dpclust
