#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>
#include <vector>

#include "dpclust/budget.hpp"
#include "dpclust/dp_primitives.hpp"

namespace dpclust {

struct HHConfig {
  double epsilon = 1.0;
  double theta = 0.1;
  double gamma_h = 0.25;
  std::int64_t horizon = 0;
  /// ln |U|; for cells at one quadtree level this is d * ln(#coords per axis).
  double log_universe = 0.0;
  double xi = 0.05;
  /// Power of the log factor in the admission threshold.
  double threshold_exponent = 2.0;
  bool noise_off = false;

  /// Throws ContractViolation naming the violated range.
  void validate() const;
};

struct HHReport {
  /// Item -> estimate, ordered by item id.
  std::map<std::uint64_t, double> fhat;

  bool contains(std::uint64_t item) const { return fhat.contains(item); }
  std::size_t size() const noexcept { return fhat.size(); }
};

/// Continual-release theta-heavy-hitter tracker over a stream of 64-bit item
/// ids, with EMPTY ticks that only advance time.
///
/// Candidates live in a Misra-Gries table of capacity ceil(4/theta). Each
/// candidate owns a binary-mechanism counter of its occurrences since
/// admission; a separate counter tracks the number of non-empty items. The
/// epsilon is split evenly between the length counter and the candidate
/// counters. An item is reported when its estimate clears both the admission
/// threshold tau = ln^e(T|U|/xi) / (eps * gamma_h) and (1 - gamma_h) * theta
/// times the noisy length. In noise-off mode tau = 0 and the rule is the exact
/// f >= theta * n.
class HeavyHitterSketch {
 public:
  HeavyHitterSketch(const HHConfig& cfg, std::uint64_t seed);

  /// Feeds EMPTY ticks until time() == t.
  void advance(std::int64_t t);
  void update_empty() { advance(t_ + 1); }
  void update(std::uint64_t item);

  /// Current report; also folds it into the historical set.
  HHReport report();
  /// Estimate for `item` if it is currently reported, else nullopt. Cheaper
  /// than report() when only one item matters.
  std::optional<double> query(std::uint64_t item);

  /// Every item ever returned by report() or a positive query().
  const std::set<std::uint64_t>& historical() const noexcept { return historical_; }

  std::int64_t time() const noexcept { return t_; }
  double noisy_length();
  double admission_threshold() const noexcept { return tau_; }
  std::size_t table_capacity() const noexcept { return capacity_; }
  std::size_t report_cap() const noexcept { return report_cap_; }
  std::size_t candidates() const noexcept { return table_.size(); }
  const HHConfig& config() const noexcept { return cfg_; }

  /// Charges the length counter and the candidate counters (parallel over
  /// candidates) under `group`; slot identifies the caller's parallel slot.
  void register_budget(PrivacyBudget& ledger, const std::string& mechanism, const std::string& group,
                       const std::string& slot);

  /// Sum of exact-read audits over every counter ever created.
  std::uint64_t exact_reads() const noexcept;

 private:
  struct Candidate {
    std::int64_t mg_count;
    BinaryMechanismCounter counter;
  };

  double estimate(Candidate& c);
  bool passes(double fhat, double length) const noexcept;

  HHConfig cfg_;
  std::uint64_t seed_;
  double tau_;
  std::size_t capacity_;
  std::size_t report_cap_;
  std::int64_t t_ = 0;
  std::uint64_t admissions_ = 0;
  BinaryMechanismCounter length_;
  std::unordered_map<std::uint64_t, Candidate> table_;
  std::set<std::uint64_t> historical_;
  std::uint64_t retired_reads_ = 0;
};

}  // namespace dpclust
