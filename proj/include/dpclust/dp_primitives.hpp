#pragma once

#include <cstdint>
#include <optional>

#include "dpclust/budget.hpp"
#include "dpclust/random.hpp"

namespace dpclust {

/// Scale b of a centered Laplace distribution, or the "noise off" marker
/// used by oracle tests (draws exactly 0).
class LaplaceScale {
 public:
  static LaplaceScale of(double b);
  static LaplaceScale off() noexcept { return LaplaceScale{}; }

  bool is_off() const noexcept { return !b_.has_value(); }
  double b() const noexcept { return b_.value_or(0.0); }

 private:
  LaplaceScale() = default;
  explicit LaplaceScale(double b) : b_(b) {}
  std::optional<double> b_;
};

/// Inverse-CDF Laplace draw from a uniform u in (0, 1).
double laplace_from_uniform(double b, double u) noexcept;
double laplace(LaplaceScale scale, Rng& rng);

/// Continual-release counter over a stream of nonnegative increments
/// (classic dyadic-tree binary mechanism).
///
/// The release at time t is the exact prefix sum plus one Laplace draw per
/// dyadic node in the binary decomposition of [1, t] (one node per set bit
/// of t, at most ceil(log2 T) + 1 of them), each at scale
/// (ceil(log2 T) + 1) / epsilon. Node noise is a pure function of
/// (seed, level, block index), so a node is sampled the first time it is
/// needed and every later read sees the same value. That also makes zero
/// increments free: advance_to() only moves the clock.
class BinaryMechanismCounter {
 public:
  BinaryMechanismCounter(std::int64_t horizon, double epsilon, std::uint64_t seed, bool noise_off = false);

  /// Adds one timestep with `increment` and returns the noisy prefix sum.
  /// Throws HorizonExhausted once t == T.
  double update(std::int64_t increment);
  /// Feeds zero increments until time() == t.
  void advance_to(std::int64_t t);
  /// Noisy prefix sum at the current time.
  double release() const noexcept;

  std::int64_t time() const noexcept { return t_; }
  std::int64_t horizon() const noexcept { return horizon_; }
  double epsilon() const noexcept { return epsilon_; }
  double node_scale() const noexcept { return node_scale_; }
  bool noise_off() const noexcept { return noise_off_; }

  /// Charges this instance's epsilon to `ledger`; only once per instance.
  void register_budget(PrivacyBudget& ledger, const BudgetTag& tag);

  /// Raw prefix sum. Every call is counted so tests can prove that released
  /// quantities never consult it.
  std::int64_t audited_exact_sum() const noexcept {
    ++exact_reads_;
    return sum_;
  }
  std::uint64_t exact_reads() const noexcept { return exact_reads_; }

 private:
  double node_noise(int level, std::int64_t block) const noexcept;

  std::int64_t horizon_;
  double epsilon_;
  double node_scale_;
  std::uint64_t seed_;
  bool noise_off_;
  std::int64_t t_ = 0;
  std::int64_t sum_ = 0;
  bool charged_ = false;
  mutable std::uint64_t exact_reads_ = 0;
};

/// Sparse-vector test used to decide when the level-0 buffer is full:
/// TOP iff p0 + Lap(4/eps) >= M_hat, where M_hat = M + Lap(2/eps) is redrawn
/// after every TOP and the query noise is drawn per call.
class AboveThreshold {
 public:
  /// Throws ContractViolation unless M > (12/eps) ln(2T/xi) (skipped in
  /// noise-off mode, where the test is exact).
  AboveThreshold(double epsilon, double threshold, std::int64_t horizon, double xi, std::uint64_t seed,
                 bool noise_off = false);

  /// (12/eps) ln(2T/xi), the strict lower bound on M.
  static double min_threshold(double epsilon, std::int64_t horizon, double xi);

  /// True for TOP.
  bool query(std::int64_t p0);

  double threshold() const noexcept { return threshold_; }
  double noisy_threshold() const noexcept { return noisy_threshold_; }
  double last_query_noise() const noexcept { return last_nu_; }
  double epsilon() const noexcept { return epsilon_; }

 private:
  void resample_threshold();

  double epsilon_;
  double threshold_;
  bool noise_off_;
  Rng rng_;
  double noisy_threshold_ = 0.0;
  double last_nu_ = 0.0;
};

}  // namespace dpclust
