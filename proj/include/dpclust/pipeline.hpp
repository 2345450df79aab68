#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "dpclust/bicriteria.hpp"
#include "dpclust/budget.hpp"
#include "dpclust/geometry.hpp"
#include "dpclust/merge_reduce.hpp"

namespace dpclust {

struct PipelineConfig {
  int k = 1;
  Objective z = Objective::kMeans;
  std::size_t dim = 1;
  double radius = 1.0;
  std::int64_t horizon = 0;
  double epsilon = 1.0;
  double epsilon1 = 1.0;
  double delta1 = 1e-6;
  double gamma = 0.2;

  // bicriteria knobs (0 = derived default)
  double theta = 0.0;
  double gamma_h = 0.25;
  int buckets = 0;
  double prune_constant = 1000.0;
  double hh_threshold_exponent = 2.0;
  double cap_constant = 8.0;

  // merge-reduce knobs
  std::int64_t block_size = 0;  // 0 = derived from the sparse-vector bound
  double c_m = 100.0;
  double alpha = 0.0;  // 0 = d^3
  double schedule_c = 6.0;
  ConstructionBParams b;

  bool noise_off = false;
  bool track_analysis = false;
  /// Throw CapacityExceeded when a space bound is violated.
  bool check_space_bounds = true;

  /// Throws ContractViolation naming the violated inequality.
  void validate() const;

  double rounded_radius() const { return round_up_pow2(radius); }
  /// log2 of the rounded radius; rings are 0..max_ring().
  int max_ring() const;
  BicriteriaConfig bicriteria() const;
  /// max(1e-9, 1 / (3 |F|cap log Lambda T^2))
  double xi() const;
  double alpha_value() const noexcept;
  /// Per-flush additive error proxy of construction A in count units: k * tau_A.
  double eta2_hat() const;
  std::int64_t resolved_block_size() const;
  MRConfig merge_reduce() const;
  /// (log Lambda + 1) * 3M/2
  std::size_t raw_point_bound() const;
  /// Size bound of every B output, hence of the release.
  std::size_t release_bound() const;
};

/// Ring of a point at distance D from F: 0 when D < 1, else floor(log2 D) + 1,
/// clamped to max_ring; max_ring when F is empty.
int ring_of(const Point& x, std::span<const Point> f, int max_ring);
int ring_of_distance(double d, int max_ring);

/// k centers for a released set (pure post-processing). Throws NoData on an
/// empty set.
CenterSet finalize_centers(std::span<const WeightedPoint> y, int k, Objective z, std::uint64_t seed);

/// Streaming DP clustering: bicriteria centers define epochs and rings; each
/// ring of the current epoch feeds its own merge-reduce instance; the union of
/// their latest outputs plus the compacted earlier epochs is Y-hat, and the
/// release is a (1+gamma)-coreset of Y-hat.
class Pipeline {
 public:
  Pipeline(const PipelineConfig& cfg, std::uint64_t seed);

  /// Processes x_t; returns the release for this timestep.
  const WeightedSet& update(const Point& x);
  /// Current release (B applied to Y-hat, cached until Y-hat changes).
  const WeightedSet& release();

  std::int64_t time() const noexcept { return t_; }
  int epoch() const noexcept { return epoch_; }
  std::size_t num_centers() const noexcept { return bicriteria_.centers().size(); }
  const Bicriteria& bicriteria() const noexcept { return bicriteria_; }
  /// Raw points currently buffered across the epoch's instances.
  std::size_t live_raw_points() const noexcept;
  std::size_t peak_live_raw_points() const noexcept { return peak_live_; }
  /// |Y-hat| (before the per-tick compaction).
  std::size_t union_size() const noexcept;
  std::size_t peak_release_size() const noexcept { return peak_release_; }
  std::int64_t block_size() const noexcept { return mr_cfg_.block_size; }
  const PipelineConfig& config() const noexcept { return cfg_; }
  const PrivacyBudget& budget() const noexcept { return budget_; }

  /// Ring and distance-to-F of the last processed point (distance is +inf
  /// when F was empty).
  int last_ring() const noexcept { return last_ring_; }
  double last_distance() const noexcept { return last_distance_; }
  bool last_opened_epoch() const noexcept { return last_opened_; }
  const MergeReduce& instance(int ring) const { return *instances_.at(static_cast<std::size_t>(ring)); }

 private:
  void open_epoch();
  void retire_epoch();
  WeightedSet union_set() const;

  PipelineConfig cfg_;
  std::uint64_t seed_;
  MRConfig mr_cfg_;
  PrivacyBudget budget_;
  Bicriteria bicriteria_;
  std::vector<std::unique_ptr<MergeReduce>> instances_;
  std::vector<std::optional<WeightedSet>> latest_;  // per ring, current epoch
  WeightedSet prior_;                               // compacted earlier epochs
  WeightedSet release_;
  bool dirty_ = false;
  std::uint64_t release_version_ = 0;
  std::int64_t t_ = 0;
  int epoch_ = 0;
  std::size_t peak_live_ = 0;
  std::size_t peak_release_ = 0;
  int last_ring_ = -1;
  double last_distance_ = 0.0;
  bool last_opened_ = false;
};

}  // namespace dpclust
