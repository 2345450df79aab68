#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dpclust/budget.hpp"
#include "dpclust/dp_primitives.hpp"
#include "dpclust/geometry.hpp"
#include "dpclust/quadtree.hpp"

namespace dpclust {

/// Two-sided error certificate of a weighted set Q for a point set P, in
/// absolute cost units: for every center set C,
///   lower * cost(C,P) - eta1 * OPT(P) - eta2 <= cost(C,Q) <= upper * cost(C,P) + eta2.
/// An exact copy is {1, 1, 0, 0}; a (1+g)-coreset is {1+g, 1-g, 0, 0}.
struct Certificate {
  double upper = 1.0;
  double lower = 1.0;
  double eta1 = 0.0;
  double eta2 = 0.0;

  static Certificate coreset(double gamma) noexcept { return {1.0 + gamma, 1.0 - gamma, 0.0, 0.0}; }

  /// Certificate of Q u Q' for P u P' (P, P' disjoint).
  static Certificate merge(const Certificate& a, const Certificate& b) noexcept;
  /// Certificate of a (1+gamma)-coreset of the certified set.
  Certificate reduce(double gamma) const noexcept;

  /// Checks the two inequalities for one center set, given cost(C,P),
  /// cost(C,Q) and OPT(P) (any lower bound on OPT(P) is conservative).
  bool holds(double cost_p, double cost_q, double opt_p, double rel_tol = 1e-9) const noexcept;

  friend bool operator==(const Certificate&, const Certificate&) = default;
};

struct Semicoreset {
  WeightedSet points;
  Certificate cert;
  int level = 0;
};

// ---------------------------------------------------------------------------
// Offline constructions

struct ConstructionAParams {
  double epsilon1 = 1.0;
  double delta1 = 1e-6;
  bool noise_off = false;
  /// Failure probability used only for the recorded noise term of eta2.
  double xi_a = 0.01;
};

/// Noisy-histogram semicoreset: snap every point to the center of its
/// bottom-level cell in `tree`, add Laplace(1/eps1) to each occupied cell's
/// count, drop cells whose noisy count is below (2/eps1) ln(2/delta1), and
/// keep the rest with their noisy counts as weights. Throws ContractViolation
/// on empty input.
Semicoreset dp_semicoreset_a(std::span<const Point> block, const ShiftedQuadtree& tree, Objective z,
                             const ConstructionAParams& params, Rng& rng);

/// (2/eps1) ln(2/delta1); zero when noise is off.
double construction_a_prune_threshold(const ConstructionAParams& params);

struct ConstructionBParams {
  double c_b = 0.05;
  double xi_b = 0.01;
  int lloyd_iters = 2;
};

/// ceil(c_B k max(1, log2 k) gamma^-4 ln(1/xi_B)).
std::size_t coreset_b_target_size(int k, double gamma, const ConstructionBParams& params = {});

/// Sensitivity-sampling coreset. Identical points are coalesced first; if
/// the result is no larger than the target size it is returned as is.
/// Otherwise samples the target number of points i.i.d. proportional to
/// w(x) d^z(x,B)/cost(B) + w(x)/W(cluster of x) for a k-means++ solution B,
/// reweights by inverse probability and rescales to the input's total weight.
WeightedSet nondp_coreset_b(std::span<const WeightedPoint> q, int k, Objective z, double gamma, std::uint64_t seed,
                            const ConstructionBParams& params = {});

/// Replaces each cluster of `p` (nearest-center assignment) by its center
/// weighted with a Laplace(2/eps)-noised count; non-positive weights are
/// dropped. With noise on, throws TooSmall unless |P| >= k ln|P| / eps.
WeightedSet clustering_to_semicoreset(const CenterSet& centers, std::span<const Point> p, double epsilon,
                                      bool noise_off, Rng& rng);

// ---------------------------------------------------------------------------
// DP merge-and-reduce instance

struct MRConfig {
  int k = 1;
  Objective z = Objective::kMeans;
  std::size_t dim = 1;
  double radius = 1.0;
  std::int64_t horizon = 0;
  double epsilon = 1.0;   // above-threshold budget
  double epsilon1 = 1.0;  // construction A
  double delta1 = 1e-6;
  double gamma = 0.2;
  double schedule_c = 6.0;
  std::int64_t block_size = 0;  // M
  double xi = 1e-9;             // above-threshold failure probability
  ConstructionBParams b;
  bool noise_off = false;
  /// Keep the raw sets P_1..P_u alongside the Q_i (tests only).
  bool track_analysis = false;

  void validate() const;
  /// gamma / (C i^2)
  double gamma_at(int level) const noexcept;
};

/// max(ceil(1.1 (12/eps) ln(2T/xi)), ceil(alpha * eta2_hat / c_m)).
std::int64_t default_block_size(double epsilon, std::int64_t horizon, double xi, double alpha, double eta2_hat,
                                double c_m);

/// Largest gamma <= 0.5 grid check that prod_{j=1}^{40} (1 + gamma/(C j^2)) <= 1 + gamma/3.
bool schedule_telescopes(double schedule_c, double gamma);

class MergeReduce {
 public:
  MergeReduce(const MRConfig& cfg, std::uint64_t seed);

  /// A non-empty point enters the level-0 buffer; the release is returned
  /// when the sparse-vector test fires, nullopt otherwise.
  std::optional<Semicoreset> update(const Point& x);
  /// EMPTY tick: advances time only, O(1).
  void update_empty();
  /// Flushes a non-empty buffer through A regardless of the threshold test
  /// (used when the instance is retired). nullopt if the buffer is empty.
  std::optional<Semicoreset> force_flush();

  std::int64_t time() const noexcept { return t_; }
  std::size_t buffer_size() const noexcept { return buffer_.size(); }
  std::size_t peak_buffer() const noexcept { return peak_buffer_; }
  std::int64_t points_seen() const noexcept { return seen_; }
  int flushes() const noexcept { return flushes_; }
  /// Highest level that has ever held a coreset.
  int max_level() const noexcept { return max_level_; }
  /// Occupied level indices, ascending.
  std::vector<int> occupied_levels() const;
  const MRConfig& config() const noexcept { return cfg_; }

  /// Raw points summarized by the level-i slot (tracking builds only, i >= 1).
  const WeightedSet& analysis_set(int level) const;
  /// All raw non-empty points seen so far, buffer included (tracking builds only).
  WeightedSet analysis_all() const;

  /// Charges the threshold test (eps) and construction A (eps1, delta1) to
  /// one parallel slot; blocks are disjoint so A is charged once.
  void register_budget(PrivacyBudget& ledger, const std::string& mechanism, const std::string& group,
                       const std::string& slot) const;

 private:
  Semicoreset flush();
  Semicoreset release();

  MRConfig cfg_;
  std::uint64_t seed_;
  ShiftedQuadtree tree_;
  AboveThreshold sparse_;
  Rng a_rng_;
  std::int64_t t_ = 0;
  std::int64_t seen_ = 0;
  std::vector<Point> buffer_;
  std::size_t peak_buffer_ = 0;
  std::vector<std::optional<Semicoreset>> slots_;  // index = level
  std::vector<WeightedSet> analysis_;              // index = level
  int flushes_ = 0;
  int max_level_ = 0;
  std::uint64_t b_calls_ = 0;
};

}  // namespace dpclust
