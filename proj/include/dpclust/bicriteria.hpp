#pragma once

#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "dpclust/budget.hpp"
#include "dpclust/dp_primitives.hpp"
#include "dpclust/geometry.hpp"
#include "dpclust/heavy_hitters.hpp"
#include "dpclust/quadtree.hpp"

namespace dpclust {

struct BicriteriaConfig {
  double epsilon = 1.0;
  int k = 1;
  double radius = 1.0;  // rounded up to a power of two on construction
  std::size_t dim = 1;
  std::int64_t horizon = 0;
  int buckets = 0;       // 0 means 40k
  double theta = 0.0;    // 0 means k / (2 * buckets), i.e. 1/80 at the default bucket count
  double gamma_h = 0.25;
  double prune_constant = 1000.0;
  double hh_threshold_exponent = 2.0;
  double cap_constant = 8.0;
  bool noise_off = false;

  void validate() const;

  int bucket_count() const noexcept { return buckets > 0 ? buckets : 40 * k; }
  double theta_value() const noexcept { return theta > 0.0 ? theta : static_cast<double>(k) / (2.0 * bucket_count()); }
  double rounded_radius() const { return round_up_pow2(radius); }
  int num_levels() const;
  int num_trees() const noexcept;
  int num_reps() const noexcept;
  /// epsilon split evenly over one counter and one sketch per (level, tree, rep).
  double eps_prime() const;
  double hh_xi() const noexcept;
  /// c * k * log^2 k * log Lambda * log T, each log floored at 1.
  std::size_t center_cap() const;
};

__extension__ typedef unsigned __int128 uint128;

/// Multiply-add-shift hash: (a * key + b) mod 2^128, top 64 bits, mapped to [w].
struct BucketHash {
  uint128 a = 1;
  uint128 b = 0;

  static BucketHash from_seed(std::uint64_t seed) noexcept;
  std::uint32_t operator()(std::uint64_t key, std::uint32_t w) const noexcept;
};

inline std::uint32_t bucket_hash(std::uint64_t key, std::uint32_t w, const BucketHash& h) noexcept { return h(key, w); }

struct BicriteriaCenter {
  Point point;
  double weight = 0.0;
  std::int64_t birth = 0;
  std::uint64_t cell = 0;
};

/// Continual-release bicriteria center discovery over parallel shifted
/// quadtrees. Per point and per (level, tree, repetition) the point's cell is
/// hashed to a bucket; that bucket's size counter gets a 1 and its sketch
/// gets the cell. Every other bucket implicitly sees 0 / EMPTY (lazily, by
/// advancing clocks). Only the touched cell can newly pass the report rule in
/// a tick when noise is off; with noise on we still only test the touched
/// cell, which is post-processing of released values.
class Bicriteria {
 public:
  Bicriteria(const BicriteriaConfig& cfg, std::uint64_t seed);

  /// Processes x_t and returns centers added to F in this tick (possibly none).
  /// Throws CapacityExceeded if F would outgrow center_cap().
  std::vector<BicriteriaCenter> update(const Point& x);

  const std::vector<BicriteriaCenter>& centers() const noexcept { return centers_; }
  /// Center locations only, aligned with centers().
  const std::vector<Point>& center_points() const noexcept { return points_; }
  std::int64_t time() const noexcept { return t_; }
  const BicriteriaConfig& config() const noexcept { return cfg_; }
  const ShiftedQuadtree& tree(int q) const { return trees_.at(static_cast<std::size_t>(q)); }

  /// Bucket a cell key falls into for (level, tree, rep); exposed for oracles.
  std::uint32_t bucket_index(int level, int tree, int rep, std::uint64_t key) const;

  /// One size counter and one sketch per bucket; buckets of one
  /// (level, tree, rep) compose in parallel.
  void register_budget(PrivacyBudget& ledger) const;

  /// Exact-read audits over all instantiated counters and sketches.
  std::uint64_t exact_reads() const noexcept;

 private:
  struct Bucket {
    BinaryMechanismCounter size;
    HeavyHitterSketch hh;
  };
  struct Instance {
    int level;
    int tree;
    int rep;
    BucketHash hash;
    std::vector<std::unique_ptr<Bucket>> buckets;
  };

  Bucket& bucket(Instance& inst, std::uint32_t j);

  BicriteriaConfig cfg_;
  std::uint64_t seed_;
  std::uint32_t w_;
  double theta_;
  double eps_prime_;
  std::size_t cap_;
  std::vector<ShiftedQuadtree> trees_;
  std::vector<Instance> instances_;
  std::int64_t t_ = 0;
  std::vector<BicriteriaCenter> centers_;
  std::vector<Point> points_;
  std::unordered_map<std::uint64_t, std::size_t> by_cell_;
};

}  // namespace dpclust
