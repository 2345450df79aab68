#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace dpclust {

/// A point in R^d. The dimension is fixed per pipeline and checked at the
/// boundaries, not on every arithmetic call.
struct Point {
  std::vector<double> coords;

  Point() = default;
  explicit Point(std::vector<double> c) : coords(std::move(c)) {}
  Point(std::initializer_list<double> c) : coords(c) {}

  std::size_t dim() const noexcept { return coords.size(); }
  double operator[](std::size_t i) const noexcept { return coords[i]; }
  double& operator[](std::size_t i) noexcept { return coords[i]; }
  double norm() const noexcept;

  friend bool operator==(const Point&, const Point&) = default;
  friend auto operator<=>(const Point&, const Point&) = default;
};

struct WeightedPoint {
  Point point;
  double weight = 1.0;
};

using WeightedSet = std::vector<WeightedPoint>;

struct CenterSet {
  std::vector<Point> centers;

  std::size_t k() const noexcept { return centers.size(); }
  bool empty() const noexcept { return centers.empty(); }
};

/// z = 1 is k-median, z = 2 is k-means.
enum class Objective : int { kMedian = 1, kMeans = 2 };

Objective objective_from_z(int z);
inline int z_of(Objective o) noexcept { return static_cast<int>(o); }

double dist_sq(const Point& a, const Point& b) noexcept;
double dist(const Point& a, const Point& b) noexcept;
/// ||a - b||^z
double dist_pow(const Point& a, const Point& b, Objective z) noexcept;

struct Nearest {
  std::size_t index = 0;
  double dist_sq = 0.0;
};

/// Nearest center; ties go to the lowest index. `centers` must be nonempty.
Nearest nearest(const Point& x, std::span<const Point> centers) noexcept;

/// Throws InputError when ||x|| > radius (with a tiny relative slack for
/// round-off) or when x is not `dim`-dimensional / not finite.
void check_in_ball(const Point& x, double radius, std::size_t dim);

/// Unit-weight view of a point list.
WeightedSet with_unit_weights(std::span<const Point> points);

/// Drops entries whose weight is not strictly positive.
WeightedSet drop_nonpositive(WeightedSet s);

double total_weight(std::span<const WeightedPoint> s) noexcept;

/// sum_x w(x) * min_c ||x - c||^z. Throws ContractViolation on empty C.
double cost(const CenterSet& c, std::span<const WeightedPoint> s, Objective z);

struct ClusterOptions {
  int lloyd_iters = 20;
};

/// k-means++ (D^z-weighted) seeding followed by bounded Lloyd iterations.
/// For z = 1 the update step is the coordinate-wise weighted median, and an
/// update that would raise the cost is rejected (iteration stops there), so
/// cost is non-increasing in the iteration count for both objectives.
/// Always returns exactly k centers; deterministic given `seed`.
CenterSet approx_cluster(std::span<const WeightedPoint> s, int k, Objective z, std::uint64_t seed,
                         ClusterOptions opts = {});

struct BruteForceResult {
  CenterSet centers;
  double cost = 0.0;
};

inline constexpr std::uint64_t kBruteForceGuard = 1'000'000;

/// Exhaustive minimum over all k-subsets of `pool`. Throws OracleTooLarge if
/// C(|pool|, k) exceeds kBruteForceGuard.
BruteForceResult brute_force_opt(std::span<const WeightedPoint> s, int k, Objective z,
                                 std::span<const Point> pool);

}  // namespace dpclust
