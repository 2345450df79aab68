#include "dpclust/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "dpclust/errors.hpp"
#include "dpclust/random.hpp"

namespace dpclust {

double Point::norm() const noexcept {
  double s = 0.0;
  for (double v : coords) s += v * v;
  return std::sqrt(s);
}

Objective objective_from_z(int z) {
  if (z == 1) return Objective::kMedian;
  if (z == 2) return Objective::kMeans;
  throw ContractViolation("objective z must be 1 (k-median) or 2 (k-means), got " + std::to_string(z));
}

double dist_sq(const Point& a, const Point& b) noexcept {
  double s = 0.0;
  const std::size_t n = a.coords.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double t = a.coords[i] - b.coords[i];
    s += t * t;
  }
  return s;
}

double dist(const Point& a, const Point& b) noexcept { return std::sqrt(dist_sq(a, b)); }

namespace {

double pow_from_sq(double d2, Objective z) noexcept { return z == Objective::kMeans ? d2 : std::sqrt(d2); }

}  // namespace

double dist_pow(const Point& a, const Point& b, Objective z) noexcept { return pow_from_sq(dist_sq(a, b), z); }

Nearest nearest(const Point& x, std::span<const Point> centers) noexcept {
  Nearest best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double d2 = dist_sq(x, centers[i]);
    if (d2 < best.dist_sq) best = {i, d2};
  }
  return best;
}

void check_in_ball(const Point& x, double radius, std::size_t dim) {
  if (x.dim() != dim) {
    throw InputError("point has " + std::to_string(x.dim()) + " coordinates, expected " + std::to_string(dim));
  }
  for (double v : x.coords) {
    if (!std::isfinite(v)) throw InputError("point has a non-finite coordinate");
  }
  if (x.norm() > radius * (1.0 + 1e-12)) {
    throw InputError("point norm " + std::to_string(x.norm()) + " exceeds radius " + std::to_string(radius));
  }
}

WeightedSet with_unit_weights(std::span<const Point> points) {
  WeightedSet out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back({p, 1.0});
  return out;
}

WeightedSet drop_nonpositive(WeightedSet s) {
  std::erase_if(s, [](const WeightedPoint& wp) { return !(wp.weight > 0.0); });
  return s;
}

double total_weight(std::span<const WeightedPoint> s) noexcept {
  double t = 0.0;
  for (const auto& wp : s) t += wp.weight;
  return t;
}

double cost(const CenterSet& c, std::span<const WeightedPoint> s, Objective z) {
  if (c.empty()) throw ContractViolation("cost: empty center set");
  double total = 0.0;
  for (const auto& wp : s) total += wp.weight * pow_from_sq(nearest(wp.point, c.centers).dist_sq, z);
  return total;
}

namespace {

// Index drawn with probability proportional to mass[i]; falls back to the
// last positive entry if round-off pushes the target past the total.
std::size_t sample_index(std::span<const double> mass, double total, Rng& rng) {
  const double target = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    if (mass[i] <= 0.0) continue;
    acc += mass[i];
    last_positive = i;
    if (acc > target) return i;
  }
  return last_positive;
}

CenterSet seed_plus_plus(std::span<const WeightedPoint> s, int k, Objective z, Rng& rng) {
  const std::size_t n = s.size();
  std::vector<double> weights(n);
  for (std::size_t i = 0; i < n; ++i) weights[i] = s[i].weight;
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);

  CenterSet out;
  out.centers.reserve(static_cast<std::size_t>(k));
  out.centers.push_back(s[sample_index(weights, wsum, rng)].point);

  std::vector<double> best_d2(n);
  for (std::size_t i = 0; i < n; ++i) best_d2[i] = dist_sq(s[i].point, out.centers[0]);

  std::vector<double> mass(n);
  while (out.centers.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mass[i] = s[i].weight * pow_from_sq(best_d2[i], z);
      total += mass[i];
    }
    // Every point already sits on a center: duplicate by weight.
    const std::size_t pick = total > 0.0 ? sample_index(mass, total, rng) : sample_index(weights, wsum, rng);
    out.centers.push_back(s[pick].point);
    const Point& c = out.centers.back();
    for (std::size_t i = 0; i < n; ++i) best_d2[i] = std::min(best_d2[i], dist_sq(s[i].point, c));
  }
  return out;
}

double weighted_median(std::vector<std::pair<double, double>>& vals) {
  std::sort(vals.begin(), vals.end());
  double total = 0.0;
  for (const auto& [v, w] : vals) total += w;
  double acc = 0.0;
  for (const auto& [v, w] : vals) {
    acc += w;
    if (acc >= 0.5 * total) return v;
  }
  return vals.back().first;
}

CenterSet lloyd_step(std::span<const WeightedPoint> s, const CenterSet& cur, Objective z) {
  const std::size_t k = cur.k();
  const std::size_t d = cur.centers[0].dim();
  std::vector<std::size_t> assign(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) assign[i] = nearest(s[i].point, cur.centers).index;

  CenterSet next = cur;
  if (z == Objective::kMeans) {
    std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
    std::vector<double> wsum(k, 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::size_t a = assign[i];
      wsum[a] += s[i].weight;
      for (std::size_t j = 0; j < d; ++j) sums[a][j] += s[i].weight * s[i].point[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (wsum[c] <= 0.0) continue;  // empty cluster keeps its center
      for (std::size_t j = 0; j < d; ++j) next.centers[c][j] = sums[c][j] / wsum[c];
    }
  } else {
    std::vector<std::vector<std::size_t>> members(k);
    for (std::size_t i = 0; i < s.size(); ++i) members[assign[i]].push_back(i);
    std::vector<std::pair<double, double>> vals;
    for (std::size_t c = 0; c < k; ++c) {
      if (members[c].empty()) continue;
      for (std::size_t j = 0; j < d; ++j) {
        vals.clear();
        for (std::size_t i : members[c]) vals.emplace_back(s[i].point[j], s[i].weight);
        next.centers[c][j] = weighted_median(vals);
      }
    }
  }
  return next;
}

}  // namespace

CenterSet approx_cluster(std::span<const WeightedPoint> s, int k, Objective z, std::uint64_t seed,
                         ClusterOptions opts) {
  if (k <= 0) throw ContractViolation("approx_cluster: k must be positive");
  if (s.empty()) throw ContractViolation("approx_cluster: empty input");
  Rng rng = make_rng(seed, "approx_cluster");
  CenterSet cur = seed_plus_plus(s, k, z, rng);
  double cur_cost = cost(cur, s, z);
  for (int it = 0; it < opts.lloyd_iters; ++it) {
    CenterSet next = lloyd_step(s, cur, z);
    if (next.centers == cur.centers) break;
    const double next_cost = cost(next, s, z);
    if (next_cost > cur_cost) break;
    cur = std::move(next);
    cur_cost = next_cost;
  }
  return cur;
}

namespace {

std::uint64_t binomial_capped(std::uint64_t n, std::uint64_t k, std::uint64_t cap) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  long double r = 1.0L;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r = r * static_cast<long double>(n - k + i) / static_cast<long double>(i);
    if (r > static_cast<long double>(cap)) return cap + 1;
  }
  return static_cast<std::uint64_t>(std::llround(r));
}

}  // namespace

BruteForceResult brute_force_opt(std::span<const WeightedPoint> s, int k, Objective z,
                                 std::span<const Point> pool) {
  if (k <= 0) throw ContractViolation("brute_force_opt: k must be positive");
  const std::size_t n = pool.size();
  const auto kk = static_cast<std::size_t>(k);
  if (kk > n) throw ContractViolation("brute_force_opt: k exceeds candidate pool size");
  if (binomial_capped(n, kk, kBruteForceGuard) > kBruteForceGuard) {
    throw OracleTooLarge("brute_force_opt: C(" + std::to_string(n) + ", " + std::to_string(k) +
                         ") exceeds the enumeration guard");
  }

  // Precompute point-to-candidate distances once; the enumeration then only
  // takes minima over the chosen columns.
  std::vector<double> dz(s.size() * n);
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < n; ++j) dz[i * n + j] = dist_pow(s[i].point, pool[j], z);
  }

  std::vector<std::size_t> idx(kk);
  std::iota(idx.begin(), idx.end(), 0);
  BruteForceResult best;
  best.cost = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_idx;
  while (true) {
    double c = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      double m = std::numeric_limits<double>::infinity();
      for (std::size_t j : idx) m = std::min(m, dz[i * n + j]);
      c += s[i].weight * m;
    }
    if (c < best.cost) {
      best.cost = c;
      best_idx = idx;
    }
    // next combination in lexicographic order
    std::size_t pos = kk;
    while (pos > 0 && idx[pos - 1] == n - kk + pos - 1) --pos;
    if (pos == 0) break;
    ++idx[pos - 1];
    for (std::size_t j = pos; j < kk; ++j) idx[j] = idx[j - 1] + 1;
  }
  for (std::size_t j : best_idx) best.centers.centers.push_back(pool[j]);
  return best;
}

}  // namespace dpclust
