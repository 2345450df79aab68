#pragma once

#include <compare>
#include <cstdint>
#include <vector>

#include "dpclust/geometry.hpp"
#include "dpclust/random.hpp"

namespace dpclust {

/// Smallest power of two >= radius (and >= 1).
double round_up_pow2(double radius);

struct CellId {
  int tree = 0;
  int level = 0;
  std::vector<std::int64_t> coords;

  friend bool operator==(const CellId&, const CellId&) = default;
  friend auto operator<=>(const CellId&, const CellId&) = default;
};

/// 64-bit fingerprint of a cell, stable across runs.
std::uint64_t cell_key(const CellId& c) noexcept;

/// Nested grids over [-Lambda, Lambda]^d, all sharing one random shift.
/// Level l has grid length Lambda / 2^l; level 0 is the coarsest and the
/// bottom level (l = log2 Lambda) has grid length 1. Coordinates are
/// floor((x_j + shift_j + Lambda) / gridlen), so a level-l cell always lies
/// inside the level-(l-1) cell with coordinates floor(c / 2).
class ShiftedQuadtree {
 public:
  /// Shift drawn uniformly from [0, Lambda)^d. `radius` is rounded up to a
  /// power of two.
  ShiftedQuadtree(int tree_index, double radius, std::size_t dim, Rng& rng);
  ShiftedQuadtree(int tree_index, double radius, std::vector<double> shift);

  int tree_index() const noexcept { return tree_; }
  double radius() const noexcept { return radius_; }
  std::size_t dim() const noexcept { return shift_.size(); }
  int max_level() const noexcept { return max_level_; }
  int num_levels() const noexcept { return max_level_ + 1; }
  double grid_length(int level) const noexcept;
  const std::vector<double>& shift() const noexcept { return shift_; }

  /// Throws InputError for points outside the ball, ContractViolation for a
  /// level outside [0, max_level].
  CellId cell_of(const Point& x, int level) const;
  /// Cell fingerprint without materialising the CellId (hot path).
  std::uint64_t cell_key_of(const Point& x, int level) const noexcept;

  /// Center of the cell box, radially clipped into the ball.
  Point centerpoint(const CellId& c) const;

 private:
  int tree_;
  double radius_;
  int max_level_;
  std::vector<double> shift_;
};

}  // namespace dpclust
