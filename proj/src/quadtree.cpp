#include "dpclust/quadtree.hpp"

#include <cmath>
#include <string>

#include "dpclust/errors.hpp"

namespace dpclust {

double round_up_pow2(double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ContractViolation("radius must be positive and finite");
  double p = 1.0;
  while (p < radius) p *= 2.0;
  return p;
}

namespace {

std::uint64_t fold_key(int tree, int level, auto coord_at, std::size_t d) noexcept {
  std::uint64_t h = mix64((static_cast<std::uint64_t>(tree) << 32) ^ static_cast<std::uint64_t>(level));
  for (std::size_t j = 0; j < d; ++j) h = mix64(h ^ static_cast<std::uint64_t>(coord_at(j)));
  return h;
}

}  // namespace

std::uint64_t cell_key(const CellId& c) noexcept {
  return fold_key(c.tree, c.level, [&](std::size_t j) { return c.coords[j]; }, c.coords.size());
}

ShiftedQuadtree::ShiftedQuadtree(int tree_index, double radius, std::size_t dim, Rng& rng)
    : tree_(tree_index), radius_(round_up_pow2(radius)), shift_(dim) {
  if (dim == 0) throw ContractViolation("quadtree dimension must be positive");
  max_level_ = static_cast<int>(std::lround(std::log2(radius_)));
  for (auto& s : shift_) s = uniform01(rng) * radius_;
}

ShiftedQuadtree::ShiftedQuadtree(int tree_index, double radius, std::vector<double> shift)
    : tree_(tree_index), radius_(round_up_pow2(radius)), shift_(std::move(shift)) {
  if (shift_.empty()) throw ContractViolation("quadtree dimension must be positive");
  max_level_ = static_cast<int>(std::lround(std::log2(radius_)));
}

double ShiftedQuadtree::grid_length(int level) const noexcept { return std::ldexp(radius_, -level); }

CellId ShiftedQuadtree::cell_of(const Point& x, int level) const {
  if (level < 0 || level > max_level_) {
    throw ContractViolation("quadtree level " + std::to_string(level) + " outside [0, " +
                            std::to_string(max_level_) + "]");
  }
  check_in_ball(x, radius_, dim());
  const double g = grid_length(level);
  CellId c{tree_, level, std::vector<std::int64_t>(dim())};
  for (std::size_t j = 0; j < dim(); ++j) {
    c.coords[j] = static_cast<std::int64_t>(std::floor((x[j] + shift_[j] + radius_) / g));
  }
  return c;
}

std::uint64_t ShiftedQuadtree::cell_key_of(const Point& x, int level) const noexcept {
  const double g = grid_length(level);
  return fold_key(
      tree_, level,
      [&](std::size_t j) { return static_cast<std::int64_t>(std::floor((x[j] + shift_[j] + radius_) / g)); },
      dim());
}

Point ShiftedQuadtree::centerpoint(const CellId& c) const {
  const double g = grid_length(c.level);
  Point p{std::vector<double>(dim())};
  for (std::size_t j = 0; j < dim(); ++j) {
    p[j] = (static_cast<double>(c.coords[j]) + 0.5) * g - radius_ - shift_[j];
  }
  const double n = p.norm();
  if (n > radius_) {
    for (auto& v : p.coords) v *= radius_ / n;
  }
  return p;
}

}  // namespace dpclust
