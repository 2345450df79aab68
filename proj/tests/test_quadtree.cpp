#include <doctest.h>

#include <cmath>

#include "dpclust/errors.hpp"
#include "dpclust/quadtree.hpp"

using namespace dpclust;

namespace {

Point random_in_ball(Rng& rng, std::size_t d, double r) {
  for (;;) {
    Point p{std::vector<double>(d)};
    for (auto& v : p.coords) v = (2.0 * uniform01(rng) - 1.0) * r;
    if (p.norm() <= r) return p;
  }
}

}  // namespace

TEST_CASE("round_up_pow2") {
  CHECK(round_up_pow2(0.3) == 1.0);
  CHECK(round_up_pow2(1.0) == 1.0);
  CHECK(round_up_pow2(100.0) == 128.0);
  CHECK(round_up_pow2(128.0) == 128.0);
  CHECK_THROWS_AS(round_up_pow2(0.0), ContractViolation);
}

TEST_CASE("levels and grid lengths") {
  const ShiftedQuadtree q(0, 100.0, std::vector<double>{0.0, 0.0});
  CHECK(q.radius() == 128.0);
  CHECK(q.max_level() == 7);
  CHECK(q.num_levels() == 8);
  CHECK(q.grid_length(0) == 128.0);
  CHECK(q.grid_length(7) == 1.0);
}

TEST_CASE("cell_of: direct formula") {
  const ShiftedQuadtree q(0, 4.0, std::vector<double>{0.0, 0.0});
  // level 1 has grid length 2; floor((0.5 + 4) / 2) = 2
  const auto c = q.cell_of(Point{0.5, 0.5}, 1);
  CHECK(c.coords == std::vector<std::int64_t>{2, 2});
  CHECK(c.level == 1);
  CHECK(cell_key(c) == q.cell_key_of(Point{0.5, 0.5}, 1));
}

TEST_CASE("cell_of: errors") {
  const ShiftedQuadtree q(0, 4.0, std::vector<double>{0.0, 0.0});
  CHECK_THROWS_AS(q.cell_of(Point{4.0, 1.0}, 0), InputError);
  CHECK_THROWS_AS(q.cell_of(Point{0.0, 0.0}, 3), ContractViolation);
  CHECK_THROWS_AS(q.cell_of(Point{0.0, 0.0}, -1), ContractViolation);
}

TEST_CASE("nesting and distance bound") {
  Rng rng(4);
  const ShiftedQuadtree q(1, 64.0, 3, rng);
  for (int i = 0; i < 2000; ++i) {
    const auto x = random_in_ball(rng, 3, 64.0);
    for (int l = 1; l <= q.max_level(); ++l) {
      const auto fine = q.cell_of(x, l);
      const auto coarse = q.cell_of(x, l - 1);
      for (std::size_t j = 0; j < 3; ++j) {
        CHECK(coarse.coords[j] == static_cast<std::int64_t>(std::floor(fine.coords[j] / 2.0)));
      }
    }
  }
  // Points in one cell are within sqrt(d) * gridlen of each other.
  const auto a = random_in_ball(rng, 3, 64.0);
  for (int i = 0; i < 2000; ++i) {
    const auto b = random_in_ball(rng, 3, 64.0);
    for (int l = 0; l <= q.max_level(); ++l) {
      if (q.cell_of(a, l) == q.cell_of(b, l)) CHECK(dist(a, b) <= std::sqrt(3.0) * q.grid_length(l));
    }
  }
}

TEST_CASE("centerpoint") {
  const ShiftedQuadtree q(0, 4.0, std::vector<double>{0.0, 0.0});
  // level 1 cell with coords (2,2) covers [0,2)^2
  CHECK(q.centerpoint(CellId{0, 1, {2, 2}}) == Point{1.0, 1.0});

  Rng rng(9);
  const ShiftedQuadtree s(0, 32.0, 2, rng);
  for (int i = 0; i < 1000; ++i) {
    const auto x = random_in_ball(rng, 2, 32.0);
    for (int l = 0; l <= s.max_level(); ++l) {
      const auto c = s.cell_of(x, l);
      const auto p = s.centerpoint(c);
      CHECK(p.norm() <= 32.0 * (1.0 + 1e-12));
      // Round trip whenever the unclipped center is inside the ball.
      Point raw{std::vector<double>(2)};
      for (std::size_t j = 0; j < 2; ++j) raw[j] = (c.coords[j] + 0.5) * s.grid_length(l) - 32.0 - s.shift()[j];
      if (raw.norm() <= 32.0) CHECK(s.cell_of(p, l) == c);
    }
  }
}

TEST_CASE("random shift splits a pair with probability 2r/r' per dimension") {
  // Pairs separated by exactly delta along every axis; a grid of length g
  // separates them along axis j with probability delta/g. With
  // delta = 2r this is the per-dimension probability 2r/r'.
  const std::size_t d = 2;
  const double radius = 64.0;
  const int level = 3;  // grid length 8
  const double g = radius / 8.0;
  const double delta = 2.0;
  Rng rng(21);
  const int trials = 10000;
  int split = 0;
  for (int i = 0; i < trials; ++i) {
    const ShiftedQuadtree q(i, radius, d, rng);
    Point a{std::vector<double>(d)};
    for (auto& v : a.coords) v = (2.0 * uniform01(rng) - 1.0) * 20.0;
    Point b = a;
    for (auto& v : b.coords) v += delta;
    split += !(q.cell_of(a, level) == q.cell_of(b, level));
  }
  const double p = 1.0 - std::pow(1.0 - delta / g, static_cast<double>(d));
  const double se = std::sqrt(p * (1 - p) / trials);
  CHECK(std::abs(split / static_cast<double>(trials) - p) <= 3.0 * se);
}
