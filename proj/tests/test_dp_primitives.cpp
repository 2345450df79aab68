#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "dpclust/dp_primitives.hpp"
#include "dpclust/errors.hpp"

using namespace dpclust;

TEST_CASE("Laplace scale validation and off mode") {
  CHECK_THROWS_AS(LaplaceScale::of(0.0), ContractViolation);
  CHECK_THROWS_AS(LaplaceScale::of(-1.0), ContractViolation);
  CHECK(LaplaceScale::of(INFINITY).is_off());
  Rng rng(1);
  CHECK(laplace(LaplaceScale::off(), rng) == 0.0);
}

TEST_CASE("Laplace inverse CDF: symmetry and quantiles") {
  CHECK(laplace_from_uniform(1.0, 0.5) == 0.0);
  CHECK(laplace_from_uniform(2.0, 0.25) == doctest::Approx(-laplace_from_uniform(2.0, 0.75)));
  // P(X <= -b ln 2) = 1/4 for Laplace(b).
  CHECK(laplace_from_uniform(3.0, 0.25) == doctest::Approx(-3.0 * std::log(2.0)));
}

TEST_CASE("Laplace tail frequency at b ln 20 is 0.05") {
  Rng rng(2024);
  const double b = 1.7;
  const int n = 100000;
  int over = 0;
  double mean = 0.0, var = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = laplace(LaplaceScale::of(b), rng);
    over += std::abs(x) > b * std::log(20.0);
    mean += x;
    var += x * x;
  }
  mean /= n;
  var /= n;
  CHECK(std::abs(over / static_cast<double>(n) - 0.05) <= 0.01);
  CHECK(std::abs(mean) < 0.05);
  CHECK(var == doctest::Approx(2.0 * b * b).epsilon(0.05));
}

TEST_CASE("binary mechanism: noise-off is exact") {
  BinaryMechanismCounter c(100, 1.0, 7, true);
  std::int64_t s = 0;
  for (int t = 1; t <= 100; ++t) {
    s += t % 3;
    CHECK(c.update(t % 3) == static_cast<double>(s));
  }
  CHECK_THROWS_AS(c.update(1), HorizonExhausted);
}

TEST_CASE("binary mechanism: argument checks") {
  CHECK_THROWS_AS(BinaryMechanismCounter(10, 0.0, 1), ContractViolation);
  BinaryMechanismCounter c(10, 1.0, 1);
  CHECK_THROWS_AS(c.update(-1), ContractViolation);
  c.advance_to(5);
  CHECK_THROWS_AS(c.advance_to(4), ContractViolation);
  CHECK_THROWS_AS(c.advance_to(11), HorizonExhausted);
}

TEST_CASE("binary mechanism: node scale and noise count follow the dyadic decomposition") {
  BinaryMechanismCounter c(1024, 2.0, 3);
  CHECK(c.node_scale() == doctest::Approx(11.0 / 2.0));
  // A read at t is the same whether reached by updates or by advance_to.
  BinaryMechanismCounter a(1024, 1.0, 99), b(1024, 1.0, 99);
  for (int t = 0; t < 300; ++t) a.update(0);
  b.advance_to(300);
  CHECK(a.release() == b.release());
  // Repeated reads are stable.
  CHECK(a.release() == a.release());
}

TEST_CASE("binary mechanism: release never reads the raw sum through the audited path") {
  BinaryMechanismCounter c(64, 1.0, 5);
  for (int t = 0; t < 64; ++t) c.update(1);
  (void)c.release();
  CHECK(c.exact_reads() == 0);
  CHECK(c.audited_exact_sum() == 64);
  CHECK(c.exact_reads() == 1);
}

TEST_CASE("binary mechanism: error is unbiased with the predicted variance") {
  // At t = 2^j - 1 the decomposition has j nodes, each Laplace(scale).
  const int trials = 4000;
  const std::int64_t t = 255;  // 8 nodes
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < trials; ++i) {
    BinaryMechanismCounter c(1024, 1.0, derive_seed(1, "bm-var", i));
    c.advance_to(t);
    const double e = c.release();
    sum += e;
    sq += e * e;
  }
  const double scale = 11.0;
  const double predicted_var = 8.0 * 2.0 * scale * scale;
  CHECK(std::abs(sum / trials) < 4.0 * std::sqrt(predicted_var / trials));
  CHECK(sq / trials == doctest::Approx(predicted_var).epsilon(0.1));
}

TEST_CASE("binary mechanism: budget registration only once") {
  PrivacyBudget ledger;
  BinaryMechanismCounter c(10, 0.5, 1);
  c.register_budget(ledger, {"bm", "g", "s"});
  CHECK(ledger.total().epsilon == doctest::Approx(0.5));
  CHECK_THROWS_AS(c.register_budget(ledger, {"bm2", "g", "s"}), ContractViolation);
}

TEST_CASE("above threshold: precondition on M") {
  const double bound = AboveThreshold::min_threshold(1.0, 1000, 0.05);
  CHECK(bound == doctest::Approx(12.0 * std::log(2.0 * 1000 / 0.05)));
  CHECK_THROWS_AS(AboveThreshold(1.0, bound, 1000, 0.05, 1), ContractViolation);
  CHECK_NOTHROW(AboveThreshold(1.0, bound + 1.0, 1000, 0.05, 1));
  CHECK_NOTHROW(AboveThreshold(1.0, 4.0, 1000, 0.05, 1, true));
}

TEST_CASE("above threshold: noise-off is an exact comparison") {
  AboveThreshold at(1.0, 8.0, 100, 0.05, 1, true);
  CHECK_FALSE(at.query(7));
  CHECK(at.query(8));
  CHECK(at.query(9));
}

TEST_CASE("above threshold: noise magnitudes respect the union-bound tails") {
  const double eps = 1.0, xi = 0.05;
  const std::int64_t T = 1000;
  const double log_term = std::log(2.0 * T / xi);
  const double M = AboveThreshold::min_threshold(eps, T, xi) * 1.1;
  int good = 0;
  const int trials = 200;
  for (int r = 0; r < trials; ++r) {
    AboveThreshold at(eps, M, T, xi, derive_seed(3, "at", r));
    bool ok = true;
    for (std::int64_t t = 0; t < T; ++t) {
      const double m_hat = at.noisy_threshold();
      ok = ok && std::abs(m_hat - M) < 2.0 / eps * log_term;
      at.query(0);
      ok = ok && std::abs(at.last_query_noise()) < 4.0 / eps * log_term;
    }
    good += ok;
  }
  CHECK(good >= 0.95 * trials);
}
