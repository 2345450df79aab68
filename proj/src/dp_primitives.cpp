#include "dpclust/dp_primitives.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "dpclust/errors.hpp"

namespace dpclust {

LaplaceScale LaplaceScale::of(double b) {
  if (!(b > 0.0)) throw ContractViolation("Laplace scale must be positive");
  if (std::isinf(b)) return LaplaceScale{};
  return LaplaceScale{b};
}

double laplace_from_uniform(double b, double u) noexcept {
  const double c = u - 0.5;
  return c < 0.0 ? b * std::log1p(2.0 * c) : -b * std::log1p(-2.0 * c);
}

double laplace(LaplaceScale scale, Rng& rng) {
  if (scale.is_off()) return 0.0;
  return laplace_from_uniform(scale.b(), uniform01(rng));
}

namespace {

int ceil_log2(std::int64_t n) {
  if (n <= 1) return 0;
  return std::bit_width(static_cast<std::uint64_t>(n - 1));
}

}  // namespace

BinaryMechanismCounter::BinaryMechanismCounter(std::int64_t horizon, double epsilon, std::uint64_t seed,
                                               bool noise_off)
    : horizon_(horizon), epsilon_(epsilon), seed_(seed), noise_off_(noise_off) {
  if (horizon < 0) throw ContractViolation("binary mechanism horizon must be nonnegative");
  if (!(epsilon > 0.0)) throw ContractViolation("binary mechanism epsilon must be positive");
  node_scale_ = static_cast<double>(ceil_log2(horizon) + 1) / epsilon;
}

double BinaryMechanismCounter::update(std::int64_t increment) {
  if (increment < 0) throw ContractViolation("binary mechanism increments must be nonnegative");
  if (t_ >= horizon_) throw HorizonExhausted("binary mechanism: horizon " + std::to_string(horizon_) + " exhausted");
  ++t_;
  sum_ += increment;
  return release();
}

void BinaryMechanismCounter::advance_to(std::int64_t t) {
  if (t < t_) throw ContractViolation("binary mechanism: time cannot move backwards");
  if (t > horizon_) throw HorizonExhausted("binary mechanism: horizon " + std::to_string(horizon_) + " exhausted");
  t_ = t;
}

double BinaryMechanismCounter::node_noise(int level, std::int64_t block) const noexcept {
  const std::uint64_t h =
      mix64(mix64(seed_ ^ static_cast<std::uint64_t>(level)) ^ static_cast<std::uint64_t>(block));
  return laplace_from_uniform(node_scale_, unit_open(h));
}

double BinaryMechanismCounter::release() const noexcept {
  double out = static_cast<double>(sum_);
  if (noise_off_) return out;
  // Node at level i covering ((b - 1) * 2^i, b * 2^i] with b = t >> i.
  auto rest = static_cast<std::uint64_t>(t_);
  while (rest != 0) {
    const int level = std::countr_zero(rest);
    out += node_noise(level, t_ >> level);
    rest &= rest - 1;
  }
  return out;
}

void BinaryMechanismCounter::register_budget(PrivacyBudget& ledger, const BudgetTag& tag) {
  if (charged_) throw ContractViolation("binary mechanism already charged: " + tag.mechanism);
  ledger.charge(tag, {epsilon_, 0.0});
  charged_ = true;
}

AboveThreshold::AboveThreshold(double epsilon, double threshold, std::int64_t horizon, double xi,
                               std::uint64_t seed, bool noise_off)
    : epsilon_(epsilon), threshold_(threshold), noise_off_(noise_off), rng_(seed) {
  if (!(epsilon > 0.0)) throw ContractViolation("above-threshold epsilon must be positive");
  if (!noise_off && !(threshold > min_threshold(epsilon, horizon, xi))) {
    throw ContractViolation("above-threshold requires M > (12/eps) ln(2T/xi): M = " + std::to_string(threshold) +
                            ", bound = " + std::to_string(min_threshold(epsilon, horizon, xi)));
  }
  resample_threshold();
}

double AboveThreshold::min_threshold(double epsilon, std::int64_t horizon, double xi) {
  return 12.0 / epsilon * std::log(2.0 * static_cast<double>(std::max<std::int64_t>(horizon, 1)) / xi);
}

void AboveThreshold::resample_threshold() {
  const auto scale = noise_off_ ? LaplaceScale::off() : LaplaceScale::of(2.0 / epsilon_);
  noisy_threshold_ = threshold_ + laplace(scale, rng_);
}

bool AboveThreshold::query(std::int64_t p0) {
  const auto scale = noise_off_ ? LaplaceScale::off() : LaplaceScale::of(4.0 / epsilon_);
  last_nu_ = laplace(scale, rng_);
  if (static_cast<double>(p0) + last_nu_ >= noisy_threshold_) {
    resample_threshold();
    return true;
  }
  return false;
}

}  // namespace dpclust
