#include "dpclust/heavy_hitters.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dpclust/errors.hpp"

namespace dpclust {

void HHConfig::validate() const {
  if (!(epsilon > 0.0)) throw ContractViolation("heavy hitters: epsilon must be > 0");
  if (!(theta > 0.0 && theta < 1.0)) throw ContractViolation("heavy hitters: theta must lie in (0, 1)");
  if (!(gamma_h > 0.0 && gamma_h < 0.5)) throw ContractViolation("heavy hitters: gamma_h must lie in (0, 0.5)");
  if (horizon < 0) throw ContractViolation("heavy hitters: horizon must be >= 0");
  if (!(xi > 0.0 && xi < 0.5)) throw ContractViolation("heavy hitters: xi must lie in (0, 0.5)");
  if (!(log_universe >= 0.0)) throw ContractViolation("heavy hitters: ln|U| must be >= 0");
}

namespace {

double admission_tau(const HHConfig& c) {
  if (c.noise_off) return 0.0;
  const double lg = std::log(static_cast<double>(std::max<std::int64_t>(c.horizon, 1)) / c.xi) + c.log_universe;
  return std::pow(lg, c.threshold_exponent) / (c.epsilon * c.gamma_h);
}

std::size_t compute_report_cap(const HHConfig& c) {
  const double lg = std::log(static_cast<double>(std::max<std::int64_t>(c.horizon, 1)) / c.xi) + c.log_universe;
  return static_cast<std::size_t>(std::ceil(lg * (1.0 + c.gamma_h) / (1.0 - c.gamma_h) / c.theta));
}

}  // namespace

HeavyHitterSketch::HeavyHitterSketch(const HHConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      seed_(seed),
      tau_((cfg.validate(), admission_tau(cfg))),
      capacity_(static_cast<std::size_t>(std::ceil(4.0 / cfg.theta))),
      report_cap_(compute_report_cap(cfg)),
      length_(cfg.horizon, cfg.epsilon / 2.0, derive_seed(seed, "hh-length"), cfg.noise_off) {}

void HeavyHitterSketch::advance(std::int64_t t) {
  if (t > cfg_.horizon) throw HorizonExhausted("heavy hitters: horizon " + std::to_string(cfg_.horizon) + " exhausted");
  if (t < t_) throw ContractViolation("heavy hitters: time cannot move backwards");
  t_ = t;
}

void HeavyHitterSketch::update(std::uint64_t item) {
  if (t_ >= cfg_.horizon) throw HorizonExhausted("heavy hitters: horizon " + std::to_string(cfg_.horizon) + " exhausted");
  length_.advance_to(t_);
  length_.update(1);
  ++t_;

  if (auto it = table_.find(item); it != table_.end()) {
    ++it->second.mg_count;
    it->second.counter.advance_to(t_ - 1);
    it->second.counter.update(1);
    return;
  }
  if (table_.size() < capacity_) {
    BinaryMechanismCounter c(cfg_.horizon, cfg_.epsilon / 2.0, derive_seed(seed_, "hh-cand", item, admissions_++),
                             cfg_.noise_off);
    c.advance_to(t_ - 1);
    c.update(1);
    table_.emplace(item, Candidate{1, std::move(c)});
    return;
  }
  // Table full: Misra-Gries decrement. Candidates that reach zero are dropped
  // along with their counters.
  for (auto it = table_.begin(); it != table_.end();) {
    if (--it->second.mg_count == 0) {
      retired_reads_ += it->second.counter.exact_reads();
      it = table_.erase(it);
    } else {
      ++it;
    }
  }
}

double HeavyHitterSketch::noisy_length() {
  length_.advance_to(t_);
  return length_.release();
}

double HeavyHitterSketch::estimate(Candidate& c) {
  c.counter.advance_to(t_);
  return c.counter.release();
}

bool HeavyHitterSketch::passes(double fhat, double length) const noexcept {
  if (!(fhat > 0.0)) return false;
  if (cfg_.noise_off) return fhat >= cfg_.theta * length;
  // Both tests get the (1 - gamma_h) slack: an item whose true count sits right
  // at tau must still be reported despite the counter noise.
  return fhat >= (1.0 - cfg_.gamma_h) * tau_ && fhat >= (1.0 - cfg_.gamma_h) * cfg_.theta * length;
}

HHReport HeavyHitterSketch::report() {
  const double len = noisy_length();
  std::vector<std::pair<std::uint64_t, double>> hits;
  for (auto& [item, cand] : table_) {
    const double f = estimate(cand);
    if (passes(f, len)) hits.emplace_back(item, f);
  }
  if (hits.size() > report_cap_) {
    // Keep the largest estimates; among equal estimates the smaller id wins.
    std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    hits.resize(report_cap_);
  }
  HHReport r;
  for (const auto& [item, f] : hits) {
    r.fhat.emplace(item, f);
    historical_.insert(item);
  }
  return r;
}

std::optional<double> HeavyHitterSketch::query(std::uint64_t item) {
  if (table_.size() > report_cap_) {
    auto r = report();
    auto it = r.fhat.find(item);
    return it == r.fhat.end() ? std::nullopt : std::optional<double>(it->second);
  }
  auto it = table_.find(item);
  if (it == table_.end()) return std::nullopt;
  const double f = estimate(it->second);
  if (!passes(f, noisy_length())) return std::nullopt;
  historical_.insert(item);
  return f;
}

void HeavyHitterSketch::register_budget(PrivacyBudget& ledger, const std::string& mechanism, const std::string& group,
                                        const std::string& slot) {
  length_.register_budget(ledger, {mechanism + "/length", group, slot});
  // Each item increments at most one candidate counter, so the candidate
  // counters compose in parallel; one charge covers all of them.
  ledger.charge({mechanism + "/candidates", group, slot}, {cfg_.epsilon / 2.0, 0.0});
}

std::uint64_t HeavyHitterSketch::exact_reads() const noexcept {
  std::uint64_t n = retired_reads_ + length_.exact_reads();
  for (const auto& [_, c] : table_) n += c.counter.exact_reads();
  return n;
}

}  // namespace dpclust
