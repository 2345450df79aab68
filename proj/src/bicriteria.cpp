#include "dpclust/bicriteria.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "dpclust/errors.hpp"

namespace dpclust {

namespace {

double log2_floor1(double x) { return std::max(1.0, std::log2(x)); }

std::string instance_name(int level, int tree, int rep) {
  return std::to_string(level) + "." + std::to_string(tree) + "." + std::to_string(rep);
}

}  // namespace

void BicriteriaConfig::validate() const {
  if (!(epsilon > 0.0)) throw ContractViolation("bicriteria: epsilon must be > 0");
  if (k < 1) throw ContractViolation("bicriteria: k must be >= 1");
  if (dim < 1) throw ContractViolation("bicriteria: d must be >= 1");
  if (horizon < 0) throw ContractViolation("bicriteria: horizon must be >= 0");
  if (buckets < 0) throw ContractViolation("bicriteria: bucket count must be >= 1");
  const double th = theta_value();
  if (!(th > 0.0 && th < 1.0)) throw ContractViolation("bicriteria: theta must lie in (0, 1)");
  if (!(gamma_h > 0.0 && gamma_h < 0.5)) throw ContractViolation("bicriteria: gamma_h must lie in (0, 0.5)");
  if (!(prune_constant > 0.0)) throw ContractViolation("bicriteria: prune constant must be > 0");
  if (!(cap_constant > 0.0)) throw ContractViolation("bicriteria: cap constant must be > 0");
  (void)rounded_radius();
}

int BicriteriaConfig::num_levels() const {
  return static_cast<int>(std::lround(std::log2(rounded_radius()))) + 1;
}

int BicriteriaConfig::num_trees() const noexcept {
  return std::max(1, static_cast<int>(std::ceil(std::log2(static_cast<double>(k)))));
}

int BicriteriaConfig::num_reps() const noexcept {
  return std::max(1, static_cast<int>(std::ceil(std::log2(static_cast<double>(k) * k))));
}

double BicriteriaConfig::eps_prime() const {
  return epsilon / (2.0 * num_levels() * num_trees() * num_reps());
}

double BicriteriaConfig::hh_xi() const noexcept { return std::min(0.25, 1.0 / (static_cast<double>(k) * k)); }

std::size_t BicriteriaConfig::center_cap() const {
  const double lk = log2_floor1(k);
  const double v = cap_constant * k * lk * lk * log2_floor1(rounded_radius()) *
                   log2_floor1(static_cast<double>(std::max<std::int64_t>(horizon, 2)));
  return static_cast<std::size_t>(std::ceil(v));
}

BucketHash BucketHash::from_seed(std::uint64_t seed) noexcept {
  Rng rng(seed);
  BucketHash h;
  h.a = (static_cast<uint128>(rng()) << 64) | rng() | 1u;  // odd multiplier
  h.b = (static_cast<uint128>(rng()) << 64) | rng();
  return h;
}

std::uint32_t BucketHash::operator()(std::uint64_t key, std::uint32_t w) const noexcept {
  const auto top = static_cast<std::uint64_t>((a * key + b) >> 64);
  return static_cast<std::uint32_t>((static_cast<uint128>(top) * w) >> 64);
}

Bicriteria::Bicriteria(const BicriteriaConfig& cfg, std::uint64_t seed)
    : cfg_((cfg.validate(), cfg)),
      seed_(seed),
      w_(static_cast<std::uint32_t>(cfg.bucket_count())),
      theta_(cfg.theta_value()),
      eps_prime_(cfg.eps_prime()),
      cap_(cfg.center_cap()) {
  const double radius = cfg_.rounded_radius();
  for (int q = 0; q < cfg_.num_trees(); ++q) {
    Rng rng = make_rng(seed_, "bicriteria-tree", q);
    trees_.emplace_back(q, radius, cfg_.dim, rng);
  }
  for (int l = 0; l < cfg_.num_levels(); ++l) {
    for (int q = 0; q < cfg_.num_trees(); ++q) {
      for (int p = 0; p < cfg_.num_reps(); ++p) {
        Instance inst{l, q, p, BucketHash::from_seed(derive_seed(seed_, "bicriteria-hash", l, q, p)), {}};
        inst.buckets.resize(w_);
        instances_.push_back(std::move(inst));
      }
    }
  }
}

Bicriteria::Bucket& Bicriteria::bucket(Instance& inst, std::uint32_t j) {
  auto& slot = inst.buckets[j];
  if (!slot) {
    HHConfig hc;
    hc.epsilon = eps_prime_;
    hc.theta = theta_;
    hc.gamma_h = cfg_.gamma_h;
    hc.horizon = cfg_.horizon;
    // Coordinates at level l take at most 3 * 2^l + 1 values per axis.
    hc.log_universe = static_cast<double>(cfg_.dim) * std::log(3.0 * std::ldexp(1.0, inst.level) + 1.0);
    hc.xi = cfg_.hh_xi();
    hc.threshold_exponent = cfg_.hh_threshold_exponent;
    hc.noise_off = cfg_.noise_off;
    slot = std::make_unique<Bucket>(Bucket{
        BinaryMechanismCounter(cfg_.horizon, eps_prime_,
                               derive_seed(seed_, "bicriteria-size", inst.level, inst.tree, inst.rep, j),
                               cfg_.noise_off),
        HeavyHitterSketch(hc, derive_seed(seed_, "bicriteria-hh", inst.level, inst.tree, inst.rep, j))});
  }
  return *slot;
}

std::vector<BicriteriaCenter> Bicriteria::update(const Point& x) {
  check_in_ball(x, cfg_.rounded_radius(), cfg_.dim);
  if (t_ >= cfg_.horizon) throw HorizonExhausted("bicriteria: horizon " + std::to_string(cfg_.horizon) + " exhausted");
  const std::int64_t prev = t_++;

  // Cell keys depend only on (level, tree).
  const int n_trees = cfg_.num_trees();
  std::vector<std::uint64_t> keys(static_cast<std::size_t>(cfg_.num_levels() * n_trees));
  for (int l = 0; l < cfg_.num_levels(); ++l) {
    for (int q = 0; q < n_trees; ++q) keys[static_cast<std::size_t>(l * n_trees + q)] = trees_[q].cell_key_of(x, l);
  }

  // Fresh emissions of this tick, keyed by cell; repetitions agreeing on a
  // cell collapse to one center with the largest estimate.
  std::map<std::uint64_t, std::pair<double, std::pair<int, int>>> fresh;
  for (auto& inst : instances_) {
    const std::uint64_t key = keys[static_cast<std::size_t>(inst.level * n_trees + inst.tree)];
    Bucket& b = bucket(inst, inst.hash(key, w_));
    b.size.advance_to(prev);
    const double size_hat = b.size.update(1);
    b.hh.advance(prev);
    b.hh.update(key);
    if (by_cell_.contains(key)) continue;
    const auto f = b.hh.query(key);
    if (!f || *f < theta_ / cfg_.prune_constant * size_hat) continue;
    auto [it, inserted] = fresh.try_emplace(key, *f, std::make_pair(inst.level, inst.tree));
    if (!inserted) it->second.first = std::max(it->second.first, *f);
  }

  std::vector<BicriteriaCenter> added;
  if (fresh.empty()) return added;
  if (centers_.size() + fresh.size() > cap_) {
    throw CapacityExceeded("bicriteria: |F| would reach " + std::to_string(centers_.size() + fresh.size()) +
                           ", above the cap " + std::to_string(cap_));
  }
  for (const auto& [key, v] : fresh) {
    const auto [level, tree] = v.second;
    const auto& qt = trees_[static_cast<std::size_t>(tree)];
    BicriteriaCenter c{qt.centerpoint(qt.cell_of(x, level)), v.first, t_, key};
    by_cell_.emplace(key, centers_.size());
    centers_.push_back(c);
    points_.push_back(c.point);
    added.push_back(std::move(c));
  }
  return added;
}

std::uint32_t Bicriteria::bucket_index(int level, int tree, int rep, std::uint64_t key) const {
  const auto idx = (static_cast<std::size_t>(level) * cfg_.num_trees() + tree) * cfg_.num_reps() + rep;
  return instances_.at(idx).hash(key, w_);
}

void Bicriteria::register_budget(PrivacyBudget& ledger) const {
  for (const auto& inst : instances_) {
    const std::string name = instance_name(inst.level, inst.tree, inst.rep);
    for (std::uint32_t j = 0; j < w_; ++j) {
      const std::string slot = std::to_string(j);
      ledger.charge({"bicriteria/bm/" + name + "/" + slot, "bicriteria/bm/" + name, slot}, {eps_prime_, 0.0});
      ledger.charge({"bicriteria/hh/" + name + "/" + slot + "/length", "bicriteria/hh/" + name, slot},
                    {eps_prime_ / 2.0, 0.0});
      ledger.charge({"bicriteria/hh/" + name + "/" + slot + "/candidates", "bicriteria/hh/" + name, slot},
                    {eps_prime_ / 2.0, 0.0});
    }
  }
}

std::uint64_t Bicriteria::exact_reads() const noexcept {
  std::uint64_t n = 0;
  for (const auto& inst : instances_) {
    for (const auto& b : inst.buckets) {
      if (b) n += b->size.exact_reads() + b->hh.exact_reads();
    }
  }
  return n;
}

}  // namespace dpclust
