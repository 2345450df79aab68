#include "dpclust/pipeline.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dpclust/errors.hpp"

namespace dpclust {

void PipelineConfig::validate() const {
  if (k < 1) throw ContractViolation("k >= 1 violated");
  if (dim < 1) throw ContractViolation("d >= 1 violated");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ContractViolation("Lambda > 0 violated");
  if (horizon < 0) throw ContractViolation("T >= 0 violated");
  if (!(epsilon > 0.0)) throw ContractViolation("epsilon > 0 violated");
  if (!(gamma > 0.0 && gamma < 0.5)) throw ContractViolation("0 < gamma < 0.5 violated");
  if (!noise_off) {
    if (!(epsilon1 > 0.0)) throw ContractViolation("epsilon1 > 0 violated");
    if (!(delta1 > 0.0 && delta1 < 1.0)) throw ContractViolation("0 < delta1 < 1 violated");
  }
  if (block_size < 0) throw ContractViolation("block size M >= 1 violated");
  if (!noise_off && block_size > 0 &&
      !(static_cast<double>(block_size) > AboveThreshold::min_threshold(epsilon, horizon, xi()))) {
    throw ContractViolation("M > (12/eps) ln(2T/xi) violated: M = " + std::to_string(block_size) +
                            ", bound = " + std::to_string(AboveThreshold::min_threshold(epsilon, horizon, xi())));
  }
  bicriteria().validate();
  merge_reduce().validate();
}

int PipelineConfig::max_ring() const { return static_cast<int>(std::lround(std::log2(rounded_radius()))); }

BicriteriaConfig PipelineConfig::bicriteria() const {
  BicriteriaConfig b;
  b.epsilon = epsilon;
  b.k = k;
  b.radius = radius;
  b.dim = dim;
  b.horizon = horizon;
  b.buckets = buckets;
  b.theta = theta;
  b.gamma_h = gamma_h;
  b.prune_constant = prune_constant;
  b.hh_threshold_exponent = hh_threshold_exponent;
  b.cap_constant = cap_constant;
  b.noise_off = noise_off;
  return b;
}

double PipelineConfig::xi() const {
  const double cap = std::max<double>(1.0, static_cast<double>(bicriteria().center_cap()));
  const double lg = std::max(1.0, std::log2(rounded_radius()));
  const double t = std::max<double>(1.0, static_cast<double>(horizon));
  return std::max(1e-9, 1.0 / (3.0 * cap * lg * t * t));
}

double PipelineConfig::alpha_value() const noexcept {
  return alpha > 0.0 ? alpha : std::pow(static_cast<double>(dim), 3.0);
}

double PipelineConfig::eta2_hat() const {
  if (noise_off) return 0.0;
  ConstructionAParams ap{epsilon1, delta1, false};
  return k * construction_a_prune_threshold(ap);
}

std::int64_t PipelineConfig::resolved_block_size() const {
  if (block_size > 0) return block_size;
  return default_block_size(epsilon, horizon, xi(), alpha_value(), eta2_hat(), c_m);
}

MRConfig PipelineConfig::merge_reduce() const {
  MRConfig m;
  m.k = k;
  m.z = z;
  m.dim = dim;
  m.radius = radius;
  m.horizon = horizon;
  m.epsilon = epsilon;
  m.epsilon1 = epsilon1;
  m.delta1 = delta1;
  m.gamma = gamma;
  m.schedule_c = schedule_c;
  m.block_size = resolved_block_size();
  m.xi = xi();
  m.b = b;
  m.noise_off = noise_off;
  m.track_analysis = track_analysis;
  return m;
}

std::size_t PipelineConfig::raw_point_bound() const {
  return static_cast<std::size_t>((max_ring() + 1) * 1.5 * static_cast<double>(resolved_block_size()));
}

std::size_t PipelineConfig::release_bound() const { return coreset_b_target_size(k, gamma, b); }

int ring_of_distance(double d, int max_ring) {
  if (!std::isfinite(d)) return max_ring;
  if (d < 1.0) return 0;
  const int r = static_cast<int>(std::floor(std::log2(d))) + 1;
  return std::min(r, max_ring);
}

int ring_of(const Point& x, std::span<const Point> f, int max_ring) {
  if (f.empty()) return max_ring;
  return ring_of_distance(std::sqrt(nearest(x, f).dist_sq), max_ring);
}

CenterSet finalize_centers(std::span<const WeightedPoint> y, int k, Objective z, std::uint64_t seed) {
  if (y.empty()) throw NoData("finalize_centers: the released set is empty");
  return approx_cluster(y, k, z, seed);
}

Pipeline::Pipeline(const PipelineConfig& cfg, std::uint64_t seed)
    : cfg_((cfg.validate(), cfg)),
      seed_(seed),
      mr_cfg_(cfg.merge_reduce()),
      bicriteria_(cfg.bicriteria(), derive_seed(seed, "pipeline-bicriteria")) {
  bicriteria_.register_budget(budget_);
  open_epoch();
}

void Pipeline::open_epoch() {
  const int rings = cfg_.max_ring() + 1;
  instances_.clear();
  latest_.assign(static_cast<std::size_t>(rings), std::nullopt);
  for (int r = 0; r < rings; ++r) {
    auto mr = std::make_unique<MergeReduce>(mr_cfg_, derive_seed(seed_, "pipeline-mr", epoch_, r));
    const std::string slot = std::to_string(epoch_) + "." + std::to_string(r);
    mr->register_budget(budget_, "merge_reduce/" + slot, "merge_reduce", slot);
    instances_.push_back(std::move(mr));
  }
}

void Pipeline::retire_epoch() {
  for (std::size_t r = 0; r < instances_.size(); ++r) {
    if (auto out = instances_[r]->force_flush()) latest_[r] = std::move(out->points);
  }
  prior_ = nondp_coreset_b(union_set(), cfg_.k, cfg_.z, cfg_.gamma, derive_seed(seed_, "pipeline-compact", epoch_),
                           cfg_.b);
  dirty_ = true;
  ++epoch_;
  open_epoch();
}

WeightedSet Pipeline::union_set() const {
  WeightedSet y = prior_;
  for (const auto& l : latest_) {
    if (l) y.insert(y.end(), l->begin(), l->end());
  }
  return y;
}

std::size_t Pipeline::union_size() const noexcept {
  std::size_t n = prior_.size();
  for (const auto& l : latest_) n += l ? l->size() : 0;
  return n;
}

std::size_t Pipeline::live_raw_points() const noexcept {
  std::size_t n = 0;
  for (const auto& mr : instances_) n += mr->buffer_size();
  return n;
}

const WeightedSet& Pipeline::update(const Point& x) {
  check_in_ball(x, cfg_.rounded_radius(), cfg_.dim);
  if (t_ >= cfg_.horizon) throw HorizonExhausted("pipeline: horizon " + std::to_string(cfg_.horizon) + " exhausted");

  const std::size_t before = bicriteria_.centers().size();
  const auto added = bicriteria_.update(x);
  ++t_;
  last_opened_ = !added.empty();
  if (last_opened_ != (bicriteria_.centers().size() > before)) {
    throw ContractViolation("pipeline: epoch boundary must coincide with bicriteria growth");
  }
  if (last_opened_) retire_epoch();

  const auto& f = bicriteria_.center_points();
  last_distance_ = f.empty() ? std::numeric_limits<double>::infinity() : std::sqrt(nearest(x, f).dist_sq);
  last_ring_ = ring_of_distance(last_distance_, cfg_.max_ring());
  for (std::size_t r = 0; r < instances_.size(); ++r) {
    auto& mr = *instances_[r];
    if (static_cast<int>(r) != last_ring_) {
      mr.update_empty();
    } else if (auto out = mr.update(x)) {
      latest_[r] = std::move(out->points);
      dirty_ = true;
    }
  }

  const std::size_t live = live_raw_points();
  peak_live_ = std::max(peak_live_, live);
  if (cfg_.check_space_bounds && live > cfg_.raw_point_bound()) {
    throw CapacityExceeded("pipeline: " + std::to_string(live) + " live raw points exceed (log Lambda + 1) * 3M/2 = " +
                           std::to_string(cfg_.raw_point_bound()));
  }
  return release();
}

const WeightedSet& Pipeline::release() {
  if (dirty_) {
    release_ = nondp_coreset_b(union_set(), cfg_.k, cfg_.z, cfg_.gamma,
                               derive_seed(seed_, "pipeline-release", release_version_++), cfg_.b);
    dirty_ = false;
    peak_release_ = std::max(peak_release_, release_.size());
    if (cfg_.check_space_bounds && release_.size() > cfg_.release_bound()) {
      throw CapacityExceeded("pipeline: release size " + std::to_string(release_.size()) + " exceeds the bound " +
                             std::to_string(cfg_.release_bound()));
    }
  }
  return release_;
}

}  // namespace dpclust
