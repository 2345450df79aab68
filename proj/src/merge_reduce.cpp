#include "dpclust/merge_reduce.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>

#include "dpclust/errors.hpp"

namespace dpclust {

Certificate Certificate::merge(const Certificate& a, const Certificate& b) noexcept {
  return {std::max(a.upper, b.upper), std::min(a.lower, b.lower), std::max(a.eta1, b.eta1), a.eta2 + b.eta2};
}

Certificate Certificate::reduce(double gamma) const noexcept {
  return {upper * (1.0 + gamma), lower * (1.0 - gamma), eta1 * (1.0 - gamma), eta2 * (1.0 + gamma)};
}

bool Certificate::holds(double cost_p, double cost_q, double opt_p, double rel_tol) const noexcept {
  const double slack = rel_tol * std::max({1.0, cost_p, cost_q});
  return lower * cost_p - eta1 * opt_p - eta2 <= cost_q + slack && cost_q <= upper * cost_p + eta2 + slack;
}

// ---------------------------------------------------------------------------

double construction_a_prune_threshold(const ConstructionAParams& params) {
  if (params.noise_off) return 0.0;
  return 2.0 / params.epsilon1 * std::log(2.0 / params.delta1);
}

Semicoreset dp_semicoreset_a(std::span<const Point> block, const ShiftedQuadtree& tree, Objective z,
                             const ConstructionAParams& params, Rng& rng) {
  if (block.empty()) throw ContractViolation("construction A needs a non-empty block");
  if (!params.noise_off && !(params.epsilon1 > 0.0 && params.delta1 > 0.0 && params.delta1 < 1.0)) {
    throw ContractViolation("construction A needs eps1 > 0 and delta1 in (0, 1)");
  }
  const int bottom = tree.max_level();
  std::map<CellId, std::pair<std::int64_t, Point>> hist;  // ordered: noise draws are reproducible
  // Realized snapping error, used only for the recorded certificate.
  double snap = 0.0;
  for (const auto& x : block) {
    const auto c = tree.cell_of(x, bottom);
    auto it = hist.find(c);
    if (it == hist.end()) it = hist.emplace(c, std::make_pair(0, tree.centerpoint(c))).first;
    ++it->second.first;
    snap += z == Objective::kMedian ? dist(x, it->second.second) : dist_sq(x, it->second.second);
  }

  const auto scale = params.noise_off ? LaplaceScale::off() : LaplaceScale::of(1.0 / params.epsilon1);
  const double tau = construction_a_prune_threshold(params);
  Semicoreset out;
  out.level = 1;
  double weight_error = 0.0;
  for (auto& [cell, entry] : hist) {
    const double noisy = static_cast<double>(entry.first) + laplace(scale, rng);
    if (noisy > 0.0 && noisy >= tau) {
      out.points.push_back({std::move(entry.second), noisy});
      weight_error += std::abs(noisy - static_cast<double>(entry.first));
    } else {
      weight_error += static_cast<double>(entry.first);
    }
  }
  // Snapping: exact shift for z = 1; relaxed triangle with factor 2 for z = 2.
  // Weight noise: each unit of misplaced mass moves the cost by at most (2 Lambda)^z.
  const double diam_z = std::pow(2.0 * tree.radius(), z_of(z));
  if (z == Objective::kMedian) {
    out.cert = {1.0, 1.0, 0.0, snap + weight_error * diam_z};
  } else {
    out.cert = {2.0, 0.5, 0.0, 2.0 * snap + weight_error * diam_z};
  }
  return out;
}

// ---------------------------------------------------------------------------

std::size_t coreset_b_target_size(int k, double gamma, const ConstructionBParams& params) {
  const double lk = std::max(1.0, std::log2(static_cast<double>(k)));
  return static_cast<std::size_t>(
      std::ceil(params.c_b * k * lk * std::pow(gamma, -4.0) * std::log(1.0 / params.xi_b)));
}

namespace {

WeightedSet coalesce(std::span<const WeightedPoint> q) {
  WeightedSet v(q.begin(), q.end());
  std::sort(v.begin(), v.end(), [](const WeightedPoint& a, const WeightedPoint& b) { return a.point < b.point; });
  WeightedSet out;
  for (auto& wp : v) {
    if (!out.empty() && out.back().point == wp.point) {
      out.back().weight += wp.weight;
    } else {
      out.push_back(std::move(wp));
    }
  }
  return out;
}

}  // namespace

WeightedSet nondp_coreset_b(std::span<const WeightedPoint> q, int k, Objective z, double gamma, std::uint64_t seed,
                            const ConstructionBParams& params) {
  if (k < 1) throw ContractViolation("coreset B: k must be >= 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ContractViolation("coreset B: gamma must lie in (0, 1)");
  WeightedSet pts = coalesce(q);
  const std::size_t target = coreset_b_target_size(k, gamma, params);
  if (pts.size() <= target) return pts;

  const CenterSet bic = approx_cluster(pts, k, z, derive_seed(seed, "coreset-b-bicriteria"), {params.lloyd_iters});
  std::vector<std::size_t> owner(pts.size());
  std::vector<double> cluster_w(bic.k(), 0.0);
  std::vector<double> dz(pts.size());
  double total_cost = 0.0, total_w = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto nn = nearest(pts[i].point, bic.centers);
    owner[i] = nn.index;
    dz[i] = z == Objective::kMeans ? nn.dist_sq : std::sqrt(nn.dist_sq);
    cluster_w[nn.index] += pts[i].weight;
    total_cost += pts[i].weight * dz[i];
    total_w += pts[i].weight;
  }
  std::vector<double> sens(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double spread = total_cost > 0.0 ? pts[i].weight * dz[i] / total_cost : 0.0;
    sens[i] = spread + pts[i].weight / cluster_w[owner[i]];
  }
  double sens_sum = 0.0;
  for (double s : sens) sens_sum += s;

  Rng rng(derive_seed(seed, "coreset-b-sample"));
  std::discrete_distribution<std::size_t> pick(sens.begin(), sens.end());
  std::map<std::size_t, double> drawn;
  for (std::size_t s = 0; s < target; ++s) {
    const std::size_t i = pick(rng);
    drawn[i] += pts[i].weight * sens_sum / (sens[i] * static_cast<double>(target));
  }
  WeightedSet out;
  double out_w = 0.0;
  for (const auto& [i, w] : drawn) {
    out.push_back({pts[i].point, w});
    out_w += w;
  }
  for (auto& wp : out) wp.weight *= total_w / out_w;
  return out;
}

WeightedSet clustering_to_semicoreset(const CenterSet& centers, std::span<const Point> p, double epsilon,
                                      bool noise_off, Rng& rng) {
  if (centers.empty()) throw ContractViolation("clustering_to_semicoreset needs centers");
  if (!noise_off) {
    if (!(epsilon > 0.0)) throw ContractViolation("clustering_to_semicoreset: epsilon must be > 0");
    const double n = static_cast<double>(p.size());
    if (p.empty() || n < static_cast<double>(centers.k()) * std::log(n) / epsilon) {
      throw TooSmall("clustering_to_semicoreset needs |P| >= k ln|P| / eps (|P| = " + std::to_string(p.size()) + ")");
    }
  }
  std::vector<std::int64_t> counts(centers.k(), 0);
  for (const auto& x : p) ++counts[nearest(x, centers.centers).index];
  const auto scale = noise_off ? LaplaceScale::off() : LaplaceScale::of(2.0 / epsilon);
  WeightedSet out;
  for (std::size_t i = 0; i < centers.k(); ++i) {
    const double w = static_cast<double>(counts[i]) + laplace(scale, rng);
    if (w > 0.0) out.push_back({centers.centers[i], w});
  }
  return out;
}

// ---------------------------------------------------------------------------

bool schedule_telescopes(double schedule_c, double gamma) {
  double prod = 1.0;
  for (int j = 1; j <= 40; ++j) prod *= 1.0 + gamma / (schedule_c * j * j);
  return prod <= 1.0 + gamma / 3.0;
}

void MRConfig::validate() const {
  if (k < 1) throw ContractViolation("merge-reduce: k must be >= 1");
  if (dim < 1) throw ContractViolation("merge-reduce: d must be >= 1");
  if (horizon < 0) throw ContractViolation("merge-reduce: horizon must be >= 0");
  if (!(gamma > 0.0 && gamma < 0.5)) throw ContractViolation("merge-reduce: gamma must lie in (0, 0.5)");
  if (!(epsilon > 0.0)) throw ContractViolation("merge-reduce: epsilon must be > 0");
  if (!noise_off && !(epsilon1 > 0.0)) throw ContractViolation("merge-reduce: epsilon1 must be > 0");
  if (!noise_off && !(delta1 > 0.0 && delta1 < 1.0)) throw ContractViolation("merge-reduce: delta1 must lie in (0, 1)");
  if (block_size < 1) throw ContractViolation("merge-reduce: block size M must be >= 1");
  if (!schedule_telescopes(schedule_c, gamma)) {
    throw ContractViolation("merge-reduce: prod (1 + gamma/(C i^2)) exceeds 1 + gamma/3; raise C");
  }
}

double MRConfig::gamma_at(int level) const noexcept {
  return gamma / (schedule_c * static_cast<double>(level) * static_cast<double>(level));
}

std::int64_t default_block_size(double epsilon, std::int64_t horizon, double xi, double alpha, double eta2_hat,
                                double c_m) {
  const double sv = 1.1 * AboveThreshold::min_threshold(epsilon, horizon, xi);
  const double acc = c_m > 0.0 ? alpha * eta2_hat / c_m : 0.0;
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(std::max(sv, acc))));
}

MergeReduce::MergeReduce(const MRConfig& cfg, std::uint64_t seed)
    : cfg_((cfg.validate(), cfg)),
      seed_(seed),
      tree_([&] {
        Rng r = make_rng(seed, "mr-tree");
        return ShiftedQuadtree(0, cfg.radius, cfg.dim, r);
      }()),
      sparse_(cfg.epsilon, static_cast<double>(cfg.block_size), cfg.horizon, cfg.xi, derive_seed(seed, "mr-sparse"),
              cfg.noise_off),
      a_rng_(make_rng(seed, "mr-construction-a")),
      slots_(2),
      analysis_(2) {}

void MergeReduce::update_empty() {
  if (t_ >= cfg_.horizon) throw HorizonExhausted("merge-reduce: horizon " + std::to_string(cfg_.horizon) + " exhausted");
  ++t_;
}

std::optional<Semicoreset> MergeReduce::update(const Point& x) {
  check_in_ball(x, tree_.radius(), cfg_.dim);
  update_empty();
  ++seen_;
  buffer_.push_back(x);
  peak_buffer_ = std::max(peak_buffer_, buffer_.size());
  if (!sparse_.query(static_cast<std::int64_t>(buffer_.size()))) return std::nullopt;
  return flush();
}

std::optional<Semicoreset> MergeReduce::force_flush() {
  if (buffer_.empty()) return std::nullopt;
  return flush();
}

Semicoreset MergeReduce::flush() {
  ConstructionAParams ap{cfg_.epsilon1, cfg_.delta1, cfg_.noise_off};
  Semicoreset carry = dp_semicoreset_a(buffer_, tree_, cfg_.z, ap, a_rng_);
  WeightedSet carry_raw;
  if (cfg_.track_analysis) carry_raw = with_unit_weights(buffer_);
  buffer_.clear();
  ++flushes_;

  int i = 1;
  while (true) {
    if (static_cast<std::size_t>(i) + 1 >= slots_.size()) {
      slots_.resize(static_cast<std::size_t>(i) + 2);
      analysis_.resize(static_cast<std::size_t>(i) + 2);
    }
    auto& slot = slots_[static_cast<std::size_t>(i)];
    if (!slot) {
      carry.level = i;
      slot = std::move(carry);
      if (cfg_.track_analysis) analysis_[static_cast<std::size_t>(i)] = std::move(carry_raw);
      max_level_ = std::max(max_level_, i);
      break;
    }
    WeightedSet merged = std::move(slot->points);
    merged.insert(merged.end(), carry.points.begin(), carry.points.end());
    const double g = cfg_.gamma_at(i);
    Semicoreset next;
    next.points = nondp_coreset_b(merged, cfg_.k, cfg_.z, g, derive_seed(seed_, "mr-b", b_calls_++), cfg_.b);
    next.cert = Certificate::merge(slot->cert, carry.cert).reduce(g);
    if (cfg_.track_analysis) {
      auto& below = analysis_[static_cast<std::size_t>(i)];
      carry_raw.insert(carry_raw.end(), below.begin(), below.end());
      below.clear();
    }
    slot.reset();
    carry = std::move(next);
    ++i;
  }
  return release();
}

Semicoreset MergeReduce::release() {
  Semicoreset out;
  bool first = true;
  WeightedSet all;
  for (const auto& s : slots_) {
    if (!s) continue;
    all.insert(all.end(), s->points.begin(), s->points.end());
    out.cert = first ? s->cert : Certificate::merge(out.cert, s->cert);
    out.level = std::max(out.level, s->level);
    first = false;
  }
  const double g = cfg_.gamma / 3.0;
  out.points = nondp_coreset_b(all, cfg_.k, cfg_.z, g, derive_seed(seed_, "mr-b", b_calls_++), cfg_.b);
  out.cert = out.cert.reduce(g);
  return out;
}

std::vector<int> MergeReduce::occupied_levels() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (slots_[i]) out.push_back(static_cast<int>(i));
  }
  return out;
}

const WeightedSet& MergeReduce::analysis_set(int level) const {
  if (!cfg_.track_analysis) throw ContractViolation("merge-reduce: analysis sets are not tracked");
  static const WeightedSet kEmpty;
  if (level < 1 || static_cast<std::size_t>(level) >= analysis_.size()) return kEmpty;
  return analysis_[static_cast<std::size_t>(level)];
}

WeightedSet MergeReduce::analysis_all() const {
  WeightedSet out = with_unit_weights(buffer_);
  for (int i = 1; i < static_cast<int>(analysis_.size()); ++i) {
    const auto& s = analysis_set(i);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

void MergeReduce::register_budget(PrivacyBudget& ledger, const std::string& mechanism, const std::string& group,
                                  const std::string& slot) const {
  ledger.charge({mechanism + "/above_threshold", group, slot}, {cfg_.epsilon, 0.0});
  ledger.charge({mechanism + "/construction_a", group, slot}, {cfg_.epsilon1, cfg_.delta1});
}

}  // namespace dpclust
