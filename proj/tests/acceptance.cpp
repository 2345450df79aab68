// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "dpclust/bicriteria.hpp"
#include "dpclust/dp_primitives.hpp"
#include "dpclust/errors.hpp"
#include "dpclust/harness.hpp"
#include "dpclust/heavy_hitters.hpp"
#include "dpclust/merge_reduce.hpp"
#include "dpclust/pipeline.hpp"

using namespace dpclust;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

Point random_in_ball(Rng& rng, std::size_t d, double r) {
  for (;;) {
    Point p{std::vector<double>(d)};
    for (auto& v : p.coords) v = (2.0 * uniform01(rng) - 1.0) * r;
    if (p.norm() <= r) return p;
  }
}

std::vector<Point> planted(Rng& rng, std::size_t d, int clusters, int n, double spread, double sigma, double radius) {
  std::vector<Point> means;
  for (int c = 0; c < clusters; ++c) means.push_back(random_in_ball(rng, d, spread));
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<Point> out;
  while (static_cast<int>(out.size()) < n) {
    Point p = means[rng() % static_cast<std::uint64_t>(clusters)];
    for (auto& v : p.coords) v += g(rng);
    if (p.norm() <= radius) out.push_back(p);
  }
  return out;
}

CenterSet random_centers(Rng& rng, int k, std::size_t d, double r) {
  CenterSet c;
  for (int i = 0; i < k; ++i) c.centers.push_back(random_in_ball(rng, d, r));
  return c;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Space and structure observations pooled over every pipeline run below.
struct RunLog {
  int runs = 0;
  bool space_ok = true;
  bool release_ok = true;
  bool cap_ok = true;
  bool budget_ok = true;
  double worst_raw = 0.0;      // peak live raw / bound
  double worst_release = 0.0;  // peak release / bound
  double worst_cap = 0.0;      // |F| / cap
  std::string budget_note;

  void record(const RunResult& r, double epsilon) {
    ++runs;
    worst_raw = std::max(worst_raw, double(r.peak_live_raw) / double(r.raw_point_bound));
    worst_release = std::max(worst_release, double(r.peak_release) / double(r.release_bound));
    worst_cap = std::max(worst_cap, double(r.bicriteria_centers) / double(r.center_cap));
    space_ok = space_ok && r.peak_live_raw <= r.raw_point_bound;
    release_ok = release_ok && r.peak_release <= r.release_bound;
    cap_ok = cap_ok && r.bicriteria_centers <= r.center_cap;
    if (std::abs(r.bicriteria_spend.epsilon - epsilon) > 1e-9 * epsilon) {
      budget_ok = false;
      budget_note = "bicriteria spend " + fmt(r.bicriteria_spend.epsilon, 12) + " vs eps " + fmt(epsilon);
    }
  }
};

RunLog g_runs;

// 1. Noise-off merge-and-reduce release against the raw stream.
Verdict criterion1() {
  Rng rng(101);
  int streams_ok = 0;
  double worst_frac = 1.0;
  for (int s = 0; s < 20; ++s) {
    const int n = 256 + static_cast<int>(rng() % 1793);
    const auto d = static_cast<std::size_t>(1 + rng() % 3);
    const int k = 1 + static_cast<int>(rng() % 4);
    const std::int64_t M = s % 2 ? 32 : 8;
    const auto z = s % 3 ? Objective::kMeans : Objective::kMedian;
    MRConfig cfg;
    cfg.k = k;
    cfg.z = z;
    cfg.dim = d;
    cfg.radius = 64.0;
    cfg.horizon = n;
    cfg.block_size = M;
    cfg.gamma = 0.2;
    cfg.noise_off = true;
    MergeReduce mr(cfg, derive_seed(101, "mr", s));
    const auto pts = planted(rng, d, std::max(k, 2), n, 30.0, 3.0, 64.0);
    std::optional<Semicoreset> last;
    for (const auto& x : pts) {
      if (auto r = mr.update(x)) last = std::move(r);
    }
    if (mr.buffer_size() > 0) last = mr.force_flush();
    const auto raw = with_unit_weights(pts);
    int ok = 0;
    for (int c = 0; c < 100; ++c) {
      const auto C = random_centers(rng, k, d, 64.0);
      const double ratio = cost(C, last->points, z) / cost(C, raw, z);
      ok += ratio >= 1.0 - 0.2 - 0.02 && ratio <= 1.0 + 0.2 + 0.02;
    }
    worst_frac = std::min(worst_frac, ok / 100.0);
    streams_ok += ok >= 95;
  }
  return {streams_ok == 20, std::to_string(streams_ok) + "/20 streams with >= 95% of center sets in [0.78, 1.22]; worst " +
                                fmt(100 * worst_frac) + "%"};
}

// 2. Laplace tail, binary mechanism error, sparse-vector noise bounds.
Verdict criterion2() {
  Rng rng(202);
  const double b = 3.0;
  int tail = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) tail += std::abs(laplace(LaplaceScale::of(b), rng)) > b * std::log(20.0);
  const double freq = double(tail) / draws;
  const bool lap_ok = std::abs(freq - 0.05) <= 0.01;

  // Fixture constant: max error <= 1.0 * log2(T)^2.5.
  constexpr double kBmConstant = 1.0;
  const std::int64_t T = 1024;
  const double bound = kBmConstant * std::pow(std::log2(double(T)), 2.5);
  double max_err = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    BinaryMechanismCounter c(T, 1.0, derive_seed(202, "bm", trial));
    Rng inc(derive_seed(202, "bm-inc", trial));
    std::int64_t sum = 0;
    for (std::int64_t t = 0; t < T; ++t) {
      const std::int64_t x = static_cast<std::int64_t>(inc() % 2);
      sum += x;
      max_err = std::max(max_err, std::abs(c.update(x) - double(sum)));
    }
  }
  const bool bm_ok = max_err <= bound;

  const double eps = 1.0, xi = 0.05;
  const std::int64_t AT_T = 1000;
  const double log_term = std::log(2.0 * AT_T / xi);
  const double M = AboveThreshold::min_threshold(eps, AT_T, xi) * 1.1;
  int good = 0;
  const int trials = 200;
  for (int r = 0; r < trials; ++r) {
    AboveThreshold at(eps, M, AT_T, xi, derive_seed(202, "at", r));
    bool ok = true;
    for (std::int64_t t = 0; t < AT_T; ++t) {
      ok = ok && std::abs(at.noisy_threshold() - M) < 2.0 / eps * log_term;
      at.query(static_cast<std::int64_t>(t % static_cast<std::int64_t>(M)));
      ok = ok && std::abs(at.last_query_noise()) < 4.0 / eps * log_term;
    }
    good += ok;
  }
  const double at_freq = double(good) / trials;
  const bool at_ok = at_freq >= 0.95;
  return {lap_ok && bm_ok && at_ok, "Laplace tail " + fmt(freq) + "; BM max error " + fmt(max_err) + " <= " +
                                        fmt(bound) + "; sparse-vector bounds held in " + fmt(100 * at_freq) + "%"};
}

// 3. Level-0 buffer: flush sizes under noise, exact replay without noise.
Verdict criterion3() {
  MRConfig cfg;
  cfg.k = 2;
  cfg.dim = 2;
  cfg.radius = 16.0;
  cfg.horizon = 1000000;
  cfg.epsilon = 1.0;
  cfg.xi = 0.05;
  cfg.block_size = default_block_size(1.0, cfg.horizon, cfg.xi, 8.0, 0.0, 100.0);
  const auto M = cfg.block_size;
  MergeReduce mr(cfg, 303);
  Rng rng(303);
  int tops = 0, small = 0;
  while (mr.flushes() < 1000) {
    const auto before = mr.buffer_size() + 1;
    if (mr.update(random_in_ball(rng, 2, 16.0))) {
      ++tops;
      small += before * 2 < static_cast<std::size_t>(M);
    }
  }
  const double cond = double(small) / tops;
  const bool noisy_peak = mr.peak_buffer() * 2 <= static_cast<std::size_t>(3 * M);

  // Noise-off replay: TOP is exact, so the buffer can never pass 3M/2.
  auto off = cfg;
  off.noise_off = true;
  MergeReduce replay(off, 303);
  Rng rng2(303);
  for (std::int64_t t = 0; t < tops * M; ++t) replay.update(random_in_ball(rng2, 2, 16.0));
  AboveThreshold exact(1.0, double(M), 10, 0.05, 1, true);
  bool exact_ok = true;
  for (std::int64_t p0 = (3 * M + 1) / 2; p0 < 4 * M; ++p0) exact_ok = exact_ok && exact.query(p0);
  const bool replay_ok = replay.peak_buffer() * 2 <= static_cast<std::size_t>(3 * M) && exact_ok;
  return {cond <= 0.01 && replay_ok, "M=" + std::to_string(M) + ", " + std::to_string(tops) +
                                         " flushes, P(TOP and p0 < M/2) = " + fmt(cond) + "; noisy peak " +
                                         std::to_string(mr.peak_buffer()) + ", replay peak " +
                                         std::to_string(replay.peak_buffer()) + " <= 3M/2" +
                                         (noisy_peak ? "" : " (noisy peak above 3M/2)")};
}

// 4. Heavy hitters: exact recovery without noise, inclusion and accuracy at eps = 1.
Verdict criterion4() {
  Rng rng(404);
  int exact_streams = 0;
  for (int trial = 0; trial < 50; ++trial) {
    HHConfig c;
    c.theta = 0.05 + 0.2 * uniform01(rng);
    c.horizon = 200 + static_cast<std::int64_t>(uniform01(rng) * 9800);
    c.noise_off = true;
    c.log_universe = std::log(1000.0);
    HeavyHitterSketch hh(c, trial);
    const auto universe = static_cast<std::uint64_t>(std::ceil(4.0 / c.theta));
    std::unordered_map<std::uint64_t, std::int64_t> freq;
    std::int64_t n = 0;
    for (std::int64_t t = 0; t < c.horizon; ++t) {
      if (uniform01(rng) < 0.1) {
        hh.update_empty();
        continue;
      }
      const double u = uniform01(rng);
      const auto item = static_cast<std::uint64_t>(std::floor(u * u * u * double(universe)));
      hh.update(item);
      ++freq[item];
      ++n;
    }
    const auto r = hh.report();
    bool ok = true;
    std::size_t expected = 0;
    for (const auto& [item, f] : freq) {
      if (f >= c.theta * double(n)) {
        ++expected;
        ok = ok && r.contains(item) && r.fhat.at(item) == double(f);
      }
    }
    exact_streams += ok && r.size() == expected;
  }

  const std::int64_t T = 10000;
  int good = 0;
  for (int trial = 0; trial < 100; ++trial) {
    HHConfig c;
    c.epsilon = 1.0;
    c.theta = 0.1;
    c.gamma_h = 0.25;
    c.horizon = T;
    c.xi = 0.05;
    c.log_universe = std::log(1e4);
    HeavyHitterSketch hh(c, derive_seed(404, "planted", trial));
    Rng srng(derive_seed(404, "planted-stream", trial));
    std::int64_t fa = 0;
    for (std::int64_t t = 0; t < T; ++t) {
      if (t % 5 == 0) {
        hh.update(0);
        ++fa;
      } else {
        hh.update(1 + (srng() % 100000));
      }
    }
    const auto r = hh.report();
    good += r.contains(0) && std::abs(r.fhat.at(0) - double(fa)) <= 0.25 * double(fa) && r.size() <= hh.report_cap();
  }
  return {exact_streams == 50 && good >= 95,
          std::to_string(exact_streams) + "/50 exact noise-off streams; planted HH conditions in " +
              std::to_string(good) + "/100 trials"};
}

// 6. Ring partition, charging bound and epoch/growth equivalence.
Verdict criterion6() {
  const int R = 7;  // Lambda = 128
  bool partition_ok = true;
  for (int i = 0; i < 10000; ++i) {
    const double d = i * (2.0 * 128.0 * std::sqrt(2.0)) / 10000.0;
    const int r = ring_of_distance(d, R);
    int hits = 0;
    for (int q = 0; q <= R; ++q) {
      const double lo = q == 0 ? 0.0 : std::ldexp(1.0, q - 1);
      const double hi = q == R ? INFINITY : std::ldexp(1.0, q);
      hits += d >= lo && d < hi;
      if (d >= lo && d < hi) partition_ok = partition_ok && q == r;
    }
    partition_ok = partition_ok && hits == 1;
  }

  bool charge_ok = true, epoch_ok = true;
  int epochs = 0;
  std::int64_t ticks = 0;
  for (bool off : {true, false}) {
    PipelineConfig c;
    c.k = 4;
    c.dim = 2;
    c.radius = 128;
    c.horizon = 10000;
    c.epsilon = 10.0;
    c.delta1 = 0.01;
    c.noise_off = off;
    Pipeline p(c, 606 + off);
    const auto pts = generate(parse_generator("gauss:k=4,d=2,sep=40,sigma=1,n=10000"), 128, 606);
    for (const auto& x : pts) {
      const auto before = p.num_centers();
      p.update(x);
      ++ticks;
      const bool grew = p.num_centers() > before;
      epoch_ok = epoch_ok && grew == p.last_opened_epoch();
      const int r = p.last_ring();
      const double d = p.last_distance();
      if (r >= 1 && std::isfinite(d)) {
        for (int z = 1; z <= 2; ++z) {
          charge_ok = charge_ok && std::pow(std::ldexp(1.0, r), z) <= std::pow(2.0, z) * std::pow(d, z) * (1 + 1e-12);
        }
      }
    }
    epochs += p.epoch();
  }
  return {partition_ok && charge_ok && epoch_ok,
          std::string("partition ") + (partition_ok ? "exhaustive" : "BROKEN") + " over 10^4 distances; charging bound " +
              (charge_ok ? "held" : "VIOLATED") + "; epoch<->growth " + (epoch_ok ? "matched" : "MISMATCHED") +
              " over " + std::to_string(ticks) + " ticks (" + std::to_string(epochs) + " epochs)"};
}

// 7. Utility trend on the Gaussian 4-cluster fixture.
Verdict criterion7() {
  const auto spec = parse_generator("gauss:k=4,d=2,sep=40,sigma=1,n=20000");
  const std::vector<double> eps_grid{0.1, 1.0, 10.0};
  std::map<double, std::vector<double>> ratios;
  std::vector<double> off_ratios;
  for (int seed = 1; seed <= 10; ++seed) {
    const auto stream = generate(spec, 128.0, static_cast<std::uint64_t>(seed));
    RunConfig c;
    c.k = 4;
    c.d = 2;
    c.z = 2;
    c.lambda = 128;
    c.gamma = 0.2;
    c.delta1 = 0.01;  // calibrated fixture value; epsilon1 = epsilon
    c.seed = static_cast<std::uint64_t>(seed);
    c.report_every = 20000;
    for (double e : eps_grid) {
      c.epsilon = e;
      c.noise_off = false;
      const auto r = run_stream(c, stream);
      g_runs.record(r, e);
      ratios[e].push_back(r.ratio());
    }
    c.epsilon = 1.0;
    c.noise_off = true;
    const auto r = run_stream(c, stream);
    g_runs.record(r, 1.0);
    off_ratios.push_back(r.ratio());
  }
  const double m01 = median(ratios[0.1]), m1 = median(ratios[1.0]), m10 = median(ratios[10.0]);
  const double moff = median(off_ratios);
  const bool finite = std::isfinite(m01) && std::isfinite(m1) && std::isfinite(m10);
  const bool monotone = m01 >= m1 && m1 >= m10;
  return {finite && monotone && moff <= 1.5,
          "median ratio eps=0.1: " + fmt(m01, 6) + ", eps=1: " + fmt(m1, 6) + ", eps=10: " + fmt(m10, 6) +
              ", noise-off: " + fmt(moff, 6)};
}

// 8. Space contract over every pipeline run in this binary.
Verdict criterion8() {
  // Two more runs: a spread-out noisy stream and a longer noise-off one.
  {
    RunConfig c;
    c.k = 3;
    c.lambda = 128;
    c.epsilon = 1.0;
    c.delta1 = 0.01;
    c.seed = 808;
    c.report_every = 5000;
    g_runs.record(run_stream(c, generate(parse_generator("uniform:d=2,n=30000"), 128, 808)), 1.0);
    c.noise_off = true;
    g_runs.record(run_stream(c, generate(parse_generator("gauss:k=3,d=2,sep=50,sigma=2,n=30000"), 128, 808)), 1.0);
  }
  return {g_runs.space_ok && g_runs.release_ok,
          std::to_string(g_runs.runs) + " runs; worst peak raw / ((log Lambda + 1) 3M/2) = " + fmt(g_runs.worst_raw) +
              ", worst peak |release| / bound = " + fmt(g_runs.worst_release)};
}

// 5. Bicriteria cap and budget, pooled over the runs above.
Verdict criterion5() {
  // Standalone noisy runs on a 16-cluster stream, where noise-driven reports
  // are the main source of growth.
  int standalone = 0;
  for (double eps : {1.0, 10.0, 100.0}) {
    BicriteriaConfig c;
    c.k = 4;
    c.radius = 128;
    c.dim = 2;
    c.horizon = 20000;
    c.epsilon = eps;
    Bicriteria b(c, derive_seed(505, "cap", standalone));
    Rng rng(derive_seed(505, "cap-stream", standalone++));
    for (const auto& x : planted(rng, 2, 16, 20000, 100.0, 4.0, 128.0)) b.update(x);
    g_runs.worst_cap = std::max(g_runs.worst_cap, double(b.centers().size()) / double(c.center_cap()));
    g_runs.cap_ok = g_runs.cap_ok && b.centers().size() <= c.center_cap();
    PrivacyBudget ledger;
    b.register_budget(ledger);
    if (std::abs(ledger.total().epsilon - eps) > 1e-9 * eps) {
      g_runs.budget_ok = false;
      g_runs.budget_note = "standalone bicriteria spend " + fmt(ledger.total().epsilon, 12);
    }
  }
  return {g_runs.cap_ok && g_runs.budget_ok,
          "cap constant c = 8; worst |F| / cap = " + fmt(g_runs.worst_cap) + " over " +
              std::to_string(g_runs.runs + standalone) + " runs; bicriteria ledger " +
              (g_runs.budget_ok ? "totals eps on every run" : g_runs.budget_note)};
}

// 9. Merge and reduce certificates on exact sub-coresets.
Verdict criterion9() {
  Rng rng(909);
  ConstructionBParams small_b;
  small_b.c_b = 0.002;  // forces real sampling at this size
  int pairs_ok = 0;
  for (int pair = 0; pair < 50; ++pair) {
    Rng trng(derive_seed(909, "tree", pair));
    const ShiftedQuadtree tree(0, 32.0, 2, trng);
    const auto obj = pair % 2 ? Objective::kMedian : Objective::kMeans;
    const auto p1 = planted(rng, 2, 3, 200, 20.0, 2.0, 32.0);
    const auto p2 = planted(rng, 2, 3, 200, 20.0, 2.0, 32.0);
    ConstructionAParams ap;
    ap.noise_off = true;
    const auto q1 = dp_semicoreset_a(p1, tree, obj, ap, rng);
    const auto q2 = dp_semicoreset_a(p2, tree, obj, ap, rng);
    WeightedSet union_p = with_unit_weights(p1);
    const auto w2 = with_unit_weights(p2);
    union_p.insert(union_p.end(), w2.begin(), w2.end());
    WeightedSet union_q = q1.points;
    union_q.insert(union_q.end(), q2.points.begin(), q2.points.end());
    const auto merged = Certificate::merge(q1.cert, q2.cert);
    const auto r = nondp_coreset_b(union_q, 3, obj, 0.2, derive_seed(909, "b", pair), small_b);
    std::vector<CenterSet> probes;
    for (int c = 0; c < 100; ++c) probes.push_back(random_centers(rng, 3, 2, 32.0));
    double g_r = 0.0;
    for (const auto& C : probes) g_r = std::max(g_r, std::abs(cost(C, r, obj) / cost(C, union_q, obj) - 1.0));
    const auto reduced = merged.reduce(g_r);
    bool all = true;
    for (const auto& C : probes) {
      const double cp = cost(C, union_p, obj);
      all = all && q1.cert.holds(cost(C, with_unit_weights(p1), obj), cost(C, q1.points, obj), 0.0);
      all = all && merged.holds(cp, cost(C, union_q, obj), 0.0);
      all = all && reduced.holds(cp, cost(C, r, obj), 0.0);
    }
    pairs_ok += all;
  }
  return {pairs_ok == 50, std::to_string(pairs_ok) + "/50 pairs hold merge and reduce certificates on all 100 probes"};
}

// 10. Byte-identical metrics files across reruns.
Verdict criterion10() {
  const auto base = std::filesystem::temp_directory_path() / "dpclust_acceptance_determinism";
  std::filesystem::remove_all(base);
  bool same = true;
  std::string note;
  for (bool off : {false, true}) {
    RunConfig c;
    c.k = 3;
    c.lambda = 128;
    c.seed = 1010;
    c.noise_off = off;
    c.report_every = 500;
    c.generator = "gauss:k=3,d=2,sep=50,sigma=1,n=5000";
    std::string bytes[2];
    for (int run = 0; run < 2; ++run) {
      c.output = (base / ((off ? "off" : "noisy") + std::to_string(run))).string();
      std::ostringstream err;
      if (run_main(c, err) != kExitOk) return {false, "run failed: " + err.str()};
      std::ifstream f(std::filesystem::path(c.output) / "metrics.csv", std::ios::binary);
      bytes[run].assign(std::istreambuf_iterator<char>(f), {});
    }
    same = same && !bytes[0].empty() && bytes[0] == bytes[1];
    note += std::string(off ? "noise-off " : "noisy ") + std::to_string(bytes[0].size()) + " bytes " +
            (bytes[0] == bytes[1] ? "identical" : "DIFFER") + (off ? "" : "; ");
  }
  std::filesystem::remove_all(base);
  return {same, note};
}

}  // namespace

int main() {
  // Order matters: 5 and 8 pool observations from the pipeline runs in 7.
  const std::vector<std::pair<int, std::function<Verdict()>>> criteria{
      {1, criterion1}, {2, criterion2}, {3, criterion3},  {4, criterion4}, {6, criterion6},
      {7, criterion7}, {8, criterion8}, {5, criterion5}, {9, criterion9}, {10, criterion10}};
  std::map<int, std::string> lines;
  int failed = 0;
  for (const auto& [id, fn] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !v.pass;
    lines[id] = std::string(v.pass ? "PASS" : "FAIL") + " criterion " + std::to_string(id) + ": " + v.detail + " [" +
                fmt(secs, 3) + " s]";
    std::fprintf(stderr, "%s\n", lines[id].c_str());
  }
  for (const auto& [id, line] : lines) std::printf("%s\n", line.c_str());
  return failed == 0 ? 0 : 1;
}
