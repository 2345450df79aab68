#include "dpclust/harness.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "dpclust/errors.hpp"

namespace dpclust {

namespace {

[[noreturn]] void config_fail(const std::string& what) { throw ConfigError(what); }

double parse_double(std::string_view s, bool& ok) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  ok = ec == std::errc() && ptr == end;
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

void RunConfig::validate() const {
  if (k < 1) config_fail("k >= 1 violated");
  if (d < 1) config_fail("d >= 1 violated");
  if (z != 1 && z != 2) config_fail("z in {1, 2} violated");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) config_fail("Lambda > 0 violated");
  if (horizon < 0) config_fail("horizon >= 0 violated");
  if (!(epsilon > 0.0)) config_fail("epsilon > 0 violated");
  if (!(epsilon1 >= 0.0)) config_fail("epsilon1 > 0 violated");
  if (!noise_off && !(delta1 > 0.0 && delta1 < 1.0)) config_fail("0 < delta1 < 1 violated");
  if (!(gamma > 0.0 && gamma < 0.5)) config_fail("0 < gamma < 0.5 violated");
  if (!(theta >= 0.0 && theta < 1.0)) config_fail("0 < theta < 1 violated");
  if (!(gamma_h > 0.0 && gamma_h < 0.5)) config_fail("0 < gamma_h < 0.5 violated");
  if (block_size < 0) config_fail("block size M >= 1 violated");
  if (!(c_m > 0.0)) config_fail("C_M > 0 violated");
  if (report_every < 1) config_fail("report_every >= 1 violated");
}

PipelineConfig RunConfig::pipeline(std::int64_t stream_length) const {
  PipelineConfig p;
  p.k = k;
  p.z = objective_from_z(z);
  p.dim = static_cast<std::size_t>(d);
  p.radius = lambda;
  p.horizon = horizon > 0 ? horizon : stream_length;
  p.epsilon = epsilon;
  p.epsilon1 = epsilon1 > 0.0 ? epsilon1 : epsilon;
  p.delta1 = delta1;
  p.gamma = gamma;
  p.theta = theta;
  p.gamma_h = gamma_h;
  p.block_size = block_size;
  p.c_m = c_m;
  p.noise_off = noise_off;
  return p;
}

GeneratorSpec parse_generator(const std::string& spec) {
  GeneratorSpec g;
  const auto colon = spec.find(':');
  g.kind = spec.substr(0, colon);
  if (g.kind != "gauss" && g.kind != "uniform") config_fail("unknown generator kind '" + g.kind + "'");
  if (colon == std::string::npos) return g;
  std::string_view rest(spec);
  rest.remove_prefix(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const auto item = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) config_fail("generator option '" + std::string(item) + "' is not key=value");
    const auto key = item.substr(0, eq);
    bool ok = false;
    const double v = parse_double(item.substr(eq + 1), ok);
    if (!ok || !std::isfinite(v)) config_fail("generator option '" + std::string(item) + "' has a bad value");
    if (key == "k") g.k = static_cast<int>(v);
    else if (key == "d") g.d = static_cast<int>(v);
    else if (key == "sep") g.sep = v;
    else if (key == "sigma") g.sigma = v;
    else if (key == "n") g.n = static_cast<std::int64_t>(v);
    else if (key == "r") g.r = v;
    else config_fail("unknown generator option '" + std::string(key) + "'");
  }
  if (g.k < 1 || g.d < 1 || g.n < 0 || g.sigma < 0.0 || g.r < 0.0) config_fail("generator option out of range");
  return g;
}

std::vector<Point> generate(const GeneratorSpec& spec, double lambda, std::uint64_t seed) {
  Rng rng = make_rng(seed, "generator");
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(spec.n));
  const auto d = static_cast<std::size_t>(spec.d);
  if (spec.kind == "gauss") {
    std::normal_distribution<double> noise(0.0, spec.sigma);
    for (int i = 0; i < spec.k; ++i) {
      const double m = (i - (spec.k - 1) / 2.0) * spec.sep;
      if (std::abs(m) > lambda) config_fail("generator: cluster mean lies outside the Lambda-ball");
    }
    while (static_cast<std::int64_t>(out.size()) < spec.n) {
      const auto c = static_cast<int>(rng() % static_cast<std::uint64_t>(spec.k));
      Point p{std::vector<double>(d, 0.0)};
      p[0] = (c - (spec.k - 1) / 2.0) * spec.sep;
      for (auto& v : p.coords) v += noise(rng);
      if (p.norm() <= lambda) out.push_back(std::move(p));
    }
  } else {
    const double r = spec.r > 0.0 ? std::min(spec.r, lambda) : lambda;
    while (static_cast<std::int64_t>(out.size()) < spec.n) {
      Point p{std::vector<double>(d)};
      for (auto& v : p.coords) v = (2.0 * uniform01(rng) - 1.0) * r;
      if (p.norm() <= r) out.push_back(std::move(p));
    }
  }
  return out;
}

std::vector<Point> read_points_csv(std::istream& in, int d, double lambda) {
  std::vector<Point> out;
  std::string line;
  std::int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty()) continue;
    Point p;
    p.coords.reserve(static_cast<std::size_t>(d));
    std::string_view rest = body;
    while (true) {
      const auto comma = rest.find(',');
      bool ok = false;
      const double v = parse_double(trim(rest.substr(0, comma)), ok);
      if (!ok) throw InputError("line " + std::to_string(lineno) + ": cannot parse a number");
      if (!std::isfinite(v)) throw InputError("line " + std::to_string(lineno) + ": non-finite value");
      p.coords.push_back(v);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (static_cast<int>(p.dim()) != d) {
      throw InputError("line " + std::to_string(lineno) + ": expected " + std::to_string(d) + " values, got " +
                       std::to_string(p.dim()));
    }
    if (p.norm() > lambda * (1.0 + 1e-12)) {
      throw InputError("line " + std::to_string(lineno) + ": point norm exceeds Lambda");
    }
    out.push_back(std::move(p));
  }
  return out;
}

BaselineResult baseline_kmeanspp(std::span<const Point> stream, int k, Objective z, std::uint64_t seed) {
  if (stream.empty()) throw NoData("baseline: empty stream");
  const auto w = with_unit_weights(stream);
  BaselineResult r;
  r.centers = approx_cluster(w, k, z, derive_seed(seed, "baseline"));
  r.cost = cost(r.centers, w, z);
  return r;
}

double MetricsRow::ratio() const noexcept {
  if (baseline_cost > 0.0) return released_cost / baseline_cost;
  return released_cost == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
}

double RunResult::ratio() const noexcept {
  if (baseline_cost > 0.0) return released_cost / baseline_cost;
  return released_cost == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
}

RunResult run_stream(const RunConfig& cfg, std::span<const Point> stream) {
  cfg.validate();
  const auto n = static_cast<std::int64_t>(stream.size());
  const PipelineConfig pc = cfg.pipeline(n);
  try {
    pc.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
  Pipeline pipe(pc, cfg.seed);
  const Objective z = pc.z;

  RunResult r;
  r.stream_length = n;
  r.horizon = pc.horizon;
  r.block_size = pipe.block_size();
  r.raw_point_bound = pc.raw_point_bound();
  r.release_bound = pc.release_bound();
  r.center_cap = pc.bicriteria().center_cap();

  auto evaluate = [&](std::int64_t t, double& released, double& baseline, std::optional<CenterSet>* keep) {
    const auto prefix = stream.first(static_cast<std::size_t>(t));
    const auto raw = with_unit_weights(prefix);
    baseline = t > 0 ? baseline_kmeanspp(prefix, cfg.k, z, cfg.seed).cost : 0.0;
    const auto& rel = pipe.release();
    if (rel.empty()) {
      released = t > 0 ? std::numeric_limits<double>::infinity() : 0.0;
      return;
    }
    auto centers = finalize_centers(rel, cfg.k, z, derive_seed(cfg.seed, "finalize"));
    released = cost(centers, raw, z);
    if (keep) *keep = std::move(centers);
  };

  using clock = std::chrono::steady_clock;
  auto window_start = clock::now();
  std::int64_t window_ticks = 0;
  for (std::int64_t t = 1; t <= n; ++t) {
    pipe.update(stream[static_cast<std::size_t>(t - 1)]);
    ++window_ticks;
    if (t % cfg.report_every == 0 || t == n) {
      const auto now = clock::now();
      MetricsRow row;
      row.t = t;
      row.centers = pipe.num_centers();
      row.epoch = pipe.epoch();
      row.live_raw = pipe.live_raw_points();
      row.union_size = pipe.union_size();
      row.release_size = pipe.release().size();
      row.eps_spent = pipe.budget().total().epsilon;
      row.micros_per_update =
          std::chrono::duration<double, std::micro>(now - window_start).count() / static_cast<double>(window_ticks);
      evaluate(t, row.released_cost, row.baseline_cost, t == n ? &r.centers : nullptr);
      r.rows.push_back(row);
      window_start = clock::now();
      window_ticks = 0;
    }
  }
  if (!r.rows.empty()) {
    r.released_cost = r.rows.back().released_cost;
    r.baseline_cost = r.rows.back().baseline_cost;
  }
  r.bicriteria_centers = pipe.num_centers();
  r.epochs = pipe.epoch();
  r.peak_live_raw = pipe.peak_live_raw_points();
  r.peak_release = pipe.peak_release_size();
  r.total_spend = pipe.budget().total();
  r.bicriteria_spend = pipe.budget().total_with_prefix("bicriteria/");
  r.merge_reduce_spend = pipe.budget().total_with_prefix("merge_reduce");
  r.ledger_entries = pipe.budget().size();
  return r;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

void write_metrics_csv(std::ostream& out, const RunResult& r) {
  out << kMetricsVersion << '\n' << kMetricsHeader << '\n';
  for (const auto& row : r.rows) {
    out << row.t << ',' << row.centers << ',' << row.epoch << ',' << row.live_raw << ',' << row.union_size << ','
        << row.release_size << ',' << format_double(row.released_cost) << ',' << format_double(row.baseline_cost)
        << ',' << format_double(row.ratio()) << ',' << format_double(row.eps_spent) << '\n';
  }
}

void write_timing_csv(std::ostream& out, const RunResult& r) {
  out << "t,micros_per_update\n";
  for (const auto& row : r.rows) out << row.t << ',' << format_double(row.micros_per_update) << '\n';
}

void write_centers_csv(std::ostream& out, const RunResult& r) {
  if (!r.centers) return;
  for (const auto& c : r.centers->centers) {
    for (std::size_t j = 0; j < c.dim(); ++j) out << (j ? "," : "") << format_double(c[j]);
    out << '\n';
  }
}

void write_summary_json(std::ostream& out, const RunConfig& cfg, const RunResult& r) {
  using nlohmann::json;
  auto num = [](double v) -> json { return std::isfinite(v) ? json(v) : json(nullptr); };
  json j;
  j["config"] = {{"k", cfg.k},
                 {"d", cfg.d},
                 {"z", cfg.z},
                 {"lambda", cfg.lambda},
                 {"epsilon", cfg.epsilon},
                 {"epsilon1", cfg.epsilon1 > 0.0 ? cfg.epsilon1 : cfg.epsilon},
                 {"delta1", cfg.delta1},
                 {"gamma", cfg.gamma},
                 {"gamma_h", cfg.gamma_h},
                 {"seed", cfg.seed},
                 {"noise_off", cfg.noise_off}};
  j["T"] = r.stream_length;
  j["horizon"] = r.horizon;
  j["block_size"] = r.block_size;
  j["bicriteria_centers"] = r.bicriteria_centers;
  j["center_cap"] = r.center_cap;
  j["epochs"] = r.epochs;
  j["peak_live_raw"] = r.peak_live_raw;
  j["raw_point_bound"] = r.raw_point_bound;
  j["peak_release_size"] = r.peak_release;
  j["release_bound"] = r.release_bound;
  j["released_cost"] = num(r.released_cost);
  j["baseline_cost"] = num(r.baseline_cost);
  j["cost_ratio"] = num(r.ratio());
  j["centers"] = r.centers ? r.centers->k() : 0;
  j["budget"] = {{"epsilon", r.total_spend.epsilon},
                 {"delta", r.total_spend.delta},
                 {"bicriteria_epsilon", r.bicriteria_spend.epsilon},
                 {"merge_reduce_epsilon", r.merge_reduce_spend.epsilon},
                 {"merge_reduce_delta", r.merge_reduce_spend.delta},
                 {"ledger_entries", r.ledger_entries}};
  out << j.dump(2) << '\n';
}

void write_outputs(const std::filesystem::path& dir, const RunConfig& cfg, const RunResult& r) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw InputError("cannot write " + (dir / name).string());
    f.imbue(std::locale::classic());
    return f;
  };
  {
    auto f = open("metrics.csv");
    write_metrics_csv(f, r);
  }
  {
    auto f = open("timing.csv");
    write_timing_csv(f, r);
  }
  {
    auto f = open("centers.csv");
    write_centers_csv(f, r);
  }
  {
    auto f = open("summary.json");
    write_summary_json(f, cfg, r);
  }
}

int run_main(const RunConfig& cfg, std::ostream& err) {
  try {
    cfg.validate();
    if (cfg.input.empty() == cfg.generator.empty()) config_fail("exactly one of --input and --generator is required");
    std::vector<Point> stream;
    if (!cfg.generator.empty()) {
      auto spec = parse_generator(cfg.generator);
      if (spec.d != cfg.d) {
        if (cfg.generator.find("d=") != std::string::npos) config_fail("generator d differs from --d");
        spec.d = cfg.d;
      }
      stream = generate(spec, cfg.lambda, cfg.seed);
    } else {
      std::ifstream in(cfg.input);
      if (!in) throw InputError("cannot open input file " + cfg.input);
      stream = read_points_csv(in, cfg.d, cfg.lambda);
    }
    const auto result = run_stream(cfg, stream);
    if (!cfg.output.empty()) write_outputs(cfg.output, cfg, result);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const HorizonExhausted& e) {
    err << "input error: stream longer than the horizon (" << e.what() << ")\n";
    return kExitInput;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const CapacityExceeded& e) {
    err << "bound exceeded: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace dpclust
