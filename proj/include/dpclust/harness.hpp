#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpclust/geometry.hpp"
#include "dpclust/pipeline.hpp"

namespace dpclust {

/// Invalid run configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
// A tripped internal bound (e.g. the bicriteria center cap).
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInput = 3;

inline constexpr const char* kMetricsVersion = "#metrics-v1";
inline constexpr const char* kMetricsHeader =
    "t,centers,epoch,live_raw,union_size,release_size,released_cost,baseline_cost,cost_ratio,eps_spent";

struct RunConfig {
  int k = 3;
  int d = 2;
  int z = 2;
  double lambda = 128.0;
  std::int64_t horizon = 0;  // 0 = stream length
  double epsilon = 1.0;
  double epsilon1 = 0.0;  // 0 = epsilon
  double delta1 = 1e-6;
  double gamma = 0.2;
  double theta = 0.0;  // 0 = derived from the bucket count
  double gamma_h = 0.25;
  std::int64_t block_size = 0;  // 0 = derived
  double c_m = 100.0;
  std::uint64_t seed = 1;
  bool noise_off = false;
  std::int64_t report_every = 1000;
  std::string input;
  std::string generator;
  std::string output;

  /// Throws ConfigError naming the violated inequality.
  void validate() const;
  /// Pipeline settings for a stream of `stream_length` points.
  PipelineConfig pipeline(std::int64_t stream_length) const;
};

struct GeneratorSpec {
  std::string kind;  // "gauss" or "uniform"
  int k = 3;
  int d = 2;
  double sep = 50.0;
  double sigma = 1.0;
  std::int64_t n = 1000;
  double r = 0.0;  // uniform: radius, 0 = Lambda
};

/// Parses "gauss:k=3,d=2,sep=50,sigma=1,n=20000" or "uniform:d=2,n=1000,r=10".
/// Throws ConfigError on unknown kinds, keys or bad values.
GeneratorSpec parse_generator(const std::string& spec);

/// Gaussian clusters with means (i - (k-1)/2) * sep on axis 0, or uniform
/// points in the ball of radius r. Points falling outside the Lambda-ball are
/// redrawn. Deterministic given seed.
std::vector<Point> generate(const GeneratorSpec& spec, double lambda, std::uint64_t seed);

/// One point per line, `d` comma-separated finite decimals. Throws
/// InputError with the 1-based line number on arity, parse, finiteness or
/// ball violations. Blank lines are skipped.
std::vector<Point> read_points_csv(std::istream& in, int d, double lambda);

struct BaselineResult {
  CenterSet centers;
  double cost = 0.0;
};

/// Batch k-means++ / Lloyd on the unit-weight stream.
BaselineResult baseline_kmeanspp(std::span<const Point> stream, int k, Objective z, std::uint64_t seed);

struct MetricsRow {
  std::int64_t t = 0;
  std::size_t centers = 0;
  int epoch = 0;
  std::size_t live_raw = 0;
  std::size_t union_size = 0;
  std::size_t release_size = 0;
  double released_cost = 0.0;  // cost of finalize_centers(release) on the prefix; +inf if nothing released
  double baseline_cost = 0.0;
  double eps_spent = 0.0;
  double micros_per_update = 0.0;  // wall clock; written to timing.csv only

  double ratio() const noexcept;
};

struct RunResult {
  std::vector<MetricsRow> rows;
  std::int64_t stream_length = 0;
  std::int64_t horizon = 0;
  std::optional<CenterSet> centers;  // nullopt when nothing was released
  double released_cost = 0.0;
  double baseline_cost = 0.0;
  std::size_t bicriteria_centers = 0;
  std::size_t center_cap = 0;
  int epochs = 0;
  std::int64_t block_size = 0;
  std::size_t peak_live_raw = 0;
  std::size_t raw_point_bound = 0;
  std::size_t peak_release = 0;
  std::size_t release_bound = 0;
  Spend total_spend;
  Spend bicriteria_spend;
  Spend merge_reduce_spend;
  std::size_t ledger_entries = 0;

  double ratio() const noexcept;
};

/// Drives the pipeline over `stream`. A metrics row is taken every
/// report_every ticks and after the last tick. Throws HorizonExhausted if the
/// stream is longer than an explicit horizon.
RunResult run_stream(const RunConfig& cfg, std::span<const Point> stream);

/// Locale-independent shortest round-trip formatting ("inf", "nan" for non-finite).
std::string format_double(double v);

void write_metrics_csv(std::ostream& out, const RunResult& r);
void write_timing_csv(std::ostream& out, const RunResult& r);
void write_centers_csv(std::ostream& out, const RunResult& r);
void write_summary_json(std::ostream& out, const RunConfig& cfg, const RunResult& r);

/// Writes metrics.csv, timing.csv, centers.csv and summary.json into `dir`
/// (created if missing).
void write_outputs(const std::filesystem::path& dir, const RunConfig& cfg, const RunResult& r);

/// Full CLI flow after argument parsing: load or generate the stream, run,
/// write outputs. Returns the process exit code; diagnostics go to `err`.
int run_main(const RunConfig& cfg, std::ostream& err);

}  // namespace dpclust
