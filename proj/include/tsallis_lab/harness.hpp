#pragma once

// Monte-Carlo driver: R independent Tsallis-INF trajectories on a stochastic
// instance, diagnostics aggregated at log-spaced checkpoints, and power-law
// fits of the aggregated curves.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsallis_lab/env.hpp"
#include "tsallis_lab/metrics.hpp"
#include "tsallis_lab/policy.hpp"

namespace tsallis_lab {

/// A replication failed at runtime (solver breakdown); carries seed context.
class ExperimentError : public std::runtime_error {
 public:
  ExperimentError(const std::string& what, std::uint64_t master_seed, std::uint64_t replication)
      : std::runtime_error(what), master_seed(master_seed), replication(replication) {}
  std::uint64_t master_seed;
  std::uint64_t replication;
};

struct FitWindow {
  double lo = 0.0;
  double hi = 0.0;
};

struct RunConfig {
  InstanceSpec instance{std::vector<double>{0.2, 0.5}};
  double alpha = 0.5;
  std::uint64_t horizon = 1;
  std::uint64_t replications = 1;
  std::uint64_t master_seed = 0;
  /// Empty means default_checkpoints(horizon).
  std::vector<std::uint64_t> checkpoints;
  bool audit = false;
  PolicyOptions policy;
  /// Empty means [horizon / 100, horizon].
  std::optional<FitWindow> fit_window;
  /// Test hook: every replication reuses this stream index.
  std::optional<std::uint64_t> force_replication_index;
};

/// Throws ConfigError if horizon or replications is zero, or checkpoints are
/// not strictly increasing within [1, horizon].
void validate(const RunConfig& config);

/// round(10^(k / per_decade)) for k = 0, 1, ..., deduplicated, capped at n,
/// with n itself always last.
std::vector<std::uint64_t> default_checkpoints(std::uint64_t n, int per_decade = 20);

FitWindow effective_fit_window(const RunConfig& config);

struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

struct CheckpointStats {
  std::uint64_t t = 0;
  std::uint64_t n_reps = 0;
  Moments bregman;
  Moments bregman_sq;
  Moments simple_regret;
  Moments pseudo_regret;
  Moments rhat_plus_sq;
  Moments u_plus_sq;
  double prob_event_A = 0.0;
  std::vector<Moments> p;       // per arm
  std::vector<Moments> sqrt_p;  // per arm
};

struct AuditEntry {
  std::uint64_t round = 0;
  std::uint64_t replication = 0;
  Violation violation;
};

struct AuditReport {
  static constexpr std::size_t kLogLimit = 1000;

  std::uint64_t checks = 0;
  std::uint64_t violations = 0;
  std::map<std::string, std::uint64_t> by_check;
  std::vector<AuditEntry> log;  // first kLogLimit violations in replication order
  double max_decomposition_residual = 0.0;
  double max_importance_weight = 0.0;

  void record(std::uint64_t round, std::uint64_t replication, const Violation& v);
  void merge(const AuditReport& other);
};

struct RunResult {
  std::vector<CheckpointStats> checkpoints;
  AuditReport audit;
  unsigned threads = 1;
};

/// Worker count: `requested` if nonzero, else TSALLIS_LAB_THREADS, else the
/// number of logical cores.
unsigned resolve_threads(unsigned requested = 0);

/// Runs every replication and aggregates in replication order, so the result
/// is bitwise independent of `threads`. Throws ExperimentError on solver
/// failure (lowest failing replication wins).
RunResult run_experiment(const RunConfig& config, unsigned threads = 0);

/// Mean and standard error (sample std / sqrt n) with pairwise summation.
Moments summarize(std::span<const double> values);
double pairwise_sum(std::span<const double> values);

struct CurvePoint {
  double t = 0.0;
  double value = 0.0;
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PowerLawFit {
  double slope = 0.0;
  double intercept = 0.0;  // natural log of the prefactor
  double r2 = 0.0;
  std::size_t used = 0;
  std::size_t excluded_nonpositive = 0;
};

/// OLS of log(value) on log(t) over points with t in [lo, hi] and value > 0.
/// Throws FitError with fewer than 3 usable points.
PowerLawFit fit_power_law(std::span<const CurvePoint> points, FitWindow window);

enum class Growth { kFlat, kLinear, kLogarithmic };

/// (value(t_hi) / g(t_hi)) / (value(t_lo) / g(t_lo)) for the hypothesized
/// growth g. Throws FitError if either endpoint is missing.
double growth_ratio(std::span<const CurvePoint> points, double t_lo, double t_hi, Growth growth);

/// Names of the CSV columns, per-arm columns last.
std::vector<std::string> csv_header(std::size_t arms);

/// Curve for one CSV column name (e.g. "mean_bregman", "mean_sqrt_p_2").
std::vector<CurvePoint> curve(const std::vector<CheckpointStats>& stats, const std::string& column);

void write_csv(std::ostream& out, const std::vector<CheckpointStats>& stats, std::size_t arms);

/// Writes `run.csv` and `run.meta.json` under `dir`; returns the CSV path.
std::filesystem::path write_results(const std::filesystem::path& dir, const RunConfig& config,
                                    const RunResult& result, double wall_seconds);

/// Column-oriented view of a results CSV.
struct ResultsTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Throws FitError if the column does not exist.
  std::vector<CurvePoint> curve(const std::string& column) const;
};

/// Throws std::runtime_error on unreadable or malformed input.
ResultsTable read_results_csv(const std::filesystem::path& path);
ResultsTable parse_results_csv(std::istream& in);

/// `git describe` of the build tree, or "unknown".
const char* build_version();

}  // namespace tsallis_lab
