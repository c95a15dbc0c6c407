#include "tsallis_lab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"

#ifndef TSALLIS_LAB_GIT_DESCRIBE
#define TSALLIS_LAB_GIT_DESCRIBE "unknown"
#endif

namespace tsallis_lab {

const char* build_version() { return TSALLIS_LAB_GIT_DESCRIBE; }

void validate(const RunConfig& config) {
  if (config.horizon == 0) throw ConfigError("horizon must be at least 1");
  if (config.replications == 0) throw ConfigError("replications must be at least 1");
  std::uint64_t prev = 0;
  for (std::uint64_t t : config.checkpoints) {
    if (t <= prev || t > config.horizon) {
      throw ConfigError("checkpoints must be strictly increasing within [1, horizon]");
    }
    prev = t;
  }
  if (config.fit_window && !(config.fit_window->lo <= config.fit_window->hi)) {
    throw ConfigError("fit window must satisfy lo <= hi");
  }
  // Surfaces alpha / fault errors before any work starts.
  TsallisInf probe(config.instance.arms(), config.alpha, config.policy);
}

std::vector<std::uint64_t> default_checkpoints(std::uint64_t n, int per_decade) {
  std::vector<std::uint64_t> out;
  for (int k = 0;; ++k) {
    const double t = std::round(std::pow(10.0, static_cast<double>(k) / per_decade));
    if (t >= static_cast<double>(n)) break;
    const auto ti = static_cast<std::uint64_t>(t);
    if (out.empty() || out.back() != ti) out.push_back(ti);
  }
  out.push_back(n);
  return out;
}

FitWindow effective_fit_window(const RunConfig& config) {
  if (config.fit_window) return *config.fit_window;
  const double n = static_cast<double>(config.horizon);
  return {n / 100.0, n};
}

void AuditReport::record(std::uint64_t round, std::uint64_t replication, const Violation& v) {
  ++violations;
  ++by_check[v.check];
  if (log.size() < kLogLimit) log.push_back({round, replication, v});
}

void AuditReport::merge(const AuditReport& other) {
  checks += other.checks;
  violations += other.violations;
  for (const auto& [name, count] : other.by_check) by_check[name] += count;
  for (const AuditEntry& e : other.log) {
    if (log.size() >= kLogLimit) break;
    log.push_back(e);
  }
  max_decomposition_residual =
      std::max(max_decomposition_residual, other.max_decomposition_residual);
  max_importance_weight = std::max(max_importance_weight, other.max_importance_weight);
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("TSALLIS_LAB_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

Moments summarize(std::span<const double> values) {
  Moments m;
  if (values.empty()) return m;
  const double n = static_cast<double>(values.size());
  m.mean = pairwise_sum(values) / n;
  if (values.size() < 2) return m;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (*lo == *hi) return {*lo, 0.0};  // the rounded mean would leave a spurious spread
  std::vector<double> sq(values.size());
  std::transform(values.begin(), values.end(), sq.begin(), [&](double v) {
    const double dev = v - m.mean;
    return dev * dev;
  });
  m.se = std::sqrt(pairwise_sum(sq) / (n - 1.0)) / std::sqrt(n);
  return m;
}

namespace {

enum Field : std::size_t {
  kBregman,
  kBregmanSq,
  kSimpleRegret,
  kPseudoRegret,
  kRhatPlusSq,
  kUPlusSq,
  kEventA,
  kFixedFields,
};

struct Replication {
  std::vector<double> samples;  // checkpoint-major, fields_per_checkpoint each
  AuditReport audit;
};

Replication run_replication(const RunConfig& config, std::span<const std::uint64_t> checkpoints,
                            std::uint64_t replication) {
  const InstanceSpec& instance = config.instance;
  const std::size_t d = instance.arms();
  const std::size_t star = instance.star();
  const std::size_t fields = kFixedFields + 2 * d;
  const RngStream rng(config.master_seed, config.force_replication_index.value_or(replication));

  Replication out;
  out.samples.assign(checkpoints.size() * fields, 0.0);
  TsallisInf policy(d, config.alpha, config.policy);
  RegretState regret(d);
  std::vector<double> losses(d);
  std::vector<double> before(d);
  std::vector<StepRecord> history;
  if (config.audit) history.reserve(static_cast<std::size_t>(config.horizon));
  AuditReport& audit = out.audit;

  std::size_t next_cp = 0;
  for (std::uint64_t t = 1; t <= config.horizon; ++t) {
    draw_losses(instance, rng, t, losses);
    const bool at_checkpoint = next_cp < checkpoints.size() && checkpoints[next_cp] == t;
    if (config.audit || at_checkpoint) before = policy.cumulative();
    if (config.audit) {
      for (const Violation& v : sandwich_violations(policy.point(), policy.eta(), before)) {
        audit.record(t, replication, v);
      }
      audit.checks += d + 1;
    }

    StepRecord rec = policy.step(losses, rng);
    regret.observe(rec, losses, instance.gaps());
    const double weight = 1.0 / *std::min_element(rec.p.probs().begin(), rec.p.probs().end());
    audit.max_importance_weight = std::max(audit.max_importance_weight, weight);

    if (config.audit) {
      const SimplexPoint& next = policy.point();
      for (const Violation& v : audit_step(rec.p, next, d, t)) audit.record(t, replication, v);
      const double residual =
          decomposition_residual(rec, next, rec.eta, policy.eta(), before, star);
      audit.max_decomposition_residual = std::max(audit.max_decomposition_residual, residual);
      if (!(residual <= kDecompositionTolerance)) {
        audit.record(t, replication, {"decomposition", star, residual, kDecompositionTolerance});
      }
      const DualSolution same_rate = solve_ftrl(rec.eta, policy.cumulative(), config.policy.solver);
      for (const Violation& v : learning_rate_violations(next, same_rate.point, t)) {
        audit.record(t, replication, v);
      }
      audit.checks += 2 * d + 1;
    }

    if (at_checkpoint) {
      const StepDiagnostics diag = diagnose(rec, before, regret, instance);
      double* row = out.samples.data() + next_cp * fields;
      row[kBregman] = diag.bregman_to_star;
      row[kBregmanSq] = diag.bregman_squared;
      row[kSimpleRegret] = diag.simple_regret;
      row[kPseudoRegret] = regret.pseudo_regret;
      row[kRhatPlusSq] = diag.rhat_plus * diag.rhat_plus;
      row[kUPlusSq] = diag.u_plus * diag.u_plus;
      row[kEventA] = diag.event_A ? 1.0 : 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        row[kFixedFields + i] = rec.p[i];
        row[kFixedFields + d + i] = std::sqrt(rec.p[i]);
      }
      ++next_cp;
    }
    if (config.audit) history.push_back(std::move(rec));
  }

  if (config.audit) {
    const double incremental = estimated_regret(regret);
    const double replayed = replay_estimated_regret(history);
    const double scale = std::max(1.0, std::abs(replayed));
    if (std::abs(incremental - replayed) > 1e-9 * scale) {
      audit.record(config.horizon, replication, {"rhat-replay", 0, incremental, replayed});
    }
    ++audit.checks;
  }
  return out;
}

}  // namespace

RunResult run_experiment(const RunConfig& config, unsigned threads) {
  validate(config);
  const std::vector<std::uint64_t> checkpoints =
      config.checkpoints.empty() ? default_checkpoints(config.horizon) : config.checkpoints;
  const std::size_t d = config.instance.arms();
  const std::size_t fields = kFixedFields + 2 * d;
  const std::uint64_t reps = config.replications;

  std::vector<Replication> results(static_cast<std::size_t>(reps));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(reps));
  std::atomic<std::uint64_t> next{0};
  auto worker = [&] {
    for (std::uint64_t r = next++; r < reps; r = next++) {
      try {
        results[r] = run_replication(config, checkpoints, r);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };

  RunResult result;
  result.threads = static_cast<unsigned>(
      std::min<std::uint64_t>(resolve_threads(threads), reps));
  if (result.threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(result.threads);
    for (unsigned i = 0; i < result.threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (std::uint64_t r = 0; r < reps; ++r) {
    if (!errors[r]) continue;
    try {
      std::rethrow_exception(errors[r]);
    } catch (const SolverError& e) {
      std::ostringstream msg;
      msg << e.what() << " [master seed " << config.master_seed << ", replication " << r << "]";
      throw ExperimentError(msg.str(), config.master_seed, r);
    }
  }

  std::vector<double> column(static_cast<std::size_t>(reps));
  auto gather = [&](std::size_t k, std::size_t field) {
    for (std::uint64_t r = 0; r < reps; ++r) column[r] = results[r].samples[k * fields + field];
    return summarize(column);
  };
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    CheckpointStats s;
    s.t = checkpoints[k];
    s.n_reps = reps;
    s.bregman = gather(k, kBregman);
    s.bregman_sq = gather(k, kBregmanSq);
    s.simple_regret = gather(k, kSimpleRegret);
    s.pseudo_regret = gather(k, kPseudoRegret);
    s.rhat_plus_sq = gather(k, kRhatPlusSq);
    s.u_plus_sq = gather(k, kUPlusSq);
    s.prob_event_A = gather(k, kEventA).mean;
    for (std::size_t i = 0; i < d; ++i) {
      s.p.push_back(gather(k, kFixedFields + i));
      s.sqrt_p.push_back(gather(k, kFixedFields + d + i));
    }
    result.checkpoints.push_back(std::move(s));
  }
  for (const Replication& rep : results) result.audit.merge(rep.audit);
  return result;
}

PowerLawFit fit_power_law(std::span<const CurvePoint> points, FitWindow window) {
  PowerLawFit fit;
  std::vector<double> xs;
  std::vector<double> ys;
  for (const CurvePoint& pt : points) {
    if (pt.t < window.lo || pt.t > window.hi) continue;
    if (!(pt.value > 0.0) || !std::isfinite(pt.value)) {
      ++fit.excluded_nonpositive;
      continue;
    }
    xs.push_back(std::log(pt.t));
    ys.push_back(std::log(pt.value));
  }
  fit.used = xs.size();
  if (fit.used < 3) {
    std::ostringstream msg;
    msg << "power-law fit needs at least 3 positive points in [" << window.lo << ", "
        << window.hi << "], found " << fit.used;
    if (fit.excluded_nonpositive > 0) msg << " (" << fit.excluded_nonpositive << " nonpositive excluded)";
    throw FitError(msg.str());
  }
  const double n = static_cast<double>(fit.used);
  const double mx = pairwise_sum(xs) / n;
  const double my = pairwise_sum(ys) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) throw FitError("power-law fit needs at least two distinct t values");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss_res += r * r;
  }
  // A constant curve is fitted exactly by slope 0.
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

double growth_ratio(std::span<const CurvePoint> points, double t_lo, double t_hi, Growth growth) {
  auto find = [&](double t) {
    for (const CurvePoint& pt : points) {
      if (pt.t == t) return pt.value;
    }
    std::ostringstream msg;
    msg << "growth_ratio: no point at t = " << t;
    throw FitError(msg.str());
  };
  auto scale = [&](double t) {
    switch (growth) {
      case Growth::kFlat:
        return 1.0;
      case Growth::kLinear:
        return t;
      case Growth::kLogarithmic:
        return std::log(t);
    }
    return 1.0;
  };
  return (find(t_hi) / scale(t_hi)) / (find(t_lo) / scale(t_lo));
}

namespace {

std::vector<double> row_values(const CheckpointStats& s) {
  std::vector<double> row = {static_cast<double>(s.t),
                             static_cast<double>(s.n_reps),
                             s.bregman.mean,
                             s.bregman.se,
                             s.bregman_sq.mean,
                             s.bregman_sq.se,
                             s.simple_regret.mean,
                             s.simple_regret.se,
                             s.pseudo_regret.mean,
                             s.pseudo_regret.se,
                             s.rhat_plus_sq.mean,
                             s.rhat_plus_sq.se,
                             s.u_plus_sq.mean,
                             s.u_plus_sq.se,
                             s.prob_event_A};
  for (const Moments& m : s.p) row.push_back(m.mean);
  for (const Moments& m : s.sqrt_p) row.push_back(m.mean);
  return row;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<std::string> csv_header(std::size_t arms) {
  std::vector<std::string> h = {"t",
                                "n_reps",
                                "mean_bregman",
                                "se_bregman",
                                "mean_bregman_sq",
                                "se_bregman_sq",
                                "mean_simple_regret",
                                "se_simple_regret",
                                "mean_pseudo_regret",
                                "se_pseudo_regret",
                                "mean_rhat_plus_sq",
                                "se_rhat_plus_sq",
                                "mean_u_plus_sq",
                                "se_u_plus_sq",
                                "prob_event_A"};
  for (std::size_t i = 1; i <= arms; ++i) h.push_back("mean_p_" + std::to_string(i));
  for (std::size_t i = 1; i <= arms; ++i) h.push_back("mean_sqrt_p_" + std::to_string(i));
  return h;
}

std::vector<CurvePoint> curve(const std::vector<CheckpointStats>& stats,
                              const std::string& column) {
  if (stats.empty()) return {};
  const auto header = csv_header(stats.front().p.size());
  const auto it = std::find(header.begin(), header.end(), column);
  if (it == header.end()) throw FitError("unknown column '" + column + "'");
  const auto idx = static_cast<std::size_t>(it - header.begin());
  std::vector<CurvePoint> out;
  out.reserve(stats.size());
  for (const CheckpointStats& s : stats) {
    out.push_back({static_cast<double>(s.t), row_values(s)[idx]});
  }
  return out;
}

void write_csv(std::ostream& out, const std::vector<CheckpointStats>& stats, std::size_t arms) {
  const auto header = csv_header(arms);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const CheckpointStats& s : stats) {
    out << s.t << ',' << s.n_reps;
    const auto row = row_values(s);
    for (std::size_t i = 2; i < row.size(); ++i) out << ',' << format_double(row[i]);
    out << '\n';
  }
}

std::filesystem::path write_results(const std::filesystem::path& dir, const RunConfig& config,
                                    const RunResult& result, double wall_seconds) {
  std::filesystem::create_directories(dir);
  const auto csv_path = dir / "run.csv";
  {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + csv_path.string());
    write_csv(out, result.checkpoints, config.instance.arms());
    if (!out) throw std::runtime_error("error writing " + csv_path.string());
  }

  using nlohmann::json;
  const InstanceSpec& inst = config.instance;
  json meta;
  meta["version"] = build_version();
  meta["config"] = {
      {"means", inst.means()},
      {"arm_kind", inst.kind() == ArmKind::kBernoulli ? "bernoulli" : "uniform"},
      {"width", inst.width()},
      {"optimal_arm", inst.star() + 1},
      {"min_gap", inst.min_gap()},
      {"alpha", config.alpha},
      {"horizon", config.horizon},
      {"replications", config.replications},
      {"seed", config.master_seed},
      {"checkpoints", result.checkpoints.size()},
      {"audit", config.audit},
      {"allow_unstable_alpha", config.policy.allow_unstable_alpha},
  };
  if (config.policy.clip_probs) meta["config"]["fault_clip_probs"] = *config.policy.clip_probs;

  const FitWindow window = effective_fit_window(config);
  meta["fit_window"] = {window.lo, window.hi};
  std::vector<std::string> columns = {"mean_bregman", "mean_bregman_sq", "mean_simple_regret"};
  for (std::size_t i = 0; i < inst.arms(); ++i) {
    if (i == inst.star()) continue;
    columns.push_back("mean_sqrt_p_" + std::to_string(i + 1));
    columns.push_back("mean_p_" + std::to_string(i + 1));
  }
  json fits = json::object();
  for (const std::string& col : columns) {
    const auto pts = curve(result.checkpoints, col);
    try {
      const PowerLawFit f = fit_power_law(pts, window);
      fits[col] = {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}, {"points", f.used}};
    } catch (const FitError& e) {
      fits[col] = {{"error", e.what()}};
    }
  }
  meta["fits"] = fits;
  if (config.audit) {
    meta["audit"] = {{"checks", result.audit.checks},
                     {"violations", result.audit.violations},
                     {"by_check", result.audit.by_check},
                     {"max_decomposition_residual", result.audit.max_decomposition_residual}};
  }
  meta["max_importance_weight"] = result.audit.max_importance_weight;
  meta["threads"] = result.threads;
  meta["wall_seconds"] = wall_seconds;

  const auto meta_path = dir / "run.meta.json";
  std::ofstream out(meta_path);
  if (!out) throw std::runtime_error("cannot write " + meta_path.string());
  out << meta.dump(2) << '\n';
  return csv_path;
}

std::vector<CurvePoint> ResultsTable::curve(const std::string& column) const {
  const auto it = std::find(header.begin(), header.end(), column);
  if (it == header.end()) throw FitError("unknown column '" + column + "'");
  const auto t_it = std::find(header.begin(), header.end(), "t");
  if (t_it == header.end()) throw FitError("results table has no 't' column");
  const auto idx = static_cast<std::size_t>(it - header.begin());
  const auto t_idx = static_cast<std::size_t>(t_it - header.begin());
  std::vector<CurvePoint> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back({row[t_idx], row[idx]});
  return out;
}

ResultsTable parse_results_csv(std::istream& in) {
  ResultsTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("results CSV is empty");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      if (!cell.empty() && cell.back() == '\r') cell.pop_back();
      table.header.push_back(cell);
    }
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || *end != '\0') {
        throw std::runtime_error("results CSV line " + std::to_string(lineno) +
                                 ": not a number: '" + cell + "'");
      }
      row.push_back(v);
    }
    if (row.size() != table.header.size()) {
      throw std::runtime_error("results CSV line " + std::to_string(lineno) + " has " +
                               std::to_string(row.size()) + " fields, header has " +
                               std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

ResultsTable read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse_results_csv(in);
}

}  // namespace tsallis_lab
