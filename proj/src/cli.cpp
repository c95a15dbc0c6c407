#include "tsallis_lab/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "tsallis_lab/harness.hpp"

namespace tsallis_lab::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError(what + ": not a number: '" + text + "'");
  }
  if (trim(text.substr(used)) != "") throw ConfigError(what + ": not a number: '" + text + "'");
  return v;
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(parse_number(trim(cell), what));
  if (out.empty()) throw ConfigError(what + " is empty");
  return out;
}

FitWindow parse_window(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("window must look like LO:HI");
  FitWindow w{parse_number(text.substr(0, colon), "window"),
              parse_number(text.substr(colon + 1), "window")};
  if (!(w.lo <= w.hi)) throw ConfigError("window must satisfy LO <= HI");
  return w;
}

std::string fmt(double v, const char* spec = "%.17g") {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

struct RunFlags {
  std::string config_file;
  std::string means;
  std::string arm_kind = "bernoulli";
  double width = 0.5;
  double alpha = 0.5;
  bool allow_unstable_alpha = false;
  std::int64_t horizon = 100000;
  std::int64_t reps = 1000;
  std::uint64_t seed = 42;
  std::string out = "results";
  int per_decade = 20;
  std::string checkpoints;
  std::string fit_window;
  std::string fault;
  unsigned threads = 0;
  bool audit = false;
  bool quiet = false;
};

void add_run_options(CLI::App& cmd, RunFlags& f) {
  cmd.add_option("--config", f.config_file,
                 "key=value file with flag names as keys; flags given on the command line win");
  cmd.add_option("--means", f.means, "Comma-separated mean loss per arm, each in [0,1]");
  cmd.add_option("--arm-kind", f.arm_kind, "Arm loss distribution: bernoulli or uniform")
      ->capture_default_str();
  cmd.add_option("--width", f.width, "Support width of uniform arms")->capture_default_str();
  cmd.add_option("--alpha", f.alpha, "Learning-rate scale, eta_t = alpha/sqrt(t)")
      ->capture_default_str();
  cmd.add_flag("--allow-unstable-alpha", f.allow_unstable_alpha,
               "Experimental: accept alpha >= 1");
  cmd.add_option("--horizon", f.horizon, "Rounds per trajectory")->capture_default_str();
  cmd.add_option("--reps", f.reps, "Independent replications")->capture_default_str();
  cmd.add_option("--seed", f.seed, "Master seed")->capture_default_str();
  cmd.add_option("--out", f.out, "Output directory for run.csv and run.meta.json")
      ->capture_default_str();
  cmd.add_option("--checkpoints-per-decade", f.per_decade, "Log-spaced checkpoint density")
      ->capture_default_str();
  cmd.add_option("--checkpoints", f.checkpoints,
                 "Explicit comma-separated checkpoint rounds (overrides the log grid)");
  cmd.add_option("--fit-window", f.fit_window,
                 "LO:HI rounds for the power-law fits (default: last two decades)");
  cmd.add_option("--fault", f.fault, "Fault injection for testing the audit: clip-probs=FLOOR");
  cmd.add_option("--threads", f.threads,
                 "Worker threads (default: TSALLIS_LAB_THREADS or logical cores)");
  cmd.add_flag("--audit", f.audit, "Check the iterate properties at every step");
  cmd.add_flag("--quiet", f.quiet, "Do not print the checkpoint summary");
}

RunConfig to_config(const RunFlags& f) {
  if (f.means.empty()) throw ConfigError("--means is required");
  ArmKind kind;
  if (f.arm_kind == "bernoulli") {
    kind = ArmKind::kBernoulli;
  } else if (f.arm_kind == "uniform") {
    kind = ArmKind::kUniform;
  } else {
    throw ConfigError("--arm-kind must be bernoulli or uniform");
  }
  if (f.horizon < 1) throw ConfigError("--horizon must be at least 1");
  if (f.reps < 1) throw ConfigError("--reps must be at least 1");
  if (f.per_decade < 1) throw ConfigError("--checkpoints-per-decade must be at least 1");

  RunConfig config;
  config.instance = InstanceSpec(parse_list(f.means, "--means"), kind, f.width);
  config.alpha = f.alpha;
  config.horizon = static_cast<std::uint64_t>(f.horizon);
  config.replications = static_cast<std::uint64_t>(f.reps);
  config.master_seed = f.seed;
  config.audit = f.audit;
  config.policy.allow_unstable_alpha = f.allow_unstable_alpha;
  if (!f.checkpoints.empty()) {
    for (double t : parse_list(f.checkpoints, "--checkpoints")) {
      if (!(t >= 1.0) || t != std::floor(t)) throw ConfigError("checkpoints must be rounds >= 1");
      config.checkpoints.push_back(static_cast<std::uint64_t>(t));
    }
  } else {
    config.checkpoints = default_checkpoints(config.horizon, f.per_decade);
  }
  if (!f.fit_window.empty()) config.fit_window = parse_window(f.fit_window);
  if (!f.fault.empty()) {
    const std::string prefix = "clip-probs=";
    if (f.fault.rfind(prefix, 0) != 0) throw ConfigError("unknown fault '" + f.fault + "'");
    config.policy.clip_probs = parse_number(f.fault.substr(prefix.size()), "--fault");
  }
  validate(config);
  return config;
}

void print_summary(std::ostream& out, const RunConfig& config, const RunResult& result) {
  char line[160];
  std::snprintf(line, sizeof line, "%10s %14s %14s %14s %14s %8s\n", "t", "bregman",
                "simple_regret", "pseudo_regret", "rhat_plus_sq", "P(A_t)");
  out << line;
  for (const CheckpointStats& s : result.checkpoints) {
    std::snprintf(line, sizeof line, "%10llu %14.6e %14.6e %14.6e %14.6e %8.4f\n",
                  static_cast<unsigned long long>(s.t), s.bregman.mean, s.simple_regret.mean,
                  s.pseudo_regret.mean, s.rhat_plus_sq.mean, s.prob_event_A);
    out << line;
  }
  const FitWindow w = effective_fit_window(config);
  try {
    const auto fit = fit_power_law(curve(result.checkpoints, "mean_bregman"), w);
    out << "mean_bregman slope over [" << w.lo << ", " << w.hi << "]: " << fmt(fit.slope, "%.4f")
        << " (r2 " << fmt(fit.r2, "%.4f") << ")\n";
  } catch (const FitError& e) {
    out << "mean_bregman fit skipped: " << e.what() << '\n';
  }
}

int cmd_run(const RunFlags& flags, bool audit_cmd, std::ostream& out, std::ostream& err) {
  RunConfig config = to_config(flags);
  config.audit = config.audit || audit_cmd;
  const auto start = std::chrono::steady_clock::now();
  const RunResult result = run_experiment(config, flags.threads);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto path = write_results(flags.out, config, result, wall);
  if (!flags.quiet) print_summary(out, config, result);
  out << "wrote " << path.string() << '\n';

  if (!config.audit) return kOk;
  const AuditReport& audit = result.audit;
  for (const AuditEntry& e : audit.log) {
    err << "violation round=" << e.round << " replication=" << e.replication
        << " check=" << e.violation.check << " arm=" << e.violation.arm + 1
        << " lhs=" << fmt(e.violation.lhs) << " rhs=" << fmt(e.violation.rhs) << '\n';
  }
  if (audit.violations > audit.log.size()) {
    err << "... " << audit.violations - audit.log.size() << " further violations not listed\n";
  }
  out << "audit: " << audit.checks << " checks, " << audit.violations << " violations";
  for (const auto& [name, count] : audit.by_check) out << ", " << name << "=" << count;
  out << "; max decomposition residual " << fmt(audit.max_decomposition_residual, "%.3e")
      << '\n';
  return audit.violations == 0 ? kOk : kAuditViolation;
}

struct FitFlags {
  std::string input;
  std::string column = "mean_bregman";
  std::string window;
  std::optional<double> expect_slope_max;
  std::optional<double> expect_slope_min;
  std::optional<double> expect_r2_min;
};

int cmd_fit(const FitFlags& f, std::ostream& out, std::ostream& err) {
  ResultsTable table;
  try {
    table = read_results_csv(f.input);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  std::vector<CurvePoint> pts;
  try {
    pts = table.curve(f.column);
  } catch (const FitError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
  FitWindow window{-INFINITY, INFINITY};
  if (!f.window.empty()) window = parse_window(f.window);

  PowerLawFit fit;
  try {
    fit = fit_power_law(pts, window);
  } catch (const FitError& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  out << "column    " << f.column << '\n';
  out << "points    " << fit.used;
  if (fit.excluded_nonpositive) out << " (" << fit.excluded_nonpositive << " nonpositive excluded)";
  out << '\n';
  out << "slope     " << fmt(fit.slope, "%.6f") << '\n';
  out << "intercept " << fmt(fit.intercept, "%.6f") << '\n';
  out << "r2        " << fmt(fit.r2, "%.6f") << '\n';

  bool ok = true;
  auto report = [&](const char* name, bool pass, double bound) {
    out << (pass ? "PASS " : "FAIL ") << name << ' ' << fmt(bound, "%g") << '\n';
    ok = ok && pass;
  };
  if (f.expect_slope_max) report("slope <=", fit.slope <= *f.expect_slope_max, *f.expect_slope_max);
  if (f.expect_slope_min) report("slope >=", fit.slope >= *f.expect_slope_min, *f.expect_slope_min);
  if (f.expect_r2_min) report("r2 >=", fit.r2 >= *f.expect_r2_min, *f.expect_r2_min);
  return ok ? kOk : kAssertionFailed;
}

struct TraceFlags {
  std::string replay;
  std::uint64_t seed = 0;
  std::int64_t steps = 0;
  double alpha = 0.5;
  bool allow_unstable_alpha = false;
  std::int64_t star = 0;
};

int cmd_trace(const TraceFlags& f, std::ostream& out, std::ostream& err) {
  std::optional<ReplayTable> table;
  try {
    table.emplace(ReplayTable::load(f.replay));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  const std::size_t d = table->arms();
  const std::size_t steps = f.steps > 0 ? static_cast<std::size_t>(f.steps) : table->rounds();
  if (f.steps < 0 || steps > table->rounds()) {
    throw ConfigError("--steps " + std::to_string(f.steps) + " exceeds the " +
                      std::to_string(table->rounds()) + " replay rows");
  }
  std::size_t star = 0;
  if (f.star > 0) {
    if (static_cast<std::size_t>(f.star) > d) throw ConfigError("--star is not a valid arm");
    star = static_cast<std::size_t>(f.star - 1);
  } else {
    std::vector<double> totals(d, 0.0);
    for (std::size_t t = 1; t <= steps; ++t) {
      for (std::size_t i = 0; i < d; ++i) totals[i] += table->losses(t)[i];
    }
    star = empirical_argmin(totals);
  }

  PolicyOptions options;
  options.allow_unstable_alpha = f.allow_unstable_alpha;
  TsallisInf policy(d, f.alpha, options);
  const RngStream rng(f.seed, 0);

  out << "t,eta,nu,chosen";
  for (std::size_t i = 1; i <= d; ++i) out << ",p_" << i;
  for (std::size_t i = 1; i <= d; ++i) out << ",lhat_" << i;
  out << ",bregman,residual\n";
  for (std::size_t t = 1; t <= steps; ++t) {
    const std::vector<double> before = policy.cumulative();
    const StepRecord rec = policy.step(table->losses(t), rng);
    const double residual =
        decomposition_residual(rec, policy.point(), rec.eta, policy.eta(), before, star);
    out << rec.t << ',' << fmt(rec.eta) << ',' << fmt(rec.dual_nu) << ',' << rec.chosen + 1;
    for (std::size_t i = 0; i < d; ++i) out << ',' << fmt(rec.p[i]);
    for (std::size_t i = 0; i < d; ++i) out << ',' << fmt(rec.est_loss[i]);
    out << ',' << fmt(bregman_to_vertex(rec.p, star)) << ',' << fmt(residual, "%.3e") << '\n';
  }
  return kOk;
}

// Expands `--config FILE` into flag tokens placed ahead of the command-line
// tokens, so explicit flags override the file.
std::vector<std::string> expand_config(const std::vector<std::string>& args, CLI::App& app) {
  if (args.empty()) return args;
  CLI::App* sub = nullptr;
  try {
    sub = app.get_subcommand(args.front());
  } catch (const CLI::OptionNotFound&) {
    return args;
  }
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;

  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::vector<std::string> out = {args.front()};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const CLI::Option* opt = key == "config" ? nullptr : sub->get_option_no_throw("--" + key);
    if (opt == nullptr) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    // CLI11 accepts --flag=true/false as well as --option=value.
    out.push_back("--" + key + "=" + value);
  }
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulation and verification lab for 1/2-Tsallis-INF bandits", "tsallis-lab"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run_cmd = app.add_subcommand("run", "Run replications and write aggregated checkpoints");
  add_run_options(*run_cmd, run_flags);

  RunFlags audit_flags;
  auto* audit_cmd =
      app.add_subcommand("audit", "Run with per-step property checks; exit 3 on any violation");
  add_run_options(*audit_cmd, audit_flags);

  FitFlags fit_flags;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a power law to one column of a results CSV");
  fit_cmd->add_option("--input", fit_flags.input, "Results CSV written by run")->required();
  fit_cmd->add_option("--column", fit_flags.column, "Column to fit")->capture_default_str();
  fit_cmd->add_option("--window", fit_flags.window, "LO:HI range of t (default: all rows)");
  fit_cmd->add_option("--expect-slope-max", fit_flags.expect_slope_max,
                      "Exit 4 unless slope <= value");
  fit_cmd->add_option("--expect-slope-min", fit_flags.expect_slope_min,
                      "Exit 4 unless slope >= value");
  fit_cmd->add_option("--expect-r2-min", fit_flags.expect_r2_min, "Exit 4 unless r2 >= value");

  TraceFlags trace_flags;
  auto* trace_cmd =
      app.add_subcommand("trace", "Replay a loss table through one trajectory, dumping each step");
  trace_cmd->add_option("--replay", trace_flags.replay, "Loss table: CSV, one row per round")
      ->required();
  trace_cmd->add_option("--seed", trace_flags.seed, "Seed of the arm-sampling stream")
      ->capture_default_str();
  trace_cmd->add_option("--steps", trace_flags.steps, "Rounds to play (default: every row)");
  trace_cmd->add_option("--alpha", trace_flags.alpha, "Learning-rate scale")
      ->capture_default_str();
  trace_cmd->add_flag("--allow-unstable-alpha", trace_flags.allow_unstable_alpha,
                      "Experimental: accept alpha >= 1");
  trace_cmd->add_option("--star", trace_flags.star,
                        "Reference arm (1-based) for bregman and residual; default: lowest "
                        "total replay loss");

  for (CLI::App* sub : {run_cmd, audit_cmd, fit_cmd, trace_cmd}) {
    sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  }

  try {
    const std::vector<std::string> expanded = expand_config(args, app);
    std::vector<std::string> argv_store = {"tsallis-lab"};
    argv_store.insert(argv_store.end(), expanded.begin(), expanded.end());
    std::vector<char*> argv;
    for (std::string& s : argv_store) argv.push_back(s.data());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kConfigError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(run_flags, false, out, err);
    if (audit_cmd->parsed()) return cmd_run(audit_flags, true, out, err);
    if (fit_cmd->parsed()) return cmd_fit(fit_flags, out, err);
    if (trace_cmd->parsed()) return cmd_trace(trace_flags, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ExperimentError& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kConfigError;
}

}  // namespace tsallis_lab::cli
