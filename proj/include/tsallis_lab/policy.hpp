#pragma once

// 1/2-Tsallis-INF: FTRL with Psi(p) = -4 sum sqrt(p_i), eta_t = alpha / sqrt(t),
// and importance-weighted loss estimates.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tsallis_lab/env.hpp"
#include "tsallis_lab/ftrl.hpp"
#include "tsallis_lab/rng.hpp"

namespace tsallis_lab {

/// alpha / sqrt(t). Throws std::invalid_argument for t == 0.
double learning_rate(double alpha, std::uint64_t t);

/// Inverse CDF over the running sums of p in arm order. The last arm absorbs
/// any rounding shortfall of the cumulative sum.
std::size_t sample_arm(const SimplexPoint& p, double uniform);
std::size_t sample_arm(const SimplexPoint& p, const RngStream& rng, std::uint64_t round);

/// Vector with observed / p[chosen] at `chosen` and zero elsewhere.
std::vector<double> estimate_loss(const SimplexPoint& p, std::size_t chosen, double observed);

/// Lowest-index minimizer.
std::size_t empirical_argmin(std::span<const double> cumulative);

struct PolicyOptions {
  /// Admit alpha >= 1 (outside the range covered by the convergence analysis).
  bool allow_unstable_alpha = false;
  /// Fault injection: floor every probability at this value and renormalize
  /// before playing. Breaks the FTRL closed form on purpose.
  std::optional<double> clip_probs;
  SolverOptions solver;
};

struct StepRecord {
  std::uint64_t t = 0;
  SimplexPoint p = SimplexPoint::uniform(1);  // iterate played at round t
  std::size_t chosen = 0;
  double observed_loss = 0.0;
  std::vector<double> est_loss;
  double eta = 0.0;
  double dual_nu = 0.0;
};

/// Per-trajectory policy state. Invariant: point() equals
/// solve_ftrl(learning_rate(alpha, round()), cumulative()) unless a clip
/// fault is configured.
class TsallisInf {
 public:
  /// Throws ConfigError for arms == 0 or alpha outside (0, 1) without the
  /// override (alpha must still be positive and finite).
  TsallisInf(std::size_t arms, double alpha, PolicyOptions options = {});

  std::size_t arms() const { return cumulative_.size(); }
  double alpha() const { return alpha_; }
  /// Round about to be played (starts at 1).
  std::uint64_t round() const { return t_; }
  double eta() const { return learning_rate(alpha_, t_); }
  const std::vector<double>& cumulative() const { return cumulative_; }
  const SimplexPoint& point() const { return point_; }
  const DualSolution& dual() const { return dual_; }

  /// Plays one round with the arm chosen by `uniform` in [0, 1).
  StepRecord step(std::span<const double> losses, double uniform);
  /// Plays one round drawing the arm from the policy lane of `rng`.
  StepRecord step(std::span<const double> losses, const RngStream& rng);

 private:
  void refresh();

  double alpha_;
  PolicyOptions options_;
  std::uint64_t t_ = 1;
  std::vector<double> cumulative_;
  DualSolution dual_;
  SimplexPoint point_;
};

}  // namespace tsallis_lab
