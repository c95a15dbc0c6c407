#pragma once

// Per-step diagnostics for Tsallis-INF trajectories: last-iterate quantities,
// running regret statistics and numerical checks of the deterministic
// properties of the FTRL iterates.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tsallis_lab/env.hpp"
#include "tsallis_lab/ftrl.hpp"
#include "tsallis_lab/policy.hpp"

namespace tsallis_lab {

/// sum_{i != star} gap_i * p_i.
double simple_regret(const SimplexPoint& p, const InstanceSpec& spec);

/// Running sums for one trajectory after t observed rounds.
struct RegretState {
  explicit RegretState(std::size_t arms)
      : cumulative_est(arms, 0.0), cumulative_real_loss_per_arm(arms, 0.0) {}

  std::uint64_t rounds = 0;
  double sum_inner = 0.0;  // sum_s <lhat_s, p_s>
  std::vector<double> cumulative_est;
  std::vector<double> cumulative_real_loss_per_arm;
  double incurred_real = 0.0;  // sum_s l_{s, I_s}
  double pseudo_regret = 0.0;  // sum_s gap_{I_s}

  /// Folds in one round. `losses` is the full environment vector; `gaps`
  /// may be empty (replay runs), in which case pseudo_regret stays 0.
  void observe(const StepRecord& rec, std::span<const double> losses,
               std::span<const double> gaps = {});
};

/// max_i sum_s <lhat_s, p_s - e_i> = sum_inner - min_i cumulative_est_i.
double estimated_regret(const RegretState& state);
/// max_i sum_s (l_{s,I_s} - l_{s,i}).
double real_regret(const RegretState& state);
/// cumulative_est[star] - sum_inner.
double u_statistic(const RegretState& state, std::size_t star);

/// O(t d) recomputation of the estimated regret straight from its definition.
double replay_estimated_regret(std::span<const StepRecord> records);

/// |<p_t - e_star, lhat_t> - (I + II + III)| for the stability / penalty /
/// learning-rate-drift split of the instantaneous estimated regret.
/// `cumulative_t` is the estimate before round t was folded in and `next_p`
/// the iterate for round t + 1.
double decomposition_residual(const StepRecord& prev, const SimplexPoint& next_p, double eta_t,
                              double eta_next, std::span<const double> cumulative_t,
                              std::size_t star);

struct Violation {
  std::string check;
  std::size_t arm = 0;
  double lhs = 0.0;
  double rhs = 0.0;
};

inline constexpr double kAuditSlack = 1e-9;
inline constexpr double kDecompositionTolerance = 1e-7;

/// Growth bound between consecutive iterates: next_i <= 7 d prev_i + 1/t.
std::vector<Violation> audit_step(const SimplexPoint& prev_p, const SimplexPoint& next_p,
                                  std::size_t d, std::uint64_t t);

/// 4 (x_i + 2 sqrt d)^-2 <= p_i <= 4 x_i^-2 with x = eta * underline(cumulative),
/// plus max_i p_i >= 1/d.
std::vector<Violation> sandwich_violations(const SimplexPoint& p, double eta,
                                           std::span<const double> cumulative);

/// next_i - same_rate_i <= 1/t, where same_rate is the round-(t+1) estimate
/// solved with the round-t learning rate.
std::vector<Violation> learning_rate_violations(const SimplexPoint& next_p,
                                                const SimplexPoint& same_rate_p,
                                                std::uint64_t t);

struct StepDiagnostics {
  std::uint64_t t = 0;
  double bregman_to_star = 0.0;
  double bregman_squared = 0.0;
  double simple_regret = 0.0;
  bool event_A = false;
  double rhat_plus = 0.0;
  double u_plus = 0.0;
  double decomposition_residual = 0.0;
  double max_importance_weight = 0.0;
};

/// Diagnostics for round t. `cumulative_t` is the estimate p_t was solved
/// from; `state` must already include round t.
StepDiagnostics diagnose(const StepRecord& rec, std::span<const double> cumulative_t,
                         const RegretState& state, const InstanceSpec& spec);

}  // namespace tsallis_lab
