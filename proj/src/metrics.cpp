#include "tsallis_lab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tsallis_lab {

double simple_regret(const SimplexPoint& p, const InstanceSpec& spec) {
  if (p.size() != spec.arms()) throw std::invalid_argument("simple_regret: dimension mismatch");
  double r = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i != spec.star()) r += spec.gaps()[i] * p[i];
  }
  return r;
}

void RegretState::observe(const StepRecord& rec, std::span<const double> losses,
                          std::span<const double> gaps) {
  ++rounds;
  sum_inner += rec.est_loss[rec.chosen] * rec.p[rec.chosen];
  cumulative_est[rec.chosen] += rec.est_loss[rec.chosen];
  for (std::size_t i = 0; i < losses.size(); ++i) cumulative_real_loss_per_arm[i] += losses[i];
  incurred_real += rec.observed_loss;
  if (!gaps.empty()) pseudo_regret += gaps[rec.chosen];
}

double estimated_regret(const RegretState& state) {
  return state.sum_inner -
         *std::min_element(state.cumulative_est.begin(), state.cumulative_est.end());
}

double real_regret(const RegretState& state) {
  return state.incurred_real - *std::min_element(state.cumulative_real_loss_per_arm.begin(),
                                                 state.cumulative_real_loss_per_arm.end());
}

double u_statistic(const RegretState& state, std::size_t star) {
  return state.cumulative_est.at(star) - state.sum_inner;
}

double replay_estimated_regret(std::span<const StepRecord> records) {
  if (records.empty()) return 0.0;
  const std::size_t d = records.front().p.size();
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < d; ++i) {
    double total = 0.0;
    for (const StepRecord& rec : records) {
      double inner = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        inner += rec.est_loss[j] * ((j == i ? -1.0 : 0.0) + rec.p[j]);
      }
      total += inner;
    }
    best = std::max(best, total);
  }
  return best;
}

double decomposition_residual(const StepRecord& prev, const SimplexPoint& next_p, double eta_t,
                              double eta_next, std::span<const double> cumulative_t,
                              std::size_t star) {
  const SimplexPoint& p = prev.p;
  const std::size_t d = p.size();
  const std::span<const double> lhat = prev.est_loss;

  double lhs = 0.0;
  double stability_inner = 0.0;
  double drift_inner = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double vertex = i == star ? 1.0 : 0.0;
    lhs += (p[i] - vertex) * lhat[i];
    stability_inner += (p[i] - next_p[i]) * lhat[i];
    drift_inner += (next_p[i] - vertex) * eta_t * cumulative_t[i];
  }
  std::vector<double> e_star(d, 0.0);
  e_star[star] = 1.0;

  const double stability = stability_inner - bregman(next_p.probs(), p) / eta_next;
  const double penalty = (bregman(e_star, p) - bregman(e_star, next_p)) / eta_next;
  const double drift = (1.0 / eta_next - 1.0 / eta_t) * drift_inner;
  return std::abs(lhs - (stability + penalty + drift));
}

std::vector<Violation> audit_step(const SimplexPoint& prev_p, const SimplexPoint& next_p,
                                  std::size_t d, std::uint64_t t) {
  std::vector<Violation> out;
  const double dd = static_cast<double>(d);
  for (std::size_t i = 0; i < next_p.size(); ++i) {
    const double rhs = 7.0 * dd * prev_p[i] + 1.0 / static_cast<double>(t);
    if (next_p[i] > rhs + kAuditSlack) out.push_back({"compare", i, next_p[i], rhs});
  }
  return out;
}

std::vector<Violation> sandwich_violations(const SimplexPoint& p, double eta,
                                           std::span<const double> cumulative) {
  std::vector<Violation> out;
  const ScaledLosses base = underline(cumulative);
  const double d = static_cast<double>(p.size());
  const double root_d = std::sqrt(d);
  double max_mass = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double x = eta * base[i];
    const double lower = 4.0 / ((x + 2.0 * root_d) * (x + 2.0 * root_d));
    if (p[i] < lower - kAuditSlack) out.push_back({"sandwich-lower", i, p[i], lower});
    if (x > 0.0) {
      const double upper = 4.0 / (x * x);
      if (p[i] > upper + kAuditSlack) out.push_back({"sandwich-upper", i, p[i], upper});
    }
    max_mass = std::max(max_mass, p[i]);
  }
  const std::size_t leader = empirical_argmin(cumulative);
  if (p[leader] < max_mass - kAuditSlack || p[leader] < 1.0 / d - kAuditSlack) {
    out.push_back({"sandwich-max", leader, p[leader], std::max(max_mass, 1.0 / d)});
  }
  return out;
}

std::vector<Violation> learning_rate_violations(const SimplexPoint& next_p,
                                                const SimplexPoint& same_rate_p,
                                                std::uint64_t t) {
  std::vector<Violation> out;
  const double bound = 1.0 / static_cast<double>(t);
  for (std::size_t i = 0; i < next_p.size(); ++i) {
    const double diff = next_p[i] - same_rate_p[i];
    if (diff > bound + kAuditSlack) out.push_back({"multi", i, diff, bound});
  }
  return out;
}

StepDiagnostics diagnose(const StepRecord& rec, std::span<const double> cumulative_t,
                         const RegretState& state, const InstanceSpec& spec) {
  StepDiagnostics diag;
  diag.t = rec.t;
  diag.bregman_to_star = bregman_to_vertex(rec.p, spec.star());
  diag.bregman_squared = diag.bregman_to_star * diag.bregman_to_star;
  diag.simple_regret = simple_regret(rec.p, spec);
  diag.event_A = empirical_argmin(cumulative_t) == spec.star();
  diag.rhat_plus = std::max(estimated_regret(state), 0.0);
  diag.u_plus = std::max(u_statistic(state, spec.star()), 0.0);
  diag.max_importance_weight =
      1.0 / *std::min_element(rec.p.probs().begin(), rec.p.probs().end());
  return diag;
}

}  // namespace tsallis_lab
