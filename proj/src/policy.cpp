#include "tsallis_lab/policy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tsallis_lab {

double learning_rate(double alpha, std::uint64_t t) {
  if (t == 0) throw std::invalid_argument("learning_rate: rounds start at 1");
  return alpha / std::sqrt(static_cast<double>(t));
}

std::size_t sample_arm(const SimplexPoint& p, double uniform) {
  double acc = 0.0;
  const std::size_t last = p.size() - 1;
  for (std::size_t i = 0; i < last; ++i) {
    acc += p[i];
    if (uniform < acc) return i;
  }
  return last;
}

std::size_t sample_arm(const SimplexPoint& p, const RngStream& rng, std::uint64_t round) {
  return sample_arm(p, rng.uniform(round, Purpose::kArmSampling));
}

std::vector<double> estimate_loss(const SimplexPoint& p, std::size_t chosen, double observed) {
  if (chosen >= p.size()) throw std::invalid_argument("estimate_loss: arm index out of range");
  std::vector<double> est(p.size(), 0.0);
  est[chosen] = observed / p[chosen];
  return est;
}

std::size_t empirical_argmin(std::span<const double> cumulative) {
  if (cumulative.empty()) throw std::invalid_argument("empirical_argmin of an empty vector");
  return static_cast<std::size_t>(std::min_element(cumulative.begin(), cumulative.end()) -
                                  cumulative.begin());
}

namespace {

double checked_alpha(double alpha, const PolicyOptions& options) {
  if (!std::isfinite(alpha) || alpha <= 0.0) {
    throw ConfigError("alpha must be positive and finite");
  }
  if (alpha >= 1.0 && !options.allow_unstable_alpha) {
    std::ostringstream msg;
    msg << "alpha = " << alpha
        << " is outside (0, 1); pass --allow-unstable-alpha to run it anyway";
    throw ConfigError(msg.str());
  }
  if (options.clip_probs && !(*options.clip_probs > 0.0 && *options.clip_probs < 1.0)) {
    throw ConfigError("clip-probs floor must lie in (0, 1)");
  }
  return alpha;
}

}  // namespace

TsallisInf::TsallisInf(std::size_t arms, double alpha, PolicyOptions options)
    : alpha_(checked_alpha(alpha, options)),
      options_(options),
      cumulative_(arms, 0.0),
      dual_{SimplexPoint::uniform(arms == 0 ? 1 : arms)},
      point_(SimplexPoint::uniform(arms == 0 ? 1 : arms)) {
  if (arms == 0) throw ConfigError("policy needs at least one arm");
  refresh();
}

void TsallisInf::refresh() {
  dual_ = solve_ftrl(eta(), cumulative_, options_.solver);
  if (!options_.clip_probs) {
    point_ = dual_.point;
    return;
  }
  std::vector<double> clipped = dual_.point.vector();
  double total = 0.0;
  for (double& v : clipped) {
    v = std::max(v, *options_.clip_probs);
    total += v;
  }
  for (double& v : clipped) v /= total;
  point_ = SimplexPoint::unchecked(std::move(clipped));
}

StepRecord TsallisInf::step(std::span<const double> losses, double uniform) {
  if (losses.size() != arms()) throw std::invalid_argument("step: loss vector has wrong size");
  StepRecord rec;
  rec.t = t_;
  rec.p = point_;
  rec.eta = eta();
  rec.dual_nu = dual_.nu;
  rec.chosen = sample_arm(point_, uniform);
  rec.observed_loss = losses[rec.chosen];
  rec.est_loss = estimate_loss(point_, rec.chosen, rec.observed_loss);

  cumulative_[rec.chosen] += rec.est_loss[rec.chosen];
  ++t_;
  refresh();
  return rec;
}

StepRecord TsallisInf::step(std::span<const double> losses, const RngStream& rng) {
  return step(losses, rng.uniform(t_, Purpose::kArmSampling));
}

}  // namespace tsallis_lab
