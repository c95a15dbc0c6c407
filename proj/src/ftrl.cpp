#include "tsallis_lab/ftrl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace tsallis_lab {

SimplexPoint::SimplexPoint(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw std::invalid_argument("simplex point needs at least one arm");
  double sum = 0.0;
  for (double v : probs_) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw std::invalid_argument("simplex point entries must be finite and strictly positive");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    std::ostringstream msg;
    msg << "simplex point entries sum to " << sum << ", expected 1";
    throw std::invalid_argument(msg.str());
  }
}

SimplexPoint SimplexPoint::uniform(std::size_t d) {
  if (d == 0) throw std::invalid_argument("simplex point needs at least one arm");
  return SimplexPoint(std::vector<double>(d, 1.0 / static_cast<double>(d)), Unchecked{});
}

SimplexPoint SimplexPoint::unchecked(std::vector<double> probs) {
  return SimplexPoint(std::move(probs), Unchecked{});
}

ScaledLosses underline(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("underline of an empty vector");
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("underline requires finite entries");
  }
  const double lowest = *std::min_element(values.begin(), values.end());
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(),
                 [lowest](double v) { return v - lowest; });
  return ScaledLosses(std::move(out));
}

double tsallis_potential(std::span<const double> p) {
  double s = 0.0;
  for (double v : p) s += std::sqrt(v);
  return -4.0 * s;
}

std::vector<double> potential_gradient(const SimplexPoint& p) {
  std::vector<double> g(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) g[i] = -2.0 / std::sqrt(p[i]);
  return g;
}

double bregman(std::span<const double> x, const SimplexPoint& y) {
  if (x.size() != y.size()) throw std::invalid_argument("bregman: dimension mismatch");
  // Psi(x) - Psi(y) - <x - y, grad Psi(y)>, with grad_i = -2 / sqrt(y_i).
  double value = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double sy = std::sqrt(y[i]);
    value += -4.0 * std::sqrt(x[i]) + 4.0 * sy + 2.0 * (x[i] - y[i]) / sy;
  }
  return std::max(value, 0.0);
}

double bregman_to_vertex(const SimplexPoint& p, std::size_t star) {
  if (star >= p.size()) throw std::invalid_argument("bregman_to_vertex: arm index out of range");
  double off = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i != star) off += std::sqrt(p[i]);
  }
  const double s = std::sqrt(p[star]);
  return 2.0 * off + 2.0 * (1.0 - s) * (1.0 - s) / s;
}

DualSolution solve_ftrl(double eta, std::span<const double> cumulative,
                        const SolverOptions& options) {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw std::invalid_argument("solve_ftrl: learning rate must be positive and finite");
  }
  const ScaledLosses base = underline(cumulative);
  const std::size_t d = base.size();
  if (d == 1) return DualSolution{SimplexPoint::unchecked({1.0}), 2.0, 0.0, 0};

  std::vector<double> x(d);
  for (std::size_t i = 0; i < d; ++i) x[i] = eta * base[i];
  if (std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; })) {
    const double root_d = std::sqrt(static_cast<double>(d));
    return DualSolution{SimplexPoint::unchecked(std::vector<double>(d, 1.0 / static_cast<double>(d))),
                        2.0 * root_d, 0.0, 0};
  }

  // g is convex and strictly decreasing; g(2) >= 0 because some x_i = 0, and
  // g(2 sqrt d) <= 0 because every term is at most 1/d there.
  double lo = 2.0;
  double hi = 2.0 * std::sqrt(static_cast<double>(d));
  double nu = lo;
  double g = 0.0;
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    double sum = 0.0;
    double slope = 0.0;
    for (double xi : x) {
      const double inv = 1.0 / (xi + nu);
      const double inv2 = inv * inv;
      sum += 4.0 * inv2;
      slope -= 8.0 * inv2 * inv;
    }
    g = sum - 1.0;
    if (std::abs(g) <= options.tolerance) {
      // One more Newton step costs nothing and takes g to rounding level.
      const double polished = nu - g / slope;
      if (polished >= lo && polished <= hi) nu = polished;
      break;
    }
    if (g > 0.0) {
      lo = nu;
    } else {
      hi = nu;
    }
    double next = nu - g / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == nu) break;  // bracket exhausted at double resolution
    nu = next;
  }

  std::vector<double> probs(d);
  double total = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double r = x[i] + nu;
    probs[i] = 4.0 / (r * r);
    total += probs[i];
  }
  const double residual = std::abs(total - 1.0);
  if (residual > options.tolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "solve_ftrl: no convergence after " << iter << " iterations (residual " << residual
        << ", eta " << eta << ", nu " << nu << ")";
    throw SolverError(msg.str());
  }
  return DualSolution{SimplexPoint::unchecked(std::move(probs)), nu, residual, iter};
}

}  // namespace tsallis_lab
