#pragma once

// FTRL over the probability simplex with the 1/2-Tsallis regularizer
//   Psi(p) = -4 * sum_i sqrt(p_i).
//
// The minimizer of eta * <p, L> + Psi(p) has the closed form
//   p_i = 4 * (eta * (L_i - min_j L_j) + nu)^-2
// where nu is the unique root in [2, 2 sqrt(d)] of sum_i p_i = 1.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsallis_lab {

/// Thrown when the dual root-finder fails to reach its tolerance.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Strictly positive probability vector over d >= 1 arms.
class SimplexPoint {
 public:
  static constexpr double kSumTolerance = 1e-10;

  /// Validates positivity, finiteness and |sum - 1| <= kSumTolerance.
  /// Throws std::invalid_argument otherwise.
  explicit SimplexPoint(std::vector<double> probs);

  static SimplexPoint uniform(std::size_t d);

  /// Builds a point without validation. Used for perturbed iterates (fault
  /// injection) and by the solver, whose output is normalized by contract.
  static SimplexPoint unchecked(std::vector<double> probs);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }
  const std::vector<double>& vector() const { return probs_; }

 private:
  struct Unchecked {};
  SimplexPoint(std::vector<double> probs, Unchecked) : probs_(std::move(probs)) {}

  std::vector<double> probs_;
};

/// Learning-rate-scaled cumulative losses after the underline reduction:
/// every entry finite and >= 0, the minimum exactly 0.
class ScaledLosses {
 public:
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

 private:
  friend ScaledLosses underline(std::span<const double> values);
  explicit ScaledLosses(std::vector<double> values) : values_(std::move(values)) {}

  std::vector<double> values_;
};

struct DualSolution {
  SimplexPoint point;
  double nu = 2.0;        // in [2, 2 sqrt(d)]
  double residual = 0.0;  // |sum p - 1| at termination
  int iterations = 0;
};

/// values - min(values) * 1. Throws std::invalid_argument on empty or
/// non-finite input.
ScaledLosses underline(std::span<const double> values);

/// Psi(p) = -4 sum sqrt(p_i). Accepts closed-simplex points (zeros allowed).
double tsallis_potential(std::span<const double> p);
inline double tsallis_potential(const SimplexPoint& p) { return tsallis_potential(p.probs()); }

/// Component i is -2 / sqrt(p_i).
std::vector<double> potential_gradient(const SimplexPoint& p);

/// D(x, y) = Psi(x) - Psi(y) - <x - y, grad Psi(y)>.
/// x may lie on the boundary of the simplex; y must be interior.
double bregman(std::span<const double> x, const SimplexPoint& y);

/// D(e_star, p) = 2 sum_{i != star} sqrt(p_i) + 2 (1 - sqrt(p_star))^2 / sqrt(p_star).
double bregman_to_vertex(const SimplexPoint& p, std::size_t star);

struct SolverOptions {
  double tolerance = 1e-12;  // on |sum p - 1|
  int max_iterations = 100;
};

/// argmin_{p in simplex} eta <p, cumulative> + Psi(p).
///
/// Safeguarded Newton on g(nu) = sum 4 (x_i + nu)^-2 - 1 over the bracket
/// [2, 2 sqrt(d)], where x = eta * underline(cumulative). A Newton step that
/// leaves the current bracket is replaced by bisection.
///
/// Throws std::invalid_argument for eta <= 0 or non-finite input, and
/// SolverError if the residual is above tolerance after max_iterations.
DualSolution solve_ftrl(double eta, std::span<const double> cumulative,
                        const SolverOptions& options = {});

}  // namespace tsallis_lab
