#include "tsallis_lab/ftrl.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"

namespace tsallis_lab {
namespace {

std::vector<double> random_losses(std::mt19937_64& gen, std::size_t d) {
  std::uniform_real_distribution<double> scale_pick(0.0, 4.0);
  const double scale = std::pow(10.0, scale_pick(gen) - 1.0);
  std::uniform_real_distribution<double> u(0.0, scale);
  std::vector<double> v(d);
  for (double& x : v) x = u(gen);
  return v;
}

TEST(SimplexPointTest, RejectsInvalidPoints) {
  EXPECT_THROW(SimplexPoint({}), std::invalid_argument);
  EXPECT_THROW(SimplexPoint({0.5, 0.6}), std::invalid_argument);
  EXPECT_THROW(SimplexPoint({1.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(SimplexPoint({NAN, 1.0}), std::invalid_argument);
  EXPECT_NO_THROW(SimplexPoint({0.25, 0.75}));
}

TEST(PotentialTest, ClosedFormValues) {
  EXPECT_DOUBLE_EQ(tsallis_potential(SimplexPoint({1.0})), -4.0);
  EXPECT_NEAR(tsallis_potential(SimplexPoint({0.5, 0.5})), -5.656854, 1e-6);
  EXPECT_DOUBLE_EQ(tsallis_potential(SimplexPoint::uniform(4)), -8.0);
}

TEST(PotentialTest, StaysWithinRange) {
  std::mt19937_64 gen(3);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t d = 1 + rep % 9;
    const SimplexPoint p(oracle::random_interior(gen, d));
    const double v = tsallis_potential(p);
    EXPECT_LE(v, -4.0 + 1e-12);
    EXPECT_GE(v, -4.0 * std::sqrt(static_cast<double>(d)) - 1e-12);
  }
}

TEST(PotentialTest, Gradient) {
  EXPECT_EQ(potential_gradient(SimplexPoint({1.0})), std::vector<double>{-2.0});
  const auto g = potential_gradient(SimplexPoint({0.25, 0.75}));
  EXPECT_DOUBLE_EQ(g[0], -4.0);
  EXPECT_NEAR(g[1], -2.309401, 1e-6);
  const auto g9 = potential_gradient(SimplexPoint::uniform(9));
  EXPECT_NEAR(g9[4], -6.0, 1e-12);
}

TEST(BregmanTest, Examples) {
  const SimplexPoint half({0.5, 0.5});
  EXPECT_NEAR(bregman(half.probs(), half), 0.0, 1e-15);
  EXPECT_NEAR(bregman(std::vector<double>{1.0, 0.0}, half), 4.0 * std::sqrt(2.0) - 4.0, 1e-12);
  EXPECT_NEAR(bregman(std::vector<double>{1.0, 0.0, 0.0}, SimplexPoint::uniform(3)),
              4.0 * std::sqrt(3.0) - 4.0, 1e-12);
  EXPECT_NEAR(4.0 * std::sqrt(2.0) - 4.0, 1.656854, 1e-6);
  EXPECT_NEAR(4.0 * std::sqrt(3.0) - 4.0, 2.928203, 1e-6);
}

TEST(BregmanTest, VertexFormAgreesWithGeneralForm) {
  EXPECT_DOUBLE_EQ(bregman_to_vertex(SimplexPoint::unchecked({1.0, 0.0}), 0), 0.0);
  EXPECT_DOUBLE_EQ(bregman_to_vertex(SimplexPoint({1.0}), 0), 0.0);
  EXPECT_NEAR(bregman_to_vertex(SimplexPoint({0.5, 0.5}), 0), 4.0 * std::sqrt(2.0) - 4.0, 1e-12);

  const SimplexPoint p({0.9, 0.1});
  const double general = bregman(std::vector<double>{1.0, 0.0}, p);
  const double direct = oracle::bregman_direct({1.0, 0.0}, {0.9, 0.1});
  EXPECT_NEAR(bregman_to_vertex(p, 0), general, 1e-12);
  EXPECT_NEAR(bregman_to_vertex(p, 0), direct, 1e-12);
  EXPECT_NEAR(bregman_to_vertex(p, 0), 0.6380072349136232, 1e-12);

  std::mt19937_64 gen(11);
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t d = 2 + rep % 8;
    const SimplexPoint q(oracle::random_interior(gen, d));
    const std::size_t star = rep % d;
    std::vector<double> e(d, 0.0);
    e[star] = 1.0;
    // Third route: 2 sum sqrt p + 2 / sqrt p_star - 4.
    double s = 0.0;
    for (double v : q.probs()) s += std::sqrt(v);
    const double alt = 2.0 * s + 2.0 / std::sqrt(q[star]) - 4.0;
    EXPECT_NEAR(bregman_to_vertex(q, star), bregman(e, q), 1e-12);
    EXPECT_NEAR(bregman_to_vertex(q, star), alt, 1e-12);
  }
}

TEST(BregmanTest, NonnegativeAndZeroOnlyOnDiagonal) {
  std::mt19937_64 gen(5);
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t d = 2 + rep % 6;
    const SimplexPoint x(oracle::random_interior(gen, d));
    const SimplexPoint y(oracle::random_interior(gen, d));
    EXPECT_GT(bregman(x.probs(), y), 0.0);
    EXPECT_LT(bregman(y.probs(), y), 1e-14);
  }
}

TEST(UnderlineTest, Examples) {
  const auto shifted = underline(std::vector<double>{3, 5, 4});
  EXPECT_EQ(std::vector<double>(shifted.values().begin(), shifted.values().end()),
            (std::vector<double>{0, 2, 1}));
  const auto zeros = underline(std::vector<double>{0, 0});
  EXPECT_EQ(zeros[0], 0.0);
  EXPECT_EQ(zeros[1], 0.0);
  const auto neg = underline(std::vector<double>{-1.5, 2.5});
  EXPECT_EQ(neg[0], 0.0);
  EXPECT_EQ(neg[1], 4.0);
  EXPECT_THROW(underline(std::vector<double>{}), std::invalid_argument);
  EXPECT_THROW(underline(std::vector<double>{1.0, INFINITY}), std::invalid_argument);
}

TEST(SolveFtrlTest, UniformUnderEqualLosses) {
  const DualSolution s = solve_ftrl(0.5, std::vector<double>{0, 0, 0});
  for (double v : s.point.probs()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-13);
  EXPECT_NEAR(s.nu, 2.0 * std::sqrt(3.0), 1e-12);
}

TEST(SolveFtrlTest, SingleArm) {
  const DualSolution s = solve_ftrl(3.0, std::vector<double>{42.0});
  EXPECT_EQ(s.point[0], 1.0);
  EXPECT_EQ(s.nu, 2.0);
}

TEST(SolveFtrlTest, TwoArmExampleMatchesBothOracles) {
  const DualSolution s = solve_ftrl(1.0, std::vector<double>{0, 1});
  // Independent routes: bisection on the dual, grid search on the primal.
  const double nu = oracle::bisect_nu(1.0, {0, 1});
  const double q = oracle::grid_search_d2(0.0, -1.0);
  EXPECT_NEAR(nu, 2.4533262527190557, 1e-9);
  EXPECT_NEAR(s.nu, nu, 1e-9);
  EXPECT_NEAR(s.point[0], q, 1e-5);
  EXPECT_NEAR(s.point[0], 0.6646, 1e-3);
  EXPECT_NEAR(s.point[1], 0.3354, 1e-3);
  EXPECT_NEAR(s.nu, 2.4533, 1e-3);
}

TEST(SolveFtrlTest, RejectsBadInputs) {
  EXPECT_THROW(solve_ftrl(0.0, std::vector<double>{0, 1}), std::invalid_argument);
  EXPECT_THROW(solve_ftrl(-1.0, std::vector<double>{0, 1}), std::invalid_argument);
  EXPECT_THROW(solve_ftrl(1.0, std::vector<double>{0, NAN}), std::invalid_argument);
  EXPECT_THROW(solve_ftrl(1.0, std::vector<double>{}), std::invalid_argument);
}

TEST(SolveFtrlTest, ReportsNonConvergence) {
  SolverOptions starved;
  starved.max_iterations = 1;
  EXPECT_THROW(solve_ftrl(1.0, std::vector<double>{0, 1, 5}, starved), SolverError);
}

TEST(SolveFtrlTest, NormalizationGradientAndDualRange) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> eta_pick(-3.0, 1.0);
  for (int rep = 0; rep < 2000; ++rep) {
    const std::size_t d = 2 + rep % 9;
    const double eta = std::pow(10.0, eta_pick(gen));
    const auto L = random_losses(gen, d);
    const DualSolution s = solve_ftrl(eta, L);
    double sum = 0.0;
    for (double v : s.point.probs()) {
      EXPECT_GT(v, 0.0);
      sum += v;
    }
    EXPECT_LE(std::abs(sum - 1.0), 1e-10);
    EXPECT_LE(s.residual, 1e-12);
    EXPECT_GE(s.nu, 2.0);
    EXPECT_LE(s.nu, 2.0 * std::sqrt(static_cast<double>(d)) + 1e-12);
    // grad Psi(p) + eta L is a constant vector.
    const auto g = potential_gradient(s.point);
    const double c0 = g[0] + eta * L[0];
    for (std::size_t i = 1; i < d; ++i) EXPECT_NEAR(g[i] + eta * L[i], c0, 1e-8);
  }
}

TEST(SolveFtrlTest, Sandwich) {
  std::mt19937_64 gen(23);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t d = 2 + rep % 9;
    const double eta = 0.5 / std::sqrt(1.0 + rep);
    const auto L = random_losses(gen, d);
    const DualSolution s = solve_ftrl(eta, L);
    const double lowest = *std::min_element(L.begin(), L.end());
    const double root_d = std::sqrt(static_cast<double>(d));
    double max_p = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double x = eta * (L[i] - lowest);
      EXPECT_GE(s.point[i], 4.0 / ((x + 2 * root_d) * (x + 2 * root_d)) - 1e-12);
      if (x > 0) EXPECT_LE(s.point[i], 4.0 / (x * x) + 1e-12);
      max_p = std::max(max_p, s.point[i]);
    }
    const auto leader = static_cast<std::size_t>(std::min_element(L.begin(), L.end()) - L.begin());
    EXPECT_EQ(s.point[leader], max_p);
    EXPECT_GE(s.point[leader], 1.0 / static_cast<double>(d) - 1e-12);
  }
}

TEST(SolveFtrlTest, ShiftInvariance) {
  std::mt19937_64 gen(29);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t d = 2 + rep % 9;
    const double eta = 0.1 + 0.9 * (rep % 7) / 7.0;
    const auto L = random_losses(gen, d);
    const DualSolution base = solve_ftrl(eta, L);
    for (double a : {-5.0, 3.7}) {
      std::vector<double> shifted = L;
      for (double& v : shifted) v += a;
      const DualSolution s = solve_ftrl(eta, shifted);
      for (std::size_t i = 0; i < d; ++i) EXPECT_NEAR(s.point[i], base.point[i], 1e-9);
    }
  }
}

TEST(SolveFtrlTest, Monotonicity) {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> delta_pick(0.01, 5.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t d = 2 + rep % 9;
    const auto L = random_losses(gen, d);
    const std::size_t i = rep % d;
    std::vector<double> bumped = L;
    bumped[i] += delta_pick(gen);
    const DualSolution a = solve_ftrl(0.3, L);
    const DualSolution b = solve_ftrl(0.3, bumped);
    EXPECT_LT(b.point[i], a.point[i]);
    for (std::size_t j = 0; j < d; ++j) {
      if (j != i) EXPECT_GE(b.point[j], a.point[j] - 1e-10);
    }
  }
}

TEST(SolveFtrlTest, LearningRateContinuity) {
  std::mt19937_64 gen(37);
  std::uniform_int_distribution<int> t_pick(1, 10000);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t d = 2 + rep % 9;
    const double alpha = 0.5;
    const auto t = static_cast<double>(t_pick(gen));
    const auto lambda = random_losses(gen, d);  // lambda >= 0
    // phi(eta lambda) = argmin eta <p, -lambda> + Psi(p).
    std::vector<double> neg(lambda);
    for (double& v : neg) v = -v;
    const DualSolution now = solve_ftrl(alpha / std::sqrt(t), neg);
    const DualSolution next = solve_ftrl(alpha / std::sqrt(t + 1.0), neg);
    for (std::size_t i = 0; i < d; ++i) EXPECT_LE(next.point[i] - now.point[i], 1.0 / t + 1e-9);
  }
}

TEST(SolveFtrlTest, UpdateContinuity) {
  std::mt19937_64 gen(41);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t d = 2 + rep % 9;
    const auto lambda = random_losses(gen, d);
    const std::size_t j = rep % d;
    // phi(-lambda) = solve_ftrl(1, lambda).
    const DualSolution base = solve_ftrl(1.0, lambda);
    std::vector<double> bumped = lambda;
    bumped[j] += 1.0 / base.point[j];
    const DualSolution after = solve_ftrl(1.0, bumped);
    for (std::size_t i = 0; i < d; ++i) {
      EXPECT_LE(after.point[i] / base.point[i], 7.0 * static_cast<double>(d) + 1e-6);
    }
  }
}

TEST(SolveFtrlTest, GeneralizedPythagoras) {
  std::mt19937_64 gen(43);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t d = 2 + rep % 9;
    const SimplexPoint x(oracle::random_interior(gen, d));
    const SimplexPoint y(oracle::random_interior(gen, d));
    const SimplexPoint z(oracle::random_interior(gen, d));
    const auto gx = potential_gradient(x);
    const auto gy = potential_gradient(y);
    double rhs = 0.0;
    for (std::size_t i = 0; i < d; ++i) rhs += (gx[i] - gy[i]) * (x[i] - z[i]);
    const double lhs = bregman(x.probs(), y) + bregman(z.probs(), x) - bregman(z.probs(), y);
    EXPECT_NEAR(lhs, rhs, 1e-9);
  }
}

TEST(SolveFtrlTest, MatchesGridSearchForTwoArms) {
  std::mt19937_64 gen(47);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int rep = 0; rep < 5; ++rep) {
    const double l1 = u(gen);
    const double l2 = u(gen);
    const DualSolution s = solve_ftrl(1.0, std::vector<double>{-l1, -l2});
    EXPECT_NEAR(s.point[0], oracle::grid_search_d2(l1, l2), 1e-4);
  }
}

TEST(SolveFtrlTest, HandlesExtremeScales) {
  const DualSolution big = solve_ftrl(1.0, std::vector<double>{0.0, 1e12, 1e12});
  EXPECT_NEAR(big.point[0], 1.0, 1e-10);
  const DualSolution tiny = solve_ftrl(1e-12, std::vector<double>{0.0, 1.0, 2.0});
  for (double v : tiny.point.probs()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-10);
}

}  // namespace
}  // namespace tsallis_lab
