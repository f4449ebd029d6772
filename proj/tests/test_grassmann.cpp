#include <gtest/gtest.h>

#include <cmath>

#include "invflag/grassmann.hpp"
#include "invflag/schur.hpp"
#include "test_util.hpp"

using namespace invflag;
using invflag::testing::jordan_block;
using invflag::testing::random_matrix;
using invflag::testing::random_unitary;

namespace {

CMatrix normalized(const CMatrix& t) { return t * (1.0 / operator_norm(t)); }

OptimizerConfig quick(std::uint64_t seed, std::size_t restarts = 8) {
  OptimizerConfig c;
  c.seed = seed;
  c.restarts = restarts;
  return c;
}

}  // namespace

TEST(Grassmann, JordanTwoClosedForm) {
  // For P = v v^*, v = (cos t, e^{ip} sin t): ||[J, P]||_F^2 = 2a^2 - 2a + 1, a = cos^2 t.
  const CMatrix j = jordan_block(2);
  for (double th : {0.0, 0.3, 0.7854, 1.2}) {
    CMatrix v(2, 1);
    v(0, 0) = std::cos(th);
    v(1, 0) = std::polar(std::sin(th), 0.4);
    const double a = std::cos(th) * std::cos(th);
    const double got = objective_value(j, OrthoProjection::from_frame(v), Objective::commutator);
    EXPECT_NEAR(got, std::sqrt((2 * a * a - 2 * a + 1) / 2.0), 1e-14);
  }
}

TEST(Grassmann, JordanTwoBruteForceMatchesOptimizer) {
  const CMatrix j = jordan_block(2);
  const double bf = brute_force_distance(j, 1, Objective::commutator, 2000);
  EXPECT_NEAR(bf, 0.5, 1e-3);
  const auto r = minimize(j, 1, Objective::commutator, quick(1));
  EXPECT_NEAR(r.best_value, 0.5, 1e-6);
}

TEST(Grassmann, BruteForceAgreesForThreeByThree) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const CMatrix t = normalized(random_matrix(seed, 3, 11));
    for (auto kind : {Objective::commutator, Objective::invariance})
      for (std::size_t k : {1u, 2u}) {
        const double bf = brute_force_distance(t, k, kind, 40);
        const auto r = minimize(t, k, kind, quick(seed));
        // Grid overestimates; the optimizer may only beat it slightly.
        EXPECT_LE(r.best_value, bf + 1e-9) << "seed " << seed << " k " << k;
        EXPECT_GE(r.best_value, bf - 0.1) << "seed " << seed << " k " << k;
      }
  }
}

TEST(Grassmann, BruteForceRefusesLargeN) {
  EXPECT_THROW(brute_force_distance(CMatrix::identity(4), 1, Objective::commutator, 10), InvalidArgument);
}

TEST(Grassmann, DiagonalizableHasZeroCommutatorDistance) {
  const CMatrix u = random_unitary(5, 8);
  const auto r = minimize(u, 3, Objective::commutator, quick(5, 4));
  EXPECT_LE(r.best_value, 1e-6);
}

TEST(Grassmann, InvarianceDistanceZeroForSchurSpan) {
  const CMatrix t = normalized(random_matrix(2, 10));
  const auto r = minimize(t, 4, Objective::invariance, quick(2, 4));
  EXPECT_LE(r.best_value, 1e-6);
}

TEST(Grassmann, JordanUpperBoundDominates) {
  for (std::size_t n : {4u, 8u, 16u}) {
    const auto r = minimize(jordan_block(n), n / 2, Objective::commutator, quick(n, 4));
    EXPECT_LE(r.best_value, jordan_upper_bound(n) + 1e-9) << "n " << n;
  }
}

TEST(Grassmann, GradientCheckPasses) {
  for (auto kind : {Objective::commutator, Objective::invariance}) {
    const auto g = check_gradient(random_matrix(3, 12), 5, kind, 3);
    EXPECT_EQ(g.points, 10u);
    EXPECT_LE(g.max_relative_error, 1e-6);
  }
}

TEST(Grassmann, DeterministicForFixedSeed) {
  const CMatrix t = normalized(random_matrix(4, 6));
  const auto a = minimize(t, 2, Objective::commutator, quick(17, 3));
  const auto b = minimize(t, 2, Objective::commutator, quick(17, 3));
  EXPECT_EQ(a.best_value, b.best_value);
  EXPECT_EQ(a.best_projection.matrix, b.best_projection.matrix);
  ASSERT_EQ(a.trace.size(), 3u);
}

TEST(Grassmann, BestValueIsRecomputed) {
  const CMatrix t = normalized(random_matrix(8, 6));
  const auto r = minimize(t, 3, Objective::invariance, quick(8, 2));
  EXPECT_NEAR(r.best_value, objective_value(t, r.best_projection, Objective::invariance), 1e-10);
  EXPECT_EQ(r.best_projection.rank, 3u);
}

TEST(Grassmann, RejectsBadConfig) {
  const CMatrix t = random_matrix(1, 4);
  OptimizerConfig c;
  c.max_iterations = 0;
  EXPECT_THROW(minimize(t, 2, Objective::commutator, c), InvalidArgument);
  EXPECT_THROW(minimize(t, 0, Objective::commutator), InvalidArgument);
  EXPECT_THROW(minimize(t, 4, Objective::commutator), InvalidArgument);
}
