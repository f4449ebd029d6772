#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "invflag/matrix.hpp"
#include "invflag/projection.hpp"
#include "invflag/random.hpp"
#include "invflag/schur.hpp"
#include "invflag/svd.hpp"
#include "test_util.hpp"

using namespace invflag;
using invflag::testing::jordan_block;
using invflag::testing::random_matrix;
using invflag::testing::random_unitary;

namespace {

Eigen::MatrixXcd to_eigen(const CMatrix& a) {
  Eigen::MatrixXcd m(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) m(i, j) = a(i, j);
  return m;
}

}  // namespace

TEST(Philox, KnownAnswerZeroKeyZeroCounter) {
  // Random123 known-answer vector for philox4x32-10.
  const Philox rng(0);
  const auto b = rng.block(0);
  EXPECT_EQ(b[0], 0x6627e8d5u);
  EXPECT_EQ(b[1], 0xe169c58du);
  EXPECT_EQ(b[2], 0xbc57ac4cu);
  EXPECT_EQ(b[3], 0x9b00dbd8u);
}

TEST(Philox, StreamsAreReproducibleAndDistinct) {
  Philox a(42, 3), b(42, 3), c(42, 4);
  for (int i = 0; i < 16; ++i) {
    const auto x = a.next_u32();
    EXPECT_EQ(x, b.next_u32());
    (void)c;
  }
  EXPECT_NE(Philox(42, 3).block(0), Philox(42, 4).block(0));
}

TEST(NormalizedTrace, Examples) {
  EXPECT_EQ(normalized_trace(CMatrix::identity(4)), Complex(1.0));
  EXPECT_DOUBLE_EQ(normalized_trace(CMatrix::diagonal({1.0, 2.0, 3.0})).real(), 2.0);
  EXPECT_EQ(normalized_trace(jordan_block(2)), Complex(0.0));
}

TEST(NormalizedTrace, IsLinear) {
  const auto a = random_matrix(1, 7), b = random_matrix(2, 7);
  const Complex s(0.3, -1.2);
  const Complex lhs = normalized_trace(a + s * b);
  const Complex rhs = normalized_trace(a) + s * normalized_trace(b);
  EXPECT_NEAR(std::abs(lhs - rhs), 0.0, 1e-14);
}

TEST(TraceNorm2, Examples) {
  EXPECT_DOUBLE_EQ(trace_norm2(CMatrix::identity(5)), 1.0);
  EXPECT_NEAR(trace_norm2(jordan_block(2)), 0.70710678118654752, 1e-15);
  EXPECT_NEAR(trace_norm2(CMatrix::diagonal({0.1, 0.5})), std::sqrt(0.13), 1e-15);
}

TEST(OperatorNorm, Examples) {
  EXPECT_NEAR(operator_norm(CMatrix::diagonal({0.1, 0.5})), 0.5, 1e-15);
  EXPECT_NEAR(operator_norm(jordan_block(2)), 1.0, 1e-15);
  EXPECT_EQ(operator_norm(CMatrix(3)), 0.0);
  const auto t = random_matrix(8, 8);
  const double s1 = svd(t).singular_values.front();
  EXPECT_NEAR(operator_norm(t) / s1, 1.0, 1e-9);
}

TEST(OperatorNorm, AgreesWithSvdOnThousandRandomMatrices) {
  Philox dims(2024);
  for (std::uint64_t k = 0; k < 1000; ++k) {
    const std::size_t n = 2 + static_cast<std::size_t>(dims.next_u32() % 63);
    const auto t = random_matrix(9000 + k, n);
    const double s1 = svd(t).singular_values.front();
    const double p = operator_norm(t);
    ASSERT_LE(std::abs(p - s1), 1e-9 * s1) << "n=" << n << " seed=" << 9000 + k;
  }
}

TEST(Schur, UpperTriangularIsUntouched) {
  auto t = random_matrix(3, 6);
  for (std::size_t i = 1; i < 6; ++i)
    for (std::size_t j = 0; j < i; ++j) t(i, j) = 0.0;
  const auto s = schur(t);
  EXPECT_EQ(s.q, CMatrix::identity(6));
  EXPECT_EQ(s.u, t);
}

TEST(Schur, HermitianGivesRealDiagonal) {
  const auto a = random_matrix(4, 12);
  const auto h = a + a.adjoint();
  const auto s = schur(h);
  double off = 0.0;
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = i + 1; j < 12; ++j) off = std::max(off, std::abs(s.u(i, j)));
  EXPECT_LE(off, 1e-10);
  for (const auto& e : s.eigenvalues) EXPECT_LE(std::abs(e.imag()), 1e-10);
}

TEST(Schur, ResidualContractsAcrossSizes) {
  for (std::size_t n : {1u, 2u, 3u, 5u, 8u, 16u, 32u, 64u}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto t = random_matrix(100 + seed, n);
      const auto s = schur(t);
      const auto r = schur_residuals(t, s);
      const double nd = static_cast<double>(n);
      EXPECT_LE(r.unitarity, 1e-12 * nd) << n;
      EXPECT_LE(r.lower, 1e-12 * frobenius_norm(s.u)) << n;
      EXPECT_LE(r.reconstruction, 1e-10 * std::max(1.0, frobenius_norm(t))) << n;
    }
  }
}

TEST(Schur, StructuredInputs) {
  for (std::size_t n : {2u, 5u, 9u}) {
    const auto j = jordan_block(n);
    const auto r = schur_residuals(j, schur(j));
    EXPECT_LE(r.reconstruction, 1e-12);
    const auto u = random_unitary(77, n);
    const auto ru = schur_residuals(u, schur(u));
    EXPECT_LE(ru.reconstruction, 1e-10);
    EXPECT_LE(ru.lower, 1e-12 * frobenius_norm(u));
  }
  // Companion matrix of z^6 - 1: eigenvalues on the unit circle.
  CMatrix c(6);
  for (std::size_t i = 1; i < 6; ++i) c(i, i - 1) = 1.0;
  c(0, 5) = 1.0;
  const auto s = schur(c);
  EXPECT_LE(schur_residuals(c, s).reconstruction, 1e-10);
  for (const auto& e : s.eigenvalues) EXPECT_NEAR(std::abs(e), 1.0, 1e-10);
}

TEST(Schur, EigenvaluesMatchEigenOracle) {
  const auto t = random_matrix(5, 16);
  const auto s = schur(t);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(to_eigen(t));
  std::vector<Complex> ours = s.eigenvalues;
  std::vector<Complex> theirs(es.eigenvalues().data(), es.eigenvalues().data() + 16);
  for (const auto& z : theirs) {
    const auto it = std::min_element(ours.begin(), ours.end(), [&](const Complex& a, const Complex& b) {
      return std::abs(a - z) < std::abs(b - z);
    });
    EXPECT_LE(std::abs(*it - z), 1e-10);
    ours.erase(it);
  }
}

TEST(Schur, BudgetExhaustionNamesMatrix) {
  const auto t = random_matrix(6, 5);
  try {
    (void)schur(t, 0);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_NE(std::string(e.what()).find(hash_hex(matrix_hash(t))), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("0 sweeps"), std::string::npos);
  }
}

TEST(Svd, Examples) {
  const auto d = svd(CMatrix::diagonal({0.5, -0.1}));
  EXPECT_NEAR(d.singular_values[0], 0.5, 1e-16);
  EXPECT_NEAR(d.singular_values[1], 0.1, 1e-16);

  Philox rng(11);
  CMatrix v = ginibre_sample(rng, 5, 1);
  v *= 1.0 / frobenius_norm(v);
  const auto r1 = svd(times_adjoint(v, v));
  EXPECT_NEAR(r1.singular_values[0], 1.0, 1e-14);
  for (std::size_t i = 1; i < 5; ++i) EXPECT_NEAR(r1.singular_values[i], 0.0, 1e-14);

  const auto t = random_matrix(12, 16);
  const auto d16 = svd(t);
  EXPECT_LE(unitarity_residual(d16.left), 1e-12 * 16);
  EXPECT_LE(unitarity_residual(d16.right), 1e-12 * 16);
  EXPECT_LE(svd_reconstruction_residual(t, d16), 1e-10 * std::max(1.0, frobenius_norm(t)));
}

TEST(Svd, RankDeficientAndZeroInputs) {
  for (std::size_t n : {1u, 4u, 9u, 20u}) {
    const auto z = svd(CMatrix(n));
    EXPECT_LE(unitarity_residual(z.left), 1e-12 * n);
    for (double s : z.singular_values) EXPECT_EQ(s, 0.0);
    Philox rng(n);
    const auto a = ginibre_sample(rng, n, (n + 1) / 2);
    const auto b = ginibre_sample(rng, n, (n + 1) / 2);
    const auto t = times_adjoint(a, b);
    const auto d = svd(t);
    EXPECT_LE(unitarity_residual(d.left), 1e-12 * n);
    EXPECT_LE(svd_reconstruction_residual(t, d), 1e-10 * std::max(1.0, frobenius_norm(t)));
    EXPECT_TRUE(std::is_sorted(d.singular_values.rbegin(), d.singular_values.rend()));
  }
}

TEST(Svd, SingularValuesMatchEigenOracle) {
  for (std::size_t n : {3u, 10u, 31u}) {
    const auto t = random_matrix(13 + n, n);
    const auto d = svd(t);
    Eigen::JacobiSVD<Eigen::MatrixXcd> es(to_eigen(t));
    for (std::size_t i = 0; i < n; ++i)
      EXPECT_NEAR(d.singular_values[i], es.singularValues()(static_cast<Eigen::Index>(i)), 1e-12);
  }
}

TEST(TraceNorm2, MatchesSingularValues) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const std::size_t n = 2 + seed % 30;
    const auto t = random_matrix(300 + seed, n);
    const auto d = svd(t);
    const double s2 = std::accumulate(d.singular_values.begin(), d.singular_values.end(), 0.0,
                                      [](double a, double s) { return a + s * s; });
    const double tn = trace_norm2(t);
    EXPECT_NEAR(tn * tn, s2 / static_cast<double>(n), 1e-10 * tn * tn);
  }
}

TEST(TraceNorm2, UnitarilyInvariant) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t n = 2 + seed;
    const auto t = random_matrix(400 + seed, n);
    const auto u = random_unitary(500 + seed, n);
    const auto v = random_unitary(600 + seed, n);
    EXPECT_NEAR(trace_norm2(u * t * v), trace_norm2(t), 1e-10);
  }
}

TEST(RangeKernel, Examples) {
  const auto d10 = CMatrix::diagonal({1.0, 0.0});
  const auto r = range_projection(d10, kDefaultRankTol);
  EXPECT_EQ(r.rank, 1u);
  EXPECT_LE(frobenius_norm(r.matrix - d10), 1e-15);
  const auto k = kernel_projection(d10, kDefaultRankTol);
  EXPECT_EQ(k.rank, 1u);
  EXPECT_LE(frobenius_norm(k.matrix - CMatrix::diagonal({0.0, 1.0})), 1e-15);

  const auto t = random_matrix(21, 6);
  EXPECT_EQ(range_projection(t).rank, 6u);
  EXPECT_LE(frobenius_norm(range_projection(t).matrix - CMatrix::identity(6)), 1e-12);
  EXPECT_EQ(kernel_projection(t).rank, 0u);
  EXPECT_EQ(kernel_projection(t).trace_value, Rational(0, 1));

  const auto j = jordan_block(2);
  const auto e1 = CMatrix::diagonal({1.0, 0.0});
  EXPECT_EQ(range_projection(j).rank, 1u);
  EXPECT_LE(frobenius_norm(range_projection(j).matrix - e1), 1e-15);
  EXPECT_EQ(kernel_projection(j).rank, 1u);
  EXPECT_LE(frobenius_norm(kernel_projection(j).matrix - e1), 1e-15);

  EXPECT_EQ(range_projection(CMatrix(4)).rank, 0u);
  EXPECT_EQ(kernel_projection(CMatrix(4)).rank, 4u);
  EXPECT_THROW((void)range_projection(t, 0.0), InvalidArgument);
}

TEST(RangeKernel, RanksAlwaysSumToDimension) {
  Philox rng(31);
  for (std::uint64_t k = 0; k < 200; ++k) {
    const std::size_t n = 2 + rng.next_u32() % 12;
    const std::size_t r = rng.next_u32() % (n + 1);
    const auto a = ginibre_sample(rng, n, std::max<std::size_t>(r, 1));
    const auto b = ginibre_sample(rng, n, std::max<std::size_t>(r, 1));
    const CMatrix t = r == 0 ? CMatrix(n) : times_adjoint(a, b);
    const auto [range, kernel] = range_and_kernel(t);
    EXPECT_EQ(range.rank + kernel.rank, n);
    EXPECT_EQ(range.rank, r);
    EXPECT_EQ(range.trace_value + kernel.trace_value, Rational(1, 1));
    const auto dr = projection_defects(range.matrix);
    EXPECT_LE(dr.idempotency, 1e-10);
    EXPECT_LE(dr.symmetry, 1e-10);
  }
}

TEST(Matrix, RejectsNonFiniteEntries) {
  EXPECT_THROW((void)CMatrix::from_rows({{1.0, std::nan("")}, {0.0, 1.0}}), InvalidArgument);
  CMatrix m(2);
  m(0, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW((void)schur(m), InvalidArgument);
}
