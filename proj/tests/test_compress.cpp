#include <gtest/gtest.h>

#include <cmath>

#include "invflag/compress.hpp"
#include "test_util.hpp"

using namespace invflag;
using invflag::testing::random_contraction;
using invflag::testing::random_matrix;

namespace {

CMatrix upper_triangular(std::uint64_t seed, std::size_t n) {
  CMatrix t = random_matrix(seed, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) t(i, j) = 0.0;
  return t * (1.0 / svd(t).singular_values.front());
}

double spectral_norm(const CMatrix& t) { return svd(t).singular_values.front(); }

}  // namespace

TEST(SpectralTruncate, DiagonalExample) {
  const CMatrix t = CMatrix::diagonal({0.1, 0.5});
  const auto p = spectral_truncate(t, 0.2);
  EXPECT_EQ(p.rank, 1u);
  EXPECT_NEAR(std::abs(p.matrix(0, 0)), 1.0, 1e-14);
  EXPECT_NEAR(spectral_norm(t * p.matrix), 0.1, 1e-14);
}

TEST(SpectralTruncate, ZeroOperatorKeepsEverything) {
  const auto p = spectral_truncate(CMatrix(4), 0.3);
  EXPECT_EQ(p.rank, 4u);
}

TEST(SpectralTruncate, TraceBoundOnRandomInstances) {
  Philox rng(2024);
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 30);
    CMatrix t = random_matrix(i, n, 5);
    const double delta = 0.05 + 0.5 * rng.uniform();
    t *= 0.999 * delta / trace_norm2(t);
    const double eps = 2.0 * delta;
    const auto p = spectral_truncate(t, eps);
    EXPECT_LE(spectral_norm(t * p.matrix), eps * (1 + 1e-12));
    EXPECT_LT(static_cast<double>(n - p.rank) / n, 0.25) << "instance " << i;
    EXPECT_LT(static_cast<double>(n - p.rank) / n, delta * delta / (eps * eps));
  }
}

TEST(SpectralTruncate, RejectsNonPositiveEps) {
  EXPECT_THROW(spectral_truncate(CMatrix(2), 0.0), InvalidArgument);
}

TEST(Schedule, StrictBoundsAndTotalBudget) {
  for (double eps : {3.0, 0.1, 0.05, 1e-4}) {
    const auto s = ParameterSchedule::make(eps, 6);
    EXPECT_TRUE(s.valid());
    for (std::size_t k = 0; k < 6; ++k) {
      EXPECT_GT(s.slack(k), 0.0);
      EXPECT_DOUBLE_EQ(s.stage_budgets[k], eps / std::pow(2.0, k + 1));
    }
  }
}

TEST(HalfStep, TriangularInputIsUntouched) {
  const CMatrix t = upper_triangular(1, 6);
  const auto step = half_step(t, 0.1, schur_supplier());
  EXPECT_EQ(step.perturbation, 0.0);
  EXPECT_EQ(step.rescale_factor, 1.0);
  EXPECT_EQ(step.truncated_trace, Rational(0, 1));
  EXPECT_EQ(step.half_projection().rank, 3u);
}

TEST(HalfStep, TwoByTwoCornerRemoved) {
  const double eta = 0.01;
  const CMatrix t = CMatrix::from_rows({{0.0, 0.0}, {eta, 0.0}});
  CMatrix e1(2, 1);
  e1(0, 0) = 1.0;
  const auto step = half_step(t, 0.5, fixed_frame_supplier(e1));
  EXPECT_EQ(step.output(1, 0), Complex(0.0, 0.0));
  EXPECT_NEAR(step.supplier_defect, eta / std::sqrt(2.0), 1e-15);
  EXPECT_LE(step.perturbation, eta / std::sqrt(2.0) + 1e-15);
  EXPECT_LT(step.perturbation, 0.5);
}

TEST(HalfStep, RandomSixteenWithSchurSupplier) {
  const CMatrix t = random_contraction(3, 16);
  const auto step = half_step(t, 0.1, schur_supplier());
  EXPECT_LT(step.perturbation, 0.1);
  EXPECT_LE(spectral_norm(step.output), 1.0 + 1e-12);
  EXPECT_LE(invariance_defect(step.output, step.half_projection().matrix), 1e-10);
  EXPECT_NEAR(trace_norm2(step.output - step.input), step.perturbation, 1e-12);
  EXPECT_GE(step.rescale_factor, 1.0 / (1.0 + step.eps1));
  EXPECT_LE(trace_norm2(step.output - step.pre_rescale),
            (1.0 - step.rescale_factor) * trace_norm2(step.pre_rescale) + 1e-12);
}

TEST(HalfStep, InfeasibleSupplierIsReported) {
  const CMatrix t = CMatrix::from_rows({{0.0, 0.0}, {0.9, 0.0}});
  CMatrix e1(2, 1);
  e1(0, 0) = 1.0;
  try {
    half_step(t, 0.1, fixed_frame_supplier(e1));
    FAIL() << "expected ContractViolation";
  } catch (const ContractViolation& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("stage 0, block 0"), std::string::npos) << msg;
    EXPECT_NE(msg.find("delta"), std::string::npos) << msg;
  }
}

TEST(HalfStep, TruncationPathWithApproximateFrame) {
  // A nearly invariant frame: the corner is small but not zero, so columns
  // above eps1 may be dropped and the remainder zeroed.
  const std::size_t n = 8;
  CMatrix t = random_contraction(11, n);
  const auto s = schur(t);
  Philox rng(4);
  CMatrix frame = s.q.columns(0, n / 2) + ginibre_sample(rng, n, n / 2) * 1e-5;
  frame = orthonormalize(frame);
  const auto step = half_step(t, 0.5, fixed_frame_supplier(frame));
  EXPECT_LT(step.perturbation, 0.5);
  EXPECT_GT(step.supplier_defect, 0.0);
  EXPECT_LE(invariance_defect(step.output, step.half_projection().matrix), 1e-10);
}

TEST(DyadicCompress, TriangularInputIsFixed) {
  const CMatrix t = upper_triangular(5, 8);
  const auto r = dyadic_compress(t, 0.01, 2);
  EXPECT_EQ(r.result, t);
  EXPECT_EQ(r.total_perturbation, 0.0);
  EXPECT_EQ(r.flag_report.max_residual, 0.0);
}

TEST(DyadicCompress, LargeBudget) {
  const auto r = dyadic_compress(random_contraction(6, 8), 3.0, 2);
  EXPECT_LT(r.total_perturbation, 3.0);
}

TEST(DyadicCompress, RandomEightLevelTwo) {
  const CMatrix t = random_contraction(7, 8);
  const auto r = dyadic_compress(t, 0.05, 2);
  EXPECT_LT(r.total_perturbation, 0.05);
  EXPECT_LE(spectral_norm(r.result), 1.0 + 1e-12);
  EXPECT_LE(r.flag_report.max_residual, 1e-9);
  ASSERT_EQ(r.flag_report.flag.trace_targets.size(), 5u);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(r.flag_report.flag.projections[j].rank, 2 * j);
  double sum = 0.0;
  for (const auto& s : r.steps) sum += s.perturbation;
  EXPECT_LE(r.total_perturbation, sum + 1e-10);
}

TEST(DyadicCompress, OddDimensionsUseFloorBoundaries) {
  const auto r = dyadic_compress(random_contraction(8, 11), 0.1, 2);
  const std::size_t want[] = {0, 2, 5, 8, 11};
  for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(r.flag_report.flag.projections[j].rank, want[j]);
}

TEST(DyadicCompress, GrassmannSupplier) {
  const auto r = dyadic_compress(random_contraction(9, 8), 0.1, 2, grassmann_supplier());
  EXPECT_LT(r.total_perturbation, 0.1);
  EXPECT_LE(r.flag_report.max_residual, 1e-9);
}

TEST(DyadicCompress, DeterministicAndBudgetMonotone) {
  const CMatrix t = random_contraction(10, 16);
  const auto a = dyadic_compress(t, 0.1, 3);
  const auto b = dyadic_compress(t, 0.1, 3);
  EXPECT_EQ(a.result, b.result);
  const auto c = dyadic_compress(t, 0.05, 3);
  EXPECT_LE(c.flag_report.max_residual, 1e-9);
  EXPECT_LE(c.total_perturbation, 0.05);
}

TEST(DyadicCompress, RejectsBadArguments) {
  const CMatrix t = random_contraction(1, 4);
  EXPECT_THROW(dyadic_compress(t, 0.0, 1), InvalidArgument);
  EXPECT_THROW(dyadic_compress(t, 0.1, 0), InvalidArgument);
  EXPECT_THROW(dyadic_compress(t, 0.1, 3), InvalidArgument);
  EXPECT_THROW(dyadic_compress(t * 2.0, 0.1, 1), InvalidArgument);
}

TEST(Membership, CompressedOutputIdentityAndGinibre) {
  const auto r = dyadic_compress(random_contraction(12, 8), 0.1, 2);
  EXPECT_TRUE(membership_check(r.result, 2).certified());
  EXPECT_TRUE(membership_check(CMatrix::identity(4), 2).certified());
  EXPECT_TRUE(membership_check(random_matrix(13, 16), 3).certified());
}
