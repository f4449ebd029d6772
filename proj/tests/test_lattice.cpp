#include <gtest/gtest.h>

#include <bit>

#include "invflag/lattice.hpp"
#include "test_util.hpp"

using namespace invflag;
using invflag::testing::random_matrix;

namespace {

/// n x n matrix of rank r as a product of random n x r and r x n factors.
CMatrix forced_rank(std::uint64_t seed, std::size_t n, std::size_t r) {
  Philox rng(seed, 77);
  return ginibre_sample(rng, n, r) * ginibre_sample(rng, r, n);
}

}  // namespace

TEST(Lattice, DiagonalTwo) {
  const auto lat = enumerate_lattice(CMatrix::diagonal({1.0, 2.0}));
  ASSERT_EQ(lat.size(), 4u);
  EXPECT_EQ(lat.elements[0].rank, 0u);
  EXPECT_EQ(lat.elements[3].rank, 2u);
  EXPECT_EQ(lat.trace_list[1], Rational(1, 2));
}

TEST(Lattice, DiagonalThree) {
  EXPECT_EQ(enumerate_lattice(CMatrix::diagonal({1.0, 2.0, 3.0})).size(), 8u);
}

TEST(Lattice, RandomFourByFour) {
  const CMatrix t = random_matrix(3, 4);
  const auto lat = enumerate_lattice(t);
  ASSERT_EQ(lat.size(), 16u);
  for (std::size_t i = 0; i < 16; ++i) {
    const auto& e = lat.elements[i].matrix;
    const CMatrix te = t * e;
    EXPECT_LE(frobenius_norm(te - e * te), 1e-8);
    EXPECT_EQ(lat.elements[i].rank, static_cast<std::size_t>(std::popcount(i)));
    for (std::size_t j = 0; j < 16; ++j) {
      EXPECT_EQ(lat.join_table[i][j], i | j);
      EXPECT_EQ(lat.meet_table[i][j], i & j);
    }
  }
}

TEST(Lattice, RepeatedEigenvaluesRefused) {
  try {
    enumerate_lattice(CMatrix::identity(3));
    FAIL() << "expected InvalidArgument";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("gap"), std::string::npos);
  }
}

TEST(RankIdentity, Examples) {
  auto r = rank_identity_check(CMatrix::diagonal({1.0, 0.0}));
  EXPECT_EQ(r.range, Rational(1, 2));
  EXPECT_EQ(r.kernel, Rational(1, 2));
  r = rank_identity_check(random_matrix(1, 5));
  EXPECT_EQ(r.range, Rational(1, 1));
  EXPECT_EQ(r.kernel, Rational(0, 1));
  for (std::size_t n = 2; n <= 9; ++n)
    for (std::size_t k = 0; k <= n; ++k) {
      const auto q = rank_identity_check(forced_rank(n * 31 + k, n, k));
      EXPECT_EQ(q.range, Rational(k, n));
      EXPECT_EQ(q.kernel, Rational(n - k, n));
      EXPECT_EQ(q.range + q.kernel, Rational(1, 1));
    }
}

TEST(RangeOfCompression, Examples) {
  const auto lat = enumerate_lattice(CMatrix::diagonal({1.0, 2.0}));
  const auto same = range_of_compression(CMatrix::identity(2), lat.elements[1]);
  EXPECT_LE(frobenius_norm(same.matrix - lat.elements[1].matrix), 1e-14);

  const CMatrix x = random_matrix(2, 2);
  const auto img = range_of_compression(x, lat.elements[2]);
  EXPECT_EQ(img.trace_value, lat.elements[2].trace_value);

  const auto dropped = range_of_compression(CMatrix::diagonal({1.0, 0.0}), OrthoProjection::identity(2));
  EXPECT_EQ(dropped.rank, 1u);
  EXPECT_NEAR(std::abs(dropped.matrix(0, 0)), 1.0, 1e-14);
}

TEST(Embedding, IdentityAndSimilarity) {
  const CMatrix s = CMatrix::diagonal({1.0, 2.0});
  auto m = sublattice_embedding(s, s, CMatrix::identity(2));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(m.forward[i], i);
  EXPECT_TRUE(m.trace_preserving);

  const CMatrix a = random_matrix(5, 2);
  const CMatrix t = a * s * detail::inverse(a);
  m = sublattice_embedding(s, t, a);
  EXPECT_TRUE(m.injective);
  EXPECT_TRUE(m.trace_preserving);
  EXPECT_TRUE(m.preserves_join);
  EXPECT_TRUE(m.preserves_meet);
}

TEST(Embedding, CommonEigenbasisPair) {
  const CMatrix d = CMatrix::diagonal({0.3, Complex(-0.5, 0.2), 1.1, Complex(0.0, 0.7)});
  const CMatrix a = random_matrix(6, 4);
  const CMatrix b = random_matrix(7, 4);
  const CMatrix s = a * d * detail::inverse(a);
  const CMatrix t = b * d * detail::inverse(b);
  const CMatrix x = b * detail::inverse(a);
  const auto m = sublattice_embedding(s, t, x);
  EXPECT_TRUE(m.trace_preserving);
  EXPECT_TRUE(m.preserves_join);
}

TEST(Embedding, RefusesBadIntertwiner) {
  const CMatrix s = CMatrix::diagonal({1.0, 2.0});
  EXPECT_THROW(sublattice_embedding(s, s, random_matrix(1, 2)), InvalidArgument);
  EXPECT_THROW(sublattice_embedding(s, s, CMatrix::diagonal({1.0, 0.0})), InvalidArgument);
}

TEST(StTs, TwoByTwoExample) {
  const CMatrix s = CMatrix::diagonal({1.0, 2.0});
  const CMatrix t = CMatrix::from_rows({{1.0, 1.0}, {0.0, 3.0}});
  const auto m = st_ts_isomorphism(s, t);
  EXPECT_FALSE(m.fallback);
  ASSERT_EQ(m.forward.size(), 4u);
  EXPECT_TRUE(m.round_trip);
  EXPECT_TRUE(m.trace_preserving);
}

TEST(StTs, InversePairRefused) {
  const CMatrix t = random_matrix(8, 3);
  EXPECT_THROW(st_ts_isomorphism(detail::inverse(t), t), InvalidArgument);
}

TEST(StTs, SingularFactorFallsBack) {
  const CMatrix s = forced_rank(9, 4, 2);
  const CMatrix t = random_matrix(10, 4);
  const auto m = st_ts_isomorphism(s, t);
  EXPECT_TRUE(m.fallback);
  ASSERT_TRUE(m.st_witness && m.ts_witness);
  EXPECT_GT(m.st_witness->rank, 0u);
  EXPECT_LT(m.st_witness->rank, 4u);
  const CMatrix st = s * t;
  const CMatrix p = m.st_witness->matrix;
  EXPECT_LE(frobenius_norm(st * p - p * st * p), 1e-8);
}

TEST(StTs, RandomPairs) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t n = 2 + seed % 3;
    const auto m = st_ts_isomorphism(random_matrix(seed, n, 1), random_matrix(seed, n, 2));
    EXPECT_EQ(m.forward.size(), std::size_t{1} << n);
    EXPECT_TRUE(m.round_trip && m.trace_preserving && m.preserves_join && m.preserves_meet);
  }
}

TEST(Hyperinvariant, DistinctSpectrumGivesWholeLattice) {
  const auto lat = enumerate_lattice(random_matrix(11, 4));
  EXPECT_EQ(hyperinvariant_elements(lat).size(), 16u);
  Philox rng(12);
  const auto p = OrthoProjection::onto_span(ginibre_sample(rng, 4, 2));
  EXPECT_FALSE(is_hyperinvariant(lat, p.matrix));
}
