#pragma once

#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>

#include "invflag/matrix.hpp"
#include "invflag/qr.hpp"
#include "invflag/svd.hpp"

namespace invflag {

/// Reduced non-negative fraction num/den; used for exact trace bookkeeping.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  constexpr Rational() = default;
  constexpr Rational(std::int64_t p, std::int64_t q) : num(p), den(q) {
    if (den == 0) throw InvalidArgument("Rational: zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  double to_double() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }

  friend constexpr bool operator==(const Rational& a, const Rational& b) noexcept {
    return a.num == b.num && a.den == b.den;
  }
  friend constexpr auto operator<=>(const Rational& a, const Rational& b) noexcept {
    return a.num * b.den <=> b.num * a.den;
  }
  friend constexpr Rational operator+(const Rational& a, const Rational& b) {
    return {a.num * b.den + b.num * a.den, a.den * b.den};
  }
  friend constexpr Rational operator-(const Rational& a, const Rational& b) {
    return {a.num * b.den - b.num * a.den, a.den * b.den};
  }
  friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }
};

/// floor(t * n) / n for a rational t in [0, 1].
inline std::size_t quantized_rank(const Rational& t, std::size_t n) {
  return static_cast<std::size_t>((t.num * static_cast<std::int64_t>(n)) / t.den);
}

/// Default relative threshold separating numerical rank from QR/Jacobi noise.
inline constexpr double kDefaultRankTol = 1e-9;

/// Orthogonal projection with its rank and exact normalized trace rank/n.
struct OrthoProjection {
  CMatrix matrix;
  std::size_t rank = 0;
  Rational trace_value;

  std::size_t n() const noexcept { return matrix.n(); }

  static OrthoProjection zero(std::size_t n) { return {CMatrix(n), 0, Rational(0, n ? n : 1)}; }
  static OrthoProjection identity(std::size_t n) {
    return {CMatrix::identity(n), n, Rational(n ? 1 : 0, 1)};
  }

  /// P = F F^* for an n x k frame with orthonormal columns.
  static OrthoProjection from_frame(const CMatrix& frame) {
    const std::size_t n = frame.rows();
    return {times_adjoint(frame, frame), frame.cols(),
            Rational(static_cast<std::int64_t>(frame.cols()), static_cast<std::int64_t>(n ? n : 1))};
  }

  /// Orthonormalizes the columns of `span` first.
  static OrthoProjection onto_span(const CMatrix& span) { return from_frame(orthonormalize(span)); }
};

/// ||P^2 - P||_F and ||P^* - P||_F.
struct ProjectionDefects {
  double idempotency = 0.0;
  double symmetry = 0.0;
};

inline ProjectionDefects projection_defects(const CMatrix& p) {
  return {frobenius_norm(p * p - p), frobenius_norm(p.adjoint() - p)};
}

/// Number of singular values above rank_tol * sigma_1.
inline std::size_t numerical_rank(const SingularDecomposition& d, double rank_tol) {
  if (d.singular_values.empty() || d.singular_values.front() == 0.0) return 0;
  const double cut = rank_tol * d.singular_values.front();
  std::size_t r = 0;
  while (r < d.singular_values.size() && d.singular_values[r] > cut) ++r;
  return r;
}

/// Projection onto the closure of the range of T.
inline OrthoProjection range_projection(const CMatrix& t, double rank_tol = kDefaultRankTol) {
  if (!(rank_tol > 0.0)) throw InvalidArgument("range_projection: rank_tol must be positive");
  const auto d = svd(t);
  const std::size_t r = numerical_rank(d, rank_tol);
  return OrthoProjection::from_frame(d.left.columns(0, r));
}

/// Projection onto the kernel of T; rank complements range_projection.
inline OrthoProjection kernel_projection(const CMatrix& t, double rank_tol = kDefaultRankTol) {
  if (!(rank_tol > 0.0)) throw InvalidArgument("kernel_projection: rank_tol must be positive");
  const auto d = svd(t);
  const std::size_t r = numerical_rank(d, rank_tol);
  return OrthoProjection::from_frame(d.right.columns(r, t.n() - r));
}

/// Both projections from one decomposition; ranks sum to n.
inline std::pair<OrthoProjection, OrthoProjection> range_and_kernel(const CMatrix& t,
                                                                     double rank_tol = kDefaultRankTol) {
  if (!(rank_tol > 0.0)) throw InvalidArgument("range_and_kernel: rank_tol must be positive");
  const auto d = svd(t);
  const std::size_t r = numerical_rank(d, rank_tol);
  return {OrthoProjection::from_frame(d.left.columns(0, r)),
          OrthoProjection::from_frame(d.right.columns(r, t.n() - r))};
}

/// Orthonormal basis of the range of an orthogonal projection of known rank.
inline CMatrix projection_frame(const OrthoProjection& p) {
  const auto d = svd(p.matrix);
  return d.left.columns(0, p.rank);
}

}  // namespace invflag
