#pragma once

#include <cmath>
#include <vector>

#include "invflag/matrix.hpp"

namespace invflag {

namespace detail {

/// Householder vector v (v[0] real-normalized later) such that
/// (I - 2 v v^* / v^* v) x = alpha e_1. Returns false when x is already a
/// multiple of e_1 and no reflection is needed.
inline bool householder(std::vector<Complex>& x, Complex& alpha) {
  double tail = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) tail += std::norm(x[i]);
  if (tail == 0.0) {
    alpha = x.empty() ? Complex(0.0, 0.0) : x[0];
    return false;
  }
  const double nrm = std::sqrt(std::norm(x[0]) + tail);
  const double a0 = std::abs(x[0]);
  const Complex phase = a0 == 0.0 ? Complex(1.0, 0.0) : x[0] / a0;
  alpha = -phase * nrm;
  x[0] -= alpha;
  return true;
}

/// Applies H = I - 2 v v^* / (v^* v) from the left to rows [r0, r0+v.size())
/// of m, restricted to columns [c0, cols).
inline void reflect_left(CMatrix& m, const std::vector<Complex>& v, std::size_t r0,
                         std::size_t c0) {
  double vv = 0.0;
  for (const auto& e : v) vv += std::norm(e);
  const double beta = 2.0 / vv;
  for (std::size_t j = c0; j < m.cols(); ++j) {
    Complex s(0.0, 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) s += std::conj(v[i]) * m(r0 + i, j);
    s *= beta;
    for (std::size_t i = 0; i < v.size(); ++i) m(r0 + i, j) -= v[i] * s;
  }
}

/// Applies H from the right to columns [c0, c0+v.size()) of m for all rows.
inline void reflect_right(CMatrix& m, const std::vector<Complex>& v, std::size_t c0) {
  double vv = 0.0;
  for (const auto& e : v) vv += std::norm(e);
  const double beta = 2.0 / vv;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Complex s(0.0, 0.0);
    for (std::size_t j = 0; j < v.size(); ++j) s += m(i, c0 + j) * v[j];
    s *= beta;
    for (std::size_t j = 0; j < v.size(); ++j) m(i, c0 + j) -= s * std::conj(v[j]);
  }
}

/// Leading `width` columns of the unitary Q in a Householder QR of a, with
/// phases chosen so that R has a non-negative real diagonal.
inline CMatrix householder_q(const CMatrix& a, std::size_t width) {
  const std::size_t n = a.rows();
  const std::size_t k = a.cols();
  if (k > n) throw InvalidArgument("orthonormalize: more columns than rows");
  CMatrix r = a;
  std::vector<std::vector<Complex>> reflectors(k);
  std::vector<bool> applied(k, false);
  std::vector<Complex> diag(k);
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<Complex> x(n - j);
    for (std::size_t i = j; i < n; ++i) x[i - j] = r(i, j);
    Complex alpha;
    applied[j] = householder(x, alpha);
    if (applied[j]) {
      reflect_left(r, x, j, j);
      reflectors[j] = std::move(x);
    }
    diag[j] = r(j, j);
  }
  CMatrix q(n, width);
  for (std::size_t j = 0; j < width; ++j) q(j, j) = 1.0;
  for (std::size_t jj = k; jj-- > 0;) {
    if (applied[jj]) reflect_left(q, reflectors[jj], jj, 0);
  }
  for (std::size_t j = 0; j < k; ++j) {
    const double a0 = std::abs(diag[j]);
    if (a0 == 0.0) continue;
    const Complex phase = diag[j] / a0;
    for (std::size_t i = 0; i < n; ++i) q(i, j) *= phase;
  }
  return q;
}

}  // namespace detail

/// Orthonormal factor of a thin Householder QR of an n x k matrix (k <= n),
/// normalized so that R has a non-negative real diagonal. Columns that are
/// numerically dependent still yield orthonormal output.
inline CMatrix orthonormalize(const CMatrix& a) { return detail::householder_q(a, a.cols()); }

/// n x n unitary whose leading k columns span the columns of the n x k input;
/// standard basis vectors e_1..e_k in order yield the identity exactly.
inline CMatrix complete_frame(const CMatrix& a) { return detail::householder_q(a, a.rows()); }

}  // namespace invflag
