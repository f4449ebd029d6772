#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "invflag/matrix.hpp"
#include "invflag/qr.hpp"

namespace invflag {

/// T = q u q^* with q unitary and u upper triangular.
struct SchurDecomposition {
  CMatrix q;
  CMatrix u;
  std::vector<Complex> eigenvalues;  // diagonal of u, in the order produced
};

namespace detail {

/// Plane rotation G = [[c, s], [-conj(s), c]] with real c.
struct Givens {
  double c = 1.0;
  Complex s{0.0, 0.0};

  /// Chooses G with G [a; b] = [r; 0].
  static Givens zeroing(Complex a, Complex b) {
    Givens g;
    if (b == Complex(0.0, 0.0)) return g;
    const double aa = std::abs(a);
    const double r = std::hypot(aa, std::abs(b));
    if (aa == 0.0) {
      g.c = 0.0;
      g.s = std::conj(b) / r;
      return g;
    }
    g.c = aa / r;
    g.s = (a / aa) * std::conj(b) / r;
    return g;
  }

  /// Rows p, q of m (columns [c0, c1)) <- G [row p; row q].
  void apply_left(CMatrix& m, std::size_t p, std::size_t q, std::size_t c0,
                  std::size_t c1) const {
    for (std::size_t j = c0; j < c1; ++j) {
      const Complex x = m(p, j), y = m(q, j);
      m(p, j) = c * x + s * y;
      m(q, j) = -std::conj(s) * x + c * y;
    }
  }

  /// Columns p, q of m (rows [r0, r1)) <- [col p, col q] G^*.
  void apply_right_adjoint(CMatrix& m, std::size_t p, std::size_t q, std::size_t r0,
                           std::size_t r1) const {
    for (std::size_t i = r0; i < r1; ++i) {
      const Complex x = m(i, p), y = m(i, q);
      m(i, p) = x * c + y * std::conj(s);
      m(i, q) = -x * s + y * c;
    }
  }
};

/// Reduces h to upper Hessenberg form in place, accumulating the unitary
/// similarity into q (h_in = q h q^*). Columns that are already reduced are
/// left untouched, so triangular input yields q = I exactly.
inline void hessenberg_reduce(CMatrix& h, CMatrix& q) {
  const std::size_t n = h.n();
  for (std::size_t k = 0; k + 2 < n; ++k) {
    std::vector<Complex> x(n - k - 1);
    for (std::size_t i = k + 1; i < n; ++i) x[i - k - 1] = h(i, k);
    Complex alpha;
    if (!householder(x, alpha)) continue;
    reflect_left(h, x, k + 1, 0);
    reflect_right(h, x, k + 1);
    reflect_right(q, x, k + 1);
    h(k + 1, k) = alpha;
    for (std::size_t i = k + 2; i < n; ++i) h(i, k) = 0.0;
  }
}

inline double norm1(Complex z) noexcept { return std::abs(z.real()) + std::abs(z.imag()); }

/// Wilkinson shift from the trailing 2x2 block of the active window, with
/// fixed exceptional shifts at iterations 10 and 20 of a stalled window.
inline Complex wilkinson_shift(const CMatrix& h, std::size_t iu, std::size_t iter) {
  if ((iter == 10 || iter == 20) && iu >= 2) {
    return std::abs(h(iu, iu - 1).real()) + std::abs(h(iu - 1, iu - 2).real());
  }
  Complex t00 = h(iu - 1, iu - 1), t01 = h(iu - 1, iu), t10 = h(iu, iu - 1), t11 = h(iu, iu);
  const double normt = norm1(t00) + norm1(t01) + norm1(t10) + norm1(t11);
  if (normt == 0.0) return 0.0;
  t00 /= normt;
  t01 /= normt;
  t10 /= normt;
  t11 /= normt;
  const Complex b = t01 * t10;
  const Complex c = t00 - t11;
  const Complex disc = std::sqrt(c * c + 4.0 * b);
  const Complex det = t00 * t11 - b;
  const Complex trace = t00 + t11;
  Complex e1 = (trace + disc) / 2.0;
  Complex e2 = (trace - disc) / 2.0;
  const double n1 = norm1(e1), n2 = norm1(e2);
  if (n1 > n2) {
    e2 = det / e1;
  } else if (n2 != 0.0) {
    e1 = det / e2;
  }
  return normt * (norm1(e1 - t11) < norm1(e2 - t11) ? e1 : e2);
}

}  // namespace detail

/// Complex Schur form by Hessenberg reduction followed by single-shift QR
/// with Wilkinson shifts and deflation. Deterministic; throws
/// ConvergenceError after `sweeps_per_dim * n` QR sweeps.
inline SchurDecomposition schur(const CMatrix& t, std::size_t sweeps_per_dim = 60) {
  t.require_square("schur");
  t.require_finite();
  const std::size_t n = t.n();
  SchurDecomposition out{CMatrix::identity(n), t, {}};
  CMatrix& h = out.u;
  CMatrix& q = out.q;
  if (n == 0) return out;

  detail::hessenberg_reduce(h, q);

  const double eps = std::numeric_limits<double>::epsilon();
  const double norm_floor = eps * frobenius_norm(h) / static_cast<double>(n);
  auto negligible = [&](std::size_t i) {
    // Tests h(i+1, i).
    const double d = detail::norm1(h(i, i)) + detail::norm1(h(i + 1, i + 1));
    const double sd = detail::norm1(h(i + 1, i));
    if (sd <= eps * d || sd <= norm_floor) {
      h(i + 1, i) = 0.0;
      return true;
    }
    return false;
  };

  const std::size_t budget = sweeps_per_dim * n;
  std::size_t iu = n - 1;
  std::size_t iter = 0;
  std::size_t total = 0;
  while (true) {
    while (iu > 0) {
      if (!negligible(iu - 1)) break;
      iter = 0;
      --iu;
    }
    if (iu == 0) break;
    ++iter;
    if (++total > budget) {
      throw ConvergenceError("schur: QR iteration did not converge within " +
                             std::to_string(budget) + " sweeps for matrix " +
                             hash_hex(matrix_hash(t)) + " (n=" + std::to_string(n) + ")");
    }
    std::size_t il = iu - 1;
    while (il > 0 && !negligible(il - 1)) --il;

    const Complex shift = detail::wilkinson_shift(h, iu, iter);
    auto g = detail::Givens::zeroing(h(il, il) - shift, h(il + 1, il));
    g.apply_left(h, il, il + 1, il, n);
    g.apply_right_adjoint(h, il, il + 1, 0, std::min(il + 2, iu) + 1);
    g.apply_right_adjoint(q, il, il + 1, 0, n);
    for (std::size_t i = il + 1; i < iu; ++i) {
      g = detail::Givens::zeroing(h(i, i - 1), h(i + 1, i - 1));
      g.apply_left(h, i, i + 1, i - 1, n);
      h(i + 1, i - 1) = 0.0;
      g.apply_right_adjoint(h, i, i + 1, 0, std::min(i + 2, iu) + 1);
      g.apply_right_adjoint(q, i, i + 1, 0, n);
    }
  }

  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) h(i, j) = 0.0;
  out.eigenvalues.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.eigenvalues[i] = h(i, i);
  return out;
}

/// Eigenvectors of an upper-triangular u with pairwise distinct diagonal, by
/// back substitution; column i belongs to u(i, i) and has unit 2-norm.
inline CMatrix triangular_eigenvectors(const CMatrix& u) {
  const std::size_t n = u.n();
  CMatrix x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Complex lambda = u(i, i);
    std::vector<Complex> v(n, Complex(0.0, 0.0));
    v[i] = 1.0;
    for (std::size_t jj = i; jj-- > 0;) {
      Complex s(0.0, 0.0);
      for (std::size_t l = jj + 1; l <= i; ++l) s += u(jj, l) * v[l];
      v[jj] = -s / (u(jj, jj) - lambda);
    }
    double nrm = 0.0;
    for (const auto& e : v) nrm += std::norm(e);
    nrm = std::sqrt(nrm);
    for (std::size_t r = 0; r < n; ++r) x(r, i) = v[r] / nrm;
  }
  return x;
}

/// Residual triple used by the Schur contract.
struct SchurResiduals {
  double unitarity = 0.0;       // ||q q^* - I||_F
  double lower = 0.0;           // max |u(i, j)|, i > j
  double reconstruction = 0.0;  // ||q u q^* - T||_F
};

inline SchurResiduals schur_residuals(const CMatrix& t, const SchurDecomposition& s) {
  SchurResiduals r;
  r.unitarity = unitarity_residual(s.q.adjoint());
  for (std::size_t i = 1; i < s.u.n(); ++i)
    for (std::size_t j = 0; j < i; ++j) r.lower = std::max(r.lower, std::abs(s.u(i, j)));
  r.reconstruction = frobenius_norm(times_adjoint(s.q * s.u, s.q) - t);
  return r;
}

}  // namespace invflag
