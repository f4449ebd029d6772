#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "invflag/matrix.hpp"

namespace invflag {

/// T = left diag(singular_values) right^*, singular values non-increasing.
struct SingularDecomposition {
  CMatrix left;
  std::vector<double> singular_values;
  CMatrix right;
};

namespace detail {

/// Gram-Schmidt (two passes) of column j of u against columns in `done`.
inline double orthogonalize_column(CMatrix& u, std::size_t j, const std::vector<std::size_t>& done) {
  const std::size_t n = u.rows();
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t p : done) {
      Complex d(0.0, 0.0);
      for (std::size_t i = 0; i < n; ++i) d += std::conj(u(i, p)) * u(i, j);
      for (std::size_t i = 0; i < n; ++i) u(i, j) -= d * u(i, p);
    }
  }
  double nrm = 0.0;
  for (std::size_t i = 0; i < n; ++i) nrm += std::norm(u(i, j));
  return std::sqrt(nrm);
}

}  // namespace detail

/// Singular value decomposition by one-sided (Hestenes) Jacobi rotations.
///
/// Deterministic cyclic sweeps; throws ConvergenceError if 80 sweeps do not
/// orthogonalize the columns. Left vectors belonging to (numerically) zero
/// singular values are completed to a unitary basis.
inline SingularDecomposition svd(const CMatrix& t) {
  t.require_square("svd");
  t.require_finite();
  const std::size_t n = t.n();
  const double eps = std::numeric_limits<double>::epsilon();
  const double tol = eps * static_cast<double>(std::max<std::size_t>(n, 1));

  // Columns rotate in place; keep them as contiguous vectors.
  std::vector<std::vector<Complex>> col(n, std::vector<Complex>(n));
  std::vector<std::vector<Complex>> vc(n, std::vector<Complex>(n, Complex(0.0, 0.0)));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) col[j][i] = t(i, j);
    vc[j][j] = 1.0;
  }

  const std::size_t max_sweeps = 80;
  bool converged = n <= 1;
  for (std::size_t sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        auto& a = col[p];
        auto& b = col[q];
        double alpha = 0.0, beta = 0.0;
        Complex gamma(0.0, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          alpha += std::norm(a[i]);
          beta += std::norm(b[i]);
          gamma += std::conj(a[i]) * b[i];
        }
        const double g = std::abs(gamma);
        if (g == 0.0 || g <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const Complex phase = gamma / g;  // b <- conj(phase) b makes gamma real
        const double zeta = (beta - alpha) / (2.0 * g);
        const double tn = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + tn * tn);
        const double s = c * tn;
        const Complex cp = std::conj(phase);
        for (std::size_t i = 0; i < n; ++i) {
          const Complex x = a[i], y = cp * b[i];
          a[i] = c * x - s * y;
          b[i] = s * x + c * y;
        }
        auto& vp = vc[p];
        auto& vq = vc[q];
        for (std::size_t i = 0; i < n; ++i) {
          const Complex x = vp[i], y = cp * vq[i];
          vp[i] = c * x - s * y;
          vq[i] = s * x + c * y;
        }
      }
    }
    converged = !rotated;
  }
  if (!converged) {
    throw ConvergenceError("svd: one-sided Jacobi did not converge within " +
                           std::to_string(max_sweeps) + " sweeps for matrix " +
                           hash_hex(matrix_hash(t)) + " (n=" + std::to_string(n) + ")");
  }

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (const auto& e : col[j]) s += std::norm(e);
    sigma[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sigma[a] > sigma[b]; });

  SingularDecomposition out{CMatrix(n), std::vector<double>(n), CMatrix(n)};
  const double smax = n == 0 ? 0.0 : sigma[order[0]];
  const double zero_floor = smax * tol;
  std::vector<std::size_t> done;
  std::vector<std::size_t> pending;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    out.singular_values[k] = sigma[j];
    for (std::size_t i = 0; i < n; ++i) out.right(i, k) = vc[j][i];
    if (sigma[j] > zero_floor && sigma[j] > 0.0) {
      for (std::size_t i = 0; i < n; ++i) out.left(i, k) = col[j][i] / sigma[j];
      const double nrm = detail::orthogonalize_column(out.left, k, done);
      if (nrm > 0.5) {
        for (std::size_t i = 0; i < n; ++i) out.left(i, k) /= nrm;
        done.push_back(k);
        continue;
      }
    }
    pending.push_back(k);
  }
  // Complete the left basis with the standard vector that keeps the most
  // weight after projecting out the columns already fixed.
  for (std::size_t k : pending) {
    std::size_t best_e = 0;
    double best = -1.0;
    for (std::size_t e = 0; e < n; ++e) {
      for (std::size_t i = 0; i < n; ++i) out.left(i, k) = (i == e) ? 1.0 : 0.0;
      const double nrm = detail::orthogonalize_column(out.left, k, done);
      if (nrm > best) {
        best = nrm;
        best_e = e;
      }
    }
    for (std::size_t i = 0; i < n; ++i) out.left(i, k) = (i == best_e) ? 1.0 : 0.0;
    const double nrm = detail::orthogonalize_column(out.left, k, done);
    if (!(nrm > 0.0)) throw ContractViolation("svd: failed to complete left basis");
    for (std::size_t i = 0; i < n; ++i) out.left(i, k) /= nrm;
    done.push_back(k);
  }
  return out;
}

/// Frobenius norm of left diag(sigma) right^* - t.
inline double svd_reconstruction_residual(const CMatrix& t, const SingularDecomposition& d) {
  CMatrix ls = d.left;
  for (std::size_t i = 0; i < ls.rows(); ++i)
    for (std::size_t j = 0; j < ls.cols(); ++j) ls(i, j) *= d.singular_values[j];
  return frobenius_norm(times_adjoint(ls, d.right) - t);
}

}  // namespace invflag
