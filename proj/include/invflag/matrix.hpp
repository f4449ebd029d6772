#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "invflag/error.hpp"

namespace invflag {

using Complex = std::complex<double>;

/// Dense complex matrix stored row-major.
///
/// Elements of the ambient algebra are square; the same storage is reused for
/// n x k orthonormal frames, which is the only place a non-square shape is
/// produced by the library. Operations that need a square argument check it.
class CMatrix {
 public:
  CMatrix() = default;
  explicit CMatrix(std::size_t n) : CMatrix(n, n) {}
  CMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, Complex(0.0, 0.0)) {}

  static CMatrix identity(std::size_t n) {
    CMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static CMatrix diagonal(std::span<const Complex> d) {
    CMatrix m(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  static CMatrix diagonal(std::initializer_list<Complex> d) {
    return diagonal(std::span<const Complex>(d.begin(), d.size()));
  }

  /// Builds a matrix from nested rows; all rows must have the same length.
  static CMatrix from_rows(std::initializer_list<std::initializer_list<Complex>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    CMatrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
      if (row.size() != c) throw InvalidArgument("from_rows: ragged row");
      std::size_t j = 0;
      for (const auto& v : row) m(i, j++) = v;
      ++i;
    }
    m.require_finite();
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  /// Dimension of a square matrix.
  std::size_t n() const noexcept { return rows_; }
  bool is_square() const noexcept { return rows_ == cols_; }
  bool empty() const noexcept { return data_.empty(); }

  Complex& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  const Complex& operator()(std::size_t i, std::size_t j) const noexcept {
    return data_[i * cols_ + j];
  }

  std::span<Complex> values() noexcept { return data_; }
  std::span<const Complex> values() const noexcept { return data_; }
  std::span<Complex> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const Complex> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  void require_square(const char* what) const {
    if (!is_square()) {
      throw InvalidArgument(std::string(what) + ": expected a square matrix, got " +
                            std::to_string(rows_) + "x" + std::to_string(cols_));
    }
  }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](const Complex& z) {
      return std::isfinite(z.real()) && std::isfinite(z.imag());
    });
  }

  void require_finite() const {
    if (!all_finite()) throw InvalidArgument("matrix contains NaN or Inf entries");
  }

  CMatrix adjoint() const {
    CMatrix out(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) out(j, i) = std::conj((*this)(i, j));
    return out;
  }

  /// Columns [first, first + count) as a rows x count matrix.
  CMatrix columns(std::size_t first, std::size_t count) const {
    CMatrix out(rows_, count);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < count; ++j) out(i, j) = (*this)(i, first + j);
    return out;
  }

  /// The sub-block starting at (r0, c0) of the given shape.
  CMatrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
    CMatrix out(nr, nc);
    for (std::size_t i = 0; i < nr; ++i)
      for (std::size_t j = 0; j < nc; ++j) out(i, j) = (*this)(r0 + i, c0 + j);
    return out;
  }

  void set_block(std::size_t r0, std::size_t c0, const CMatrix& b) {
    for (std::size_t i = 0; i < b.rows(); ++i)
      for (std::size_t j = 0; j < b.cols(); ++j) (*this)(r0 + i, c0 + j) = b(i, j);
  }

  CMatrix& operator+=(const CMatrix& o) {
    check_same_shape(o, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  CMatrix& operator-=(const CMatrix& o) {
    check_same_shape(o, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  CMatrix& operator*=(Complex s) noexcept {
    for (auto& z : data_) z *= s;
    return *this;
  }

  friend CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
  friend CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
  friend CMatrix operator*(CMatrix a, Complex s) { return a *= s; }
  friend CMatrix operator*(Complex s, CMatrix a) { return a *= s; }
  friend CMatrix operator*(const CMatrix& a, const CMatrix& b) {
    if (a.cols_ != b.rows_) throw InvalidArgument("matrix product: inner dimensions differ");
    CMatrix out(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i) {
      Complex* orow = out.data_.data() + i * out.cols_;
      for (std::size_t l = 0; l < a.cols_; ++l) {
        const Complex s = a(i, l);
        if (s == Complex(0.0, 0.0)) continue;
        const Complex* brow = b.data_.data() + l * b.cols_;
        for (std::size_t j = 0; j < b.cols_; ++j) orow[j] += s * brow[j];
      }
    }
    return out;
  }

  friend bool operator==(const CMatrix& a, const CMatrix& b) noexcept {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  void check_same_shape(const CMatrix& o, const char* what) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw InvalidArgument(std::string(what) + ": shape mismatch");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Complex> data_;
};

/// a^* b without forming the adjoint.
inline CMatrix adjoint_times(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows()) throw InvalidArgument("adjoint_times: row counts differ");
  CMatrix out(a.cols(), b.cols());
  for (std::size_t l = 0; l < a.rows(); ++l) {
    const auto arow = a.row(l);
    const auto brow = b.row(l);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const Complex s = std::conj(arow[i]);
      if (s == Complex(0.0, 0.0)) continue;
      auto orow = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += s * brow[j];
    }
  }
  return out;
}

/// a b^* without forming the adjoint.
inline CMatrix times_adjoint(const CMatrix& a, const CMatrix& b) {
  if (a.cols() != b.cols()) throw InvalidArgument("times_adjoint: column counts differ");
  CMatrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto arow = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const auto brow = b.row(j);
      Complex s(0.0, 0.0);
      for (std::size_t l = 0; l < a.cols(); ++l) s += arow[l] * std::conj(brow[l]);
      out(i, j) = s;
    }
  }
  return out;
}

inline double frobenius_norm_squared(const CMatrix& a) noexcept {
  double s = 0.0;
  for (const auto& z : a.values()) s += std::norm(z);
  return s;
}

inline double frobenius_norm(const CMatrix& a) noexcept {
  return std::sqrt(frobenius_norm_squared(a));
}

inline double max_abs(const CMatrix& a) noexcept {
  double m = 0.0;
  for (const auto& z : a.values()) m = std::max(m, std::abs(z));
  return m;
}

/// Trace divided by the dimension; the finite tracial state.
inline Complex normalized_trace(const CMatrix& t) {
  t.require_square("normalized_trace");
  if (t.n() == 0) return 0.0;
  Complex s(0.0, 0.0);
  for (std::size_t i = 0; i < t.n(); ++i) s += t(i, i);
  return s / static_cast<double>(t.n());
}

/// sqrt(tau(T^* T)): the Frobenius norm scaled by 1/sqrt(n).
///
/// For n x k frames the scale is the row count, so a frame embedded in the
/// ambient algebra keeps its trace norm.
inline double trace_norm2(const CMatrix& t) {
  if (t.rows() == 0) return 0.0;
  return std::sqrt(frobenius_norm_squared(t) / static_cast<double>(t.rows()));
}

/// Largest singular value by power iteration on T^* T.
///
/// Independent of the SVD so the two routes can cross-check each other. The
/// start vector is fixed, and iteration stops once the Rayleigh residual is
/// below 1e-8 of the current estimate; the estimate is always a lower bound.
inline double operator_norm(const CMatrix& t) {
  const std::size_t rows = t.rows();
  const std::size_t cols = t.cols();
  if (rows == 0 || cols == 0) return 0.0;
  const double scale = max_abs(t);
  if (scale == 0.0) return 0.0;

  std::vector<Complex> x(cols), y(rows), z(cols);
  for (std::size_t i = 0; i < cols; ++i) {
    const double a = static_cast<double>(i + 1);
    x[i] = Complex(1.0 + 0.5 * std::cos(0.7 * a), 0.25 * std::sin(1.3 * a));
  }
  auto normalize = [](std::vector<Complex>& v) {
    double s = 0.0;
    for (const auto& e : v) s += std::norm(e);
    s = std::sqrt(s);
    for (auto& e : v) e /= s;
    return s;
  };
  normalize(x);

  const std::size_t max_iter = 200000;
  double lambda = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    for (std::size_t i = 0; i < rows; ++i) {
      Complex s(0.0, 0.0);
      const auto r = t.row(i);
      for (std::size_t j = 0; j < cols; ++j) s += r[j] * x[j];
      y[i] = s / scale;
    }
    std::fill(z.begin(), z.end(), Complex(0.0, 0.0));
    for (std::size_t i = 0; i < rows; ++i) {
      const auto r = t.row(i);
      for (std::size_t j = 0; j < cols; ++j) z[j] += std::conj(r[j]) * y[i];
    }
    for (auto& e : z) e /= scale;
    double ty = 0.0;
    for (const auto& e : y) ty += std::norm(e);
    lambda = ty;
    if (lambda == 0.0) {
      // Start vector in the kernel; perturb deterministically.
      for (std::size_t i = 0; i < cols; ++i) x[i] += Complex(0.0, 1.0 / static_cast<double>(i + 2));
      normalize(x);
      continue;
    }
    double res = 0.0;
    for (std::size_t j = 0; j < cols; ++j) res += std::norm(z[j] - lambda * x[j]);
    res = std::sqrt(res);
    x = z;
    normalize(x);
    if (res <= 1e-8 * lambda) break;
  }
  return std::sqrt(lambda) * scale;
}

/// FNV-1a digest of the shape and the raw bytes of the entries.
inline std::uint64_t matrix_hash(const CMatrix& a) noexcept {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* p, std::size_t len) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  const std::uint64_t r = a.rows(), c = a.cols();
  mix(&r, sizeof r);
  mix(&c, sizeof c);
  for (const auto& z : a.values()) {
    double re = z.real(), im = z.imag();
    if (re == 0.0) re = 0.0;  // fold -0.0
    if (im == 0.0) im = 0.0;
    mix(&re, sizeof re);
    mix(&im, sizeof im);
  }
  return h;
}

inline std::string hash_hex(std::uint64_t h) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[h & 0xF];
    h >>= 4;
  }
  return s;
}

/// ||U^* U - I||_F over the columns of u.
inline double unitarity_residual(const CMatrix& u) {
  CMatrix g = adjoint_times(u, u);
  for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) -= 1.0;
  return frobenius_norm(g);
}

}  // namespace invflag
