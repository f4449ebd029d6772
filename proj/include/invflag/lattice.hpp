#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "invflag/flags.hpp"
#include "invflag/matrix.hpp"
#include "invflag/projection.hpp"
#include "invflag/qr.hpp"
#include "invflag/schur.hpp"

namespace invflag {

/// Largest dimension for which the 2^n lattice and its tables are built.
inline constexpr std::size_t kMaxLatticeDim = 8;

/// Two projections are the same lattice element within this Frobenius distance.
inline constexpr double kLatticeMatchTol = 1e-8;

/// Invariant subspaces of a matrix with distinct eigenvalues: the spans of the
/// 2^n eigenvector subsets, indexed by subset bitmask over the eigenvalue
/// order produced by the Schur form.
struct InvariantLattice {
  CMatrix source;
  std::vector<Complex> eigenvalues;
  CMatrix eigenvectors;  // column i belongs to eigenvalues[i]
  std::vector<OrthoProjection> elements;
  std::vector<std::vector<std::size_t>> join_table;
  std::vector<std::vector<std::size_t>> meet_table;
  std::vector<Rational> trace_list;

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  std::size_t size() const noexcept { return elements.size(); }

  /// Index of the element equal to p, or npos. `hint` is tried first.
  std::size_t find(const OrthoProjection& p, std::size_t hint = npos, double tol = kLatticeMatchTol) const {
    auto matches = [&](std::size_t i) {
      return elements[i].rank == p.rank && frobenius_norm(elements[i].matrix - p.matrix) <= tol;
    };
    if (hint < elements.size() && matches(hint)) return hint;
    for (std::size_t i = 0; i < elements.size(); ++i)
      if (matches(i)) return i;
    return npos;
  }
};

/// E -> R(X E) between two lattices, with bookkeeping of what was verified.
struct LatticeMap {
  CMatrix intertwiner;
  std::vector<std::size_t> forward;
  bool trace_preserving = false;
  bool injective = false;
  bool preserves_join = false;
  bool preserves_meet = false;

  // Set by st_ts_isomorphism.
  CMatrix inverse_intertwiner;
  std::vector<std::size_t> inverse;
  bool round_trip = false;

  // Fallback when a factor is singular: invariant projections of ST and TS
  // that are neither 0 nor I.
  bool fallback = false;
  std::optional<OrthoProjection> st_witness;
  std::optional<OrthoProjection> ts_witness;
};

/// (tau(R(T)), tau(N(T))) as exact rationals.
struct RankIdentity {
  Rational range;
  Rational kernel;
};

namespace detail {

/// Smallest pairwise eigenvalue distance; throws when it is not above
/// 1e-6 times the spectral radius.
inline double require_distinct_spectrum(const std::vector<Complex>& ev) {
  double radius = 0.0;
  for (const auto& z : ev) radius = std::max(radius, std::abs(z));
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ev.size(); ++i)
    for (std::size_t j = i + 1; j < ev.size(); ++j) gap = std::min(gap, std::abs(ev[i] - ev[j]));
  if (ev.size() > 1 && !(gap > 1e-6 * radius)) {
    std::ostringstream os;
    os << "repeated eigenvalues: minimal gap " << gap << " is not above 1e-6 * spectral radius " << radius;
    throw InvalidArgument(os.str());
  }
  return gap;
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
inline CMatrix inverse(const CMatrix& a) {
  a.require_square("inverse");
  const std::size_t n = a.n();
  CMatrix m = a;
  CMatrix inv = CMatrix::identity(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(m(r, c)) > std::abs(m(piv, c))) piv = r;
    if (m(piv, c) == Complex(0.0, 0.0)) throw InvalidArgument("inverse: singular matrix");
    if (piv != c)
      for (std::size_t j = 0; j < n; ++j) {
        std::swap(m(c, j), m(piv, j));
        std::swap(inv(c, j), inv(piv, j));
      }
    const Complex d = 1.0 / m(c, c);
    for (std::size_t j = 0; j < n; ++j) {
      m(c, j) *= d;
      inv(c, j) *= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || m(r, c) == Complex(0.0, 0.0)) continue;
      const Complex f = m(r, c);
      for (std::size_t j = 0; j < n; ++j) {
        m(r, j) -= f * m(c, j);
        inv(r, j) -= f * inv(c, j);
      }
    }
  }
  return inv;
}

inline CMatrix complement(const CMatrix& p) { return CMatrix::identity(p.n()) - p; }

/// Range or kernel of a sum of two projections. Its norm is at most 2, so
/// singular values are cut at an absolute threshold rather than relative to
/// sigma_1 (which may itself be rounding noise).
inline OrthoProjection sum_range(const CMatrix& m, bool kernel, double cut = 1e-9) {
  const auto d = svd(m);
  std::size_t r = 0;
  while (r < d.singular_values.size() && d.singular_values[r] > cut) ++r;
  return kernel ? OrthoProjection::from_frame(d.right.columns(r, m.n() - r))
                : OrthoProjection::from_frame(d.left.columns(0, r));
}

}  // namespace detail

/// Enumerates Lat(T) for T with n distinct eigenvalues (n <= kMaxLatticeDim).
///
/// Join is the range of E1 + E2 and meet the kernel of (I - E1) + (I - E2),
/// each matched back to an element; a failed match or an element with
/// ||T E - E T E||_F above 1e-8 is a ContractViolation.
inline InvariantLattice enumerate_lattice(const CMatrix& t) {
  t.require_square("enumerate_lattice");
  t.require_finite();
  const std::size_t n = t.n();
  if (n == 0) throw InvalidArgument("enumerate_lattice: empty matrix");
  if (n > kMaxLatticeDim)
    throw InvalidArgument("enumerate_lattice: n = " + std::to_string(n) + " exceeds " +
                          std::to_string(kMaxLatticeDim));
  const auto s = schur(t);
  detail::require_distinct_spectrum(s.eigenvalues);

  InvariantLattice lat;
  lat.source = t;
  lat.eigenvalues = s.eigenvalues;
  lat.eigenvectors = s.q * triangular_eigenvectors(s.u);
  const std::size_t count = std::size_t{1} << n;
  lat.elements.reserve(count);
  for (std::size_t mask = 0; mask < count; ++mask) {
    CMatrix span(n, static_cast<std::size_t>(std::popcount(mask)));
    std::size_t c = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1u) {
        for (std::size_t r = 0; r < n; ++r) span(r, c) = lat.eigenvectors(r, i);
        ++c;
      }
    auto e = OrthoProjection::onto_span(span);
    const CMatrix te = t * e.matrix;
    const double defect = frobenius_norm(te - e.matrix * te);
    if (defect > 1e-8) {
      std::ostringstream os;
      os << "enumerate_lattice: element " << mask << " has invariance defect " << defect;
      throw ContractViolation(os.str());
    }
    lat.trace_list.push_back(e.trace_value);
    lat.elements.push_back(std::move(e));
  }

  lat.join_table.assign(count, std::vector<std::size_t>(count));
  lat.meet_table.assign(count, std::vector<std::size_t>(count));
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = i; j < count; ++j) {
      const auto& a = lat.elements[i].matrix;
      const auto& b = lat.elements[j].matrix;
      const std::size_t jn = lat.find(detail::sum_range(a + b, false), i | j);
      const std::size_t mt = lat.find(detail::sum_range(detail::complement(a) + detail::complement(b), true), i & j);
      if (jn == InvariantLattice::npos || mt == InvariantLattice::npos) {
        std::ostringstream os;
        os << "enumerate_lattice: " << (jn == InvariantLattice::npos ? "join" : "meet") << " of elements " << i
           << " and " << j << " is not an enumerated element";
        throw ContractViolation(os.str());
      }
      lat.join_table[i][j] = lat.join_table[j][i] = jn;
      lat.meet_table[i][j] = lat.meet_table[j][i] = mt;
    }
  return lat;
}

/// (tau(R(T)), tau(N(T))); the two always sum to exactly 1.
inline RankIdentity rank_identity_check(const CMatrix& t, double rank_tol = kDefaultRankTol) {
  t.require_square("rank_identity_check");
  const auto r = range_projection(t, rank_tol);
  const auto k = kernel_projection(t, rank_tol);
  return {r.trace_value, k.trace_value};
}

/// R(X E).
inline OrthoProjection range_of_compression(const CMatrix& x, const OrthoProjection& e,
                                            double rank_tol = kDefaultRankTol) {
  if (x.rows() != e.n() || x.cols() != e.n())
    throw InvalidArgument("range_of_compression: dimensions differ");
  return range_projection(x * e.matrix, rank_tol);
}

namespace detail {

/// Images of every element of `from` under E -> R(X E), located in `to`.
inline std::vector<std::size_t> transport(const CMatrix& x, const InvariantLattice& from,
                                          const InvariantLattice& to, const char* what) {
  std::vector<std::size_t> out(from.size());
  for (std::size_t i = 0; i < from.size(); ++i) {
    out[i] = to.find(range_of_compression(x, from.elements[i]), i);
    if (out[i] == InvariantLattice::npos) {
      std::ostringstream os;
      os << what << ": image of element " << i << " is not in the target lattice";
      throw ContractViolation(os.str());
    }
  }
  return out;
}

/// Fills the flags of a LatticeMap by exact rank arithmetic.
inline void verify_map(LatticeMap& m, const InvariantLattice& from, const InvariantLattice& to, const char* what) {
  const auto& f = m.forward;
  m.trace_preserving = true;
  for (std::size_t i = 0; i < from.size(); ++i)
    if (!(to.trace_list[f[i]] == from.trace_list[i])) m.trace_preserving = false;
  std::vector<std::size_t> sorted = f;
  std::sort(sorted.begin(), sorted.end());
  m.injective = std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
  if (!m.injective) throw ContractViolation(std::string(what) + ": map is not injective");
  m.preserves_join = m.preserves_meet = true;
  for (std::size_t i = 0; i < from.size(); ++i)
    for (std::size_t j = 0; j < from.size(); ++j) {
      if (f[from.join_table[i][j]] != to.join_table[f[i]][f[j]]) m.preserves_join = false;
      if (f[from.meet_table[i][j]] != to.meet_table[f[i]][f[j]]) m.preserves_meet = false;
      // tau(E1 ^ E2) = tau(E1) + tau(E2) - tau(E1 v E2)
      const Rational lhs = from.trace_list[from.meet_table[i][j]];
      const Rational rhs = from.trace_list[i] + from.trace_list[j] - from.trace_list[from.join_table[i][j]];
      if (!(lhs == rhs)) throw ContractViolation(std::string(what) + ": meet trace identity fails");
    }
}

}  // namespace detail

/// Lat(S) into Lat(T) through an injective X with X S = T X.
inline LatticeMap sublattice_embedding(const CMatrix& s, const CMatrix& t, const CMatrix& x) {
  s.require_square("sublattice_embedding");
  if (t.n() != s.n() || x.rows() != s.n() || x.cols() != s.n())
    throw InvalidArgument("sublattice_embedding: dimensions differ");
  const double resid = frobenius_norm(x * s - t * x);
  const double scale = std::max(1.0, frobenius_norm(x) * frobenius_norm(s));
  if (resid > 1e-10 * scale) {
    std::ostringstream os;
    os << "sublattice_embedding: intertwining residual " << resid << " exceeds " << 1e-10 * scale;
    throw InvalidArgument(os.str());
  }
  if (kernel_projection(x).rank != 0) throw InvalidArgument("sublattice_embedding: X has a nontrivial kernel");
  const auto ls = enumerate_lattice(s);
  const auto lt = enumerate_lattice(t);
  LatticeMap m;
  m.intertwiner = x;
  m.forward = detail::transport(x, ls, lt, "sublattice_embedding");
  detail::verify_map(m, ls, lt, "sublattice_embedding");
  return m;
}

namespace detail {

/// An invariant projection of `prod` strictly between 0 and I, for a product
/// with a singular factor: the kernel of the right factor, else the range of
/// the left one.
inline OrthoProjection nontrivial_witness(const CMatrix& left, const CMatrix& right, const CMatrix& prod) {
  const std::size_t n = prod.n();
  std::vector<OrthoProjection> candidates{kernel_projection(right), range_projection(left)};
  for (auto& p : candidates) {
    if (p.rank == 0 || p.rank == n) continue;
    const CMatrix tp = prod * p.matrix;
    if (frobenius_norm(tp - p.matrix * tp) <= 1e-8) return p;
  }
  // prod = 0: every subspace is invariant.
  if (frobenius_norm(prod) == 0.0 && n > 1) {
    CMatrix e(n, 1);
    e(0, 0) = 1.0;
    return OrthoProjection::from_frame(e);
  }
  throw ContractViolation("st_ts_isomorphism: no nontrivial invariant projection found for a singular factor");
}

}  // namespace detail

/// Lat(ST) and Lat(TS) through E -> R(T E) with inverse F -> R(S F).
///
/// With a singular factor only nontriviality is established: the returned map
/// has `fallback` set and carries an invariant witness for each product.
inline LatticeMap st_ts_isomorphism(const CMatrix& s, const CMatrix& t) {
  s.require_square("st_ts_isomorphism");
  t.require_square("st_ts_isomorphism");
  if (s.n() != t.n()) throw InvalidArgument("st_ts_isomorphism: dimensions differ");
  const CMatrix st = s * t;
  const CMatrix ts = t * s;
  LatticeMap m;
  m.intertwiner = t;
  m.inverse_intertwiner = s;
  if (kernel_projection(s).rank != 0 || kernel_projection(t).rank != 0) {
    m.fallback = true;
    m.st_witness = detail::nontrivial_witness(s, t, st);
    m.ts_witness = detail::nontrivial_witness(t, s, ts);
    return m;
  }
  const auto lst = enumerate_lattice(st);
  const auto lts = enumerate_lattice(ts);
  if (lst.size() != lts.size()) throw ContractViolation("st_ts_isomorphism: lattice sizes differ");
  m.forward = detail::transport(t, lst, lts, "st_ts_isomorphism");
  m.inverse = detail::transport(s, lts, lst, "st_ts_isomorphism");
  detail::verify_map(m, lst, lts, "st_ts_isomorphism");
  m.round_trip = true;
  for (std::size_t i = 0; i < lst.size(); ++i) {
    const auto back = range_of_compression(s, lts.elements[m.forward[i]]);
    if (m.inverse[m.forward[i]] != i || frobenius_norm(back.matrix - lst.elements[i].matrix) > kLatticeMatchTol)
      m.round_trip = false;
  }
  if (!m.round_trip) throw ContractViolation("st_ts_isomorphism: round trip does not return every element");
  return m;
}

/// Riesz idempotents x_i y_i^* of a distinct-spectrum lattice, y_i^* the rows
/// of the inverse eigenvector matrix.
inline std::vector<CMatrix> spectral_idempotents(const InvariantLattice& lat) {
  const CMatrix& x = lat.eigenvectors;
  const CMatrix y = detail::inverse(x);
  const std::size_t n = x.n();
  std::vector<CMatrix> out;
  for (std::size_t i = 0; i < n; ++i) {
    CMatrix e(n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) e(r, c) = x(r, i) * y(i, c);
    out.push_back(std::move(e));
  }
  return out;
}

namespace detail {

inline bool invariant_under_all(const std::vector<CMatrix>& idem, const CMatrix& p, double tol) {
  for (const auto& e : idem) {
    const CMatrix ep = e * p;
    if (frobenius_norm(ep - p * ep) > tol * std::max(1.0, frobenius_norm(e))) return false;
  }
  return true;
}

}  // namespace detail

/// Whether the range of p is invariant under every spectral idempotent of T,
/// hence under the commutant of T.
inline bool is_hyperinvariant(const InvariantLattice& lat, const CMatrix& p, double tol = 1e-8) {
  return detail::invariant_under_all(spectral_idempotents(lat), p, tol);
}

/// Indices of the hyperinvariant elements; all of them for distinct spectrum.
inline std::vector<std::size_t> hyperinvariant_elements(const InvariantLattice& lat, double tol = 1e-8) {
  const auto idem = spectral_idempotents(lat);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < lat.size(); ++i)
    if (detail::invariant_under_all(idem, lat.elements[i].matrix, tol)) out.push_back(i);
  return out;
}

}  // namespace invflag
