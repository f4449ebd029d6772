#pragma once

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <vector>

#include "invflag/matrix.hpp"
#include "invflag/projection.hpp"
#include "invflag/schur.hpp"

namespace invflag {

/// Nested chain 0 = P_0 <= P_1 <= ... <= P_m = I with prescribed traces.
struct Flag {
  std::vector<OrthoProjection> projections;
  std::vector<Rational> trace_targets;

  std::size_t n() const noexcept { return projections.empty() ? 0 : projections.front().n(); }
};

/// A flag with its invariance defects ||T P_j - P_j T P_j||_2 for some T.
struct FlagReport {
  Flag flag;
  std::vector<double> residuals;
  double max_residual = 0.0;

  /// Every projection invariant to within `tol` (1e-9 by default).
  bool certified(double tol = 1e-9) const noexcept { return max_residual <= tol; }
};

/// Tolerances used when checking a flag.
struct FlagTolerances {
  double nesting = 1e-9;     // ||P_j P_{j+1} - P_j||_F
  double projection = 1e-10; // ||P^2 - P||_F, ||P^* - P||_F
  double trace = 1e-10;      // |tau(P_j) - rank/n|
};

/// ||T P - P T P||_2: how far the range of P is from being T-invariant.
inline double invariance_defect(const CMatrix& t, const CMatrix& p) {
  const CMatrix tp = t * p;
  return trace_norm2(tp - p * tp);
}

/// (j / 2^levels) for j = 0 .. 2^levels.
inline std::vector<Rational> dyadic_targets(int levels) {
  if (levels < 0) throw InvalidArgument("dyadic_targets: levels must be non-negative");
  if (levels > 40) throw InvalidArgument("dyadic_targets: levels too large");
  const std::int64_t den = std::int64_t{1} << levels;
  std::vector<Rational> out;
  out.reserve(static_cast<std::size_t>(den) + 1);
  for (std::int64_t j = 0; j <= den; ++j) out.emplace_back(j, den);
  return out;
}

namespace detail {

inline void check_targets(const std::vector<Rational>& targets) {
  if (targets.size() < 2) throw InvalidArgument("flag targets must contain 0 and 1");
  if (!(targets.front() == Rational(0, 1)) || !(targets.back() == Rational(1, 1)))
    throw InvalidArgument("flag targets must start at 0 and end at 1");
  for (std::size_t j = 0; j < targets.size(); ++j) {
    if (targets[j] < Rational(0, 1) || Rational(1, 1) < targets[j])
      throw InvalidArgument("flag target " + targets[j].str() + " outside [0, 1]");
    if (j > 0 && targets[j] < targets[j - 1])
      throw InvalidArgument("flag targets must be sorted ascending");
  }
}

}  // namespace detail

/// Recomputes every flag invariant and the invariance residuals against T.
///
/// Never trusts stored residuals. Throws ContractViolation naming the first
/// offending index when a projection, the nesting, the endpoints, or the trace
/// quantization is off.
inline FlagReport validate_flag(const CMatrix& t, const Flag& flag, const FlagTolerances& tol = {}) {
  t.require_square("validate_flag");
  const std::size_t n = t.n();
  const auto& ps = flag.projections;
  if (ps.empty() || ps.size() != flag.trace_targets.size())
    throw InvalidArgument("validate_flag: projections and targets differ in length");
  detail::check_targets(flag.trace_targets);

  auto fail = [](std::size_t j, const std::string& what, double defect) {
    std::ostringstream os;
    os << "flag validation failed at index " << j << ": " << what << " defect " << defect;
    throw ContractViolation(os.str());
  };

  FlagReport report{flag, {}, 0.0};
  report.residuals.reserve(ps.size());
  for (std::size_t j = 0; j < ps.size(); ++j) {
    const auto& p = ps[j];
    if (p.matrix.rows() != n || p.matrix.cols() != n)
      throw InvalidArgument("validate_flag: projection " + std::to_string(j) + " has wrong dimension");
    const auto d = projection_defects(p.matrix);
    if (d.idempotency > tol.projection) fail(j, "idempotency", d.idempotency);
    if (d.symmetry > tol.projection) fail(j, "self-adjointness", d.symmetry);
    const std::size_t want = quantized_rank(flag.trace_targets[j], n);
    if (p.rank != want)
      fail(j, "trace quantization (rank " + std::to_string(p.rank) + " vs " + std::to_string(want) + ")",
           std::abs(static_cast<double>(p.rank) - static_cast<double>(want)) / static_cast<double>(n));
    if (!(p.trace_value == Rational(static_cast<std::int64_t>(want), static_cast<std::int64_t>(n))))
      fail(j, "recorded trace " + p.trace_value.str(), 1.0);
    const double tr = normalized_trace(p.matrix).real();
    if (std::abs(tr - p.trace_value.to_double()) > tol.trace) fail(j, "normalized trace", tr);
    if (j + 1 < ps.size()) {
      const double nest = frobenius_norm(p.matrix * ps[j + 1].matrix - p.matrix);
      if (nest > tol.nesting) fail(j, "nesting", nest);
    }
    const double r = invariance_defect(t, p.matrix);
    report.residuals.push_back(r);
    report.max_residual = std::max(report.max_residual, r);
  }
  return report;
}

/// Flag from the leading Schur vectors: P_j projects onto the first
/// floor(t_j n) columns of the unitary Schur factor, which are invariant.
inline FlagReport schur_flag(const CMatrix& t, const std::vector<Rational>& trace_targets) {
  t.require_square("schur_flag");
  detail::check_targets(trace_targets);
  const std::size_t n = t.n();
  const auto s = schur(t);
  Flag flag;
  flag.trace_targets = trace_targets;
  flag.projections.reserve(trace_targets.size());
  for (const auto& target : trace_targets) {
    const std::size_t k = quantized_rank(target, n);
    auto p = OrthoProjection::from_frame(s.q.columns(0, k));
    p.trace_value = Rational(static_cast<std::int64_t>(k), static_cast<std::int64_t>(n));
    flag.projections.push_back(std::move(p));
  }
  return validate_flag(t, flag);
}

}  // namespace invflag
