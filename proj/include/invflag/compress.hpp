#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "invflag/flags.hpp"
#include "invflag/grassmann.hpp"
#include "invflag/matrix.hpp"
#include "invflag/projection.hpp"
#include "invflag/qr.hpp"
#include "invflag/schur.hpp"
#include "invflag/svd.hpp"

namespace invflag {

/// Spectral projection of |T| onto singular values <= eps.
///
/// ||T P|| <= eps, P dominates the kernel projection, and
/// rank(I - P) <= ||T||_F^2 / eps^2.
inline OrthoProjection spectral_truncate(const CMatrix& t, double eps) {
  t.require_square("spectral_truncate");
  if (!(eps > 0.0)) throw InvalidArgument("spectral_truncate: eps must be positive");
  const auto d = svd(t);
  std::size_t r = 0;
  while (r < d.singular_values.size() && d.singular_values[r] > eps) ++r;
  return OrthoProjection::from_frame(d.right.columns(r, t.n() - r));
}

/// Per-stage budgets and the (delta, eps1) pair used inside each stage.
///
/// Stage k gets b_k = eps / 2^(k+1). The truncation threshold eps1 and the
/// admissible supplier defect delta satisfy eps1 + 3 delta/eps1 + 2 delta < b_k:
/// delta bounds the corner block, delta/eps1 bounds the discarded columns
/// (their trace is below delta^2/eps1^2) and eps1 bounds the rescale.
struct ParameterSchedule {
  double eps = 0.0;
  std::vector<double> stage_budgets;
  std::vector<double> delta;
  std::vector<double> eps1;

  static void stage_parameters(double budget, double& delta, double& eps1) {
    eps1 = budget / 4.0;
    delta = budget * eps1 / (2.0 * (3.0 + 2.0 * eps1));
  }

  static ParameterSchedule make(double eps, std::size_t stages) {
    if (!(eps > 0.0)) throw InvalidArgument("ParameterSchedule: eps must be positive");
    ParameterSchedule s;
    s.eps = eps;
    double b = eps;
    for (std::size_t k = 0; k < stages; ++k) {
      b /= 2.0;
      double d = 0.0, e = 0.0;
      stage_parameters(b, d, e);
      s.stage_budgets.push_back(b);
      s.delta.push_back(d);
      s.eps1.push_back(e);
    }
    return s;
  }

  /// Stage budget slack b - (eps1 + 3 delta/eps1 + 2 delta); positive when valid.
  double slack(std::size_t k) const {
    return stage_budgets[k] - (eps1[k] + 3.0 * delta[k] / eps1[k] + 2.0 * delta[k]);
  }

  bool valid() const {
    double total = 0.0;
    for (std::size_t k = 0; k < stage_budgets.size(); ++k) {
      if (!(slack(k) > 0.0)) return false;
      total += stage_budgets[k];
    }
    return total < eps;
  }
};

/// Produces an m x k orthonormal frame whose span is (nearly) invariant for
/// the given m x m block.
struct FrameSupplier {
  std::string name;
  std::function<CMatrix(const CMatrix& block, std::size_t k)> frame;
};

/// Leading Schur vectors: exactly invariant up to rounding.
inline FrameSupplier schur_supplier() {
  return {"schur", [](const CMatrix& b, std::size_t k) { return schur(b).q.columns(0, k); }};
}

/// Minimizer of the invariance objective found by Riemannian descent.
inline FrameSupplier grassmann_supplier(OptimizerConfig config = [] {
  OptimizerConfig c;
  c.restarts = 4;
  c.max_iterations = 3000;
  return c;
}()) {
  return {"grassmann", [config](const CMatrix& b, std::size_t k) {
            return minimize(b, k, Objective::invariance, config).best_frame;
          }};
}

/// Returns the caller's frame; only valid for single-block stages.
inline FrameSupplier fixed_frame_supplier(CMatrix frame) {
  return {"fixed", [frame = std::move(frame)](const CMatrix& b, std::size_t k) {
            if (frame.rows() != b.n() || frame.cols() != k)
              throw InvalidArgument("fixed_frame_supplier: frame shape does not match the block");
            return frame;
          }};
}

/// One stage of the compression: every current diagonal block is split in two
/// and its lower-left corner removed.
struct CompressionStep {
  std::size_t stage = 0;
  double budget = 0.0;
  double delta = 0.0;
  double eps1 = 0.0;
  CMatrix input;
  CMatrix output;
  CMatrix pre_rescale;                          // R before multiplication by rescale_factor
  OrthoProjection corner_projection;            // Q = P1' + P2, summed over blocks
  std::vector<OrthoProjection> half_projections;  // new invariant partial sums, one per block
  std::vector<double> block_defects;            // ||A21||_2 per block, normalized by the full n
  double supplier_defect = 0.0;                 // sqrt of the sum of squared block defects
  Rational truncated_trace;                     // tau(P1 - P1')
  double perturbation = 0.0;                    // ||output - input||_2
  double rescale_factor = 1.0;

  const OrthoProjection& half_projection() const { return half_projections.front(); }
};

struct CompressionReport {
  CMatrix source;
  CMatrix result;
  FlagReport flag_report;
  std::vector<CompressionStep> steps;
  double total_perturbation = 0.0;
  ParameterSchedule schedule;
  std::string supplier;
  CMatrix basis;  // unitary whose leading column blocks span the flag
};

namespace detail {

inline double spectral_norm(const CMatrix& t) {
  const auto d = svd(t);
  return d.singular_values.empty() ? 0.0 : d.singular_values.front();
}

/// floor(j n / 2^level)
inline std::size_t dyadic_boundary(std::size_t j, std::size_t n, std::size_t level) {
  return (j * n) >> level;
}

inline void require_contraction(const CMatrix& t, const char* where) {
  const double nrm = spectral_norm(t);
  if (nrm > 1.0 + 1e-12) {
    std::ostringstream os;
    os << where << ": operator norm " << nrm << " exceeds 1";
    throw InvalidArgument(os.str());
  }
}

[[noreturn]] inline void stage_failure(std::size_t stage, std::size_t block, const std::string& what) {
  std::ostringstream os;
  os << "compression stage " << stage << ", block " << block << ": " << what;
  throw ContractViolation(os.str());
}

struct StageOutcome {
  CompressionStep step;
  CMatrix basis;
};

/// Runs one stage on t, whose level-`level` partial sums of `basis` columns
/// are invariant (exactly after zeroing the lower blocks).
inline StageOutcome compress_stage(const CMatrix& t, const CMatrix& basis, std::size_t level, double budget,
                                   double delta, double eps1, const FrameSupplier& supplier,
                                   std::size_t stage) {
  const std::size_t n = t.n();
  const std::size_t blocks = std::size_t{1} << level;
  const double rn = std::sqrt(static_cast<double>(n));

  CompressionStep step;
  step.stage = stage;
  step.budget = budget;
  step.delta = delta;
  step.eps1 = eps1;
  step.input = t;

  // Block unitary refining each current block.
  CMatrix u(n);
  std::vector<std::size_t> lo(blocks), mid(blocks), hi(blocks);
  CMatrix x = adjoint_times(basis, t * basis);
  for (std::size_t a = 0; a < blocks; ++a) {
    lo[a] = dyadic_boundary(a, n, level);
    hi[a] = dyadic_boundary(a + 1, n, level);
    mid[a] = dyadic_boundary(2 * a + 1, n, level + 1);
    const std::size_t m = hi[a] - lo[a];
    const std::size_t k = mid[a] - lo[a];
    if (k == 0 || k == m) stage_failure(stage, a, "block too small to split");
    const CMatrix frame = supplier.frame(x.block(lo[a], lo[a], m, m), k);
    if (frame.rows() != m || frame.cols() != k)
      stage_failure(stage, a, "supplier '" + supplier.name + "' returned a frame of the wrong shape");
    if (!frame.all_finite() || unitarity_residual(frame) > 1e-8)
      stage_failure(stage, a, "supplier '" + supplier.name + "' returned a non-orthonormal frame");
    u.set_block(lo[a], lo[a], complete_frame(frame));
  }
  const CMatrix w = basis * u;
  CMatrix y = adjoint_times(u, x * u);

  // Entries below the current block diagonal are rounding residue of earlier
  // stages; they belong to the perturbation of this stage.
  for (std::size_t a = 0; a < blocks; ++a)
    for (std::size_t i = hi[a]; i < n; ++i)
      for (std::size_t j = lo[a]; j < hi[a]; ++j) y(i, j) = 0.0;

  double defect2 = 0.0;
  std::size_t worst = 0;
  for (std::size_t a = 0; a < blocks; ++a) {
    const double d = frobenius_norm(y.block(mid[a], lo[a], hi[a] - mid[a], mid[a] - lo[a])) / rn;
    step.block_defects.push_back(d);
    if (d > step.block_defects[worst]) worst = a;
    defect2 += d * d;
  }
  step.supplier_defect = std::sqrt(defect2);
  if (!(step.supplier_defect < delta)) {
    std::ostringstream os;
    os << "supplier defect " << step.supplier_defect << " >= delta " << delta << " (block defect "
       << step.block_defects[worst] << "); raise eps or improve the supplier";
    stage_failure(stage, worst, os.str());
  }

  // Truncate each corner block: keep the columns where ||A21 x|| <= eps1.
  CMatrix q_local(n);
  std::size_t truncated = 0;
  for (std::size_t a = 0; a < blocks; ++a) {
    const std::size_t k = mid[a] - lo[a];
    const std::size_t r2 = hi[a] - mid[a];
    const std::size_t s = std::max(k, r2);
    CMatrix padded(s);
    padded.set_block(0, 0, y.block(mid[a], lo[a], r2, k));
    const auto d = svd(padded);
    std::size_t r = 0;
    while (r < d.singular_values.size() && d.singular_values[r] > eps1) ++r;
    CMatrix keep = CMatrix::identity(k);
    if (r > 0) {
      const CMatrix bad = orthonormalize(d.right.block(0, 0, k, r));
      keep -= times_adjoint(bad, bad);
      truncated += r;
    }
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<Complex> row(k);
      for (std::size_t c = 0; c < k; ++c)
        for (std::size_t l = 0; l < k; ++l) row[c] += y(i, lo[a] + l) * keep(l, c);
      for (std::size_t c = 0; c < k; ++c) y(i, lo[a] + c) = row[c];
    }
    for (std::size_t i = mid[a]; i < hi[a]; ++i)
      for (std::size_t j = lo[a]; j < mid[a]; ++j) y(i, j) = 0.0;
    q_local.set_block(lo[a], lo[a], keep);
    for (std::size_t i = mid[a]; i < hi[a]; ++i) q_local(i, i) = 1.0;
  }
  step.truncated_trace = Rational(static_cast<std::int64_t>(truncated), static_cast<std::int64_t>(n));
  step.corner_projection = OrthoProjection{w * times_adjoint(q_local, w), n - truncated,
                                           Rational(static_cast<std::int64_t>(n - truncated),
                                                    static_cast<std::int64_t>(n))};

  const double sigma = spectral_norm(y);
  // Norms within rounding of 1 are left alone; the contract allows 1 + 1e-12.
  step.rescale_factor = sigma > 1.0 + 1e-13 ? 1.0 / sigma : 1.0;
  if (step.rescale_factor < 1.0 / (1.0 + eps1) - 1e-12)
    stage_failure(stage, worst, "rescale factor below 1/(1+eps1)");
  step.pre_rescale = w * times_adjoint(y, w);
  if (step.rescale_factor != 1.0) y *= step.rescale_factor;
  step.output = w * times_adjoint(y, w);
  step.perturbation = trace_norm2(step.output - t);
  if (!(step.perturbation < budget)) {
    std::ostringstream os;
    os << "perturbation " << step.perturbation << " not below stage budget " << budget;
    stage_failure(stage, worst, os.str());
  }
  const double out_norm = spectral_norm(step.output);
  if (out_norm > 1.0 + 1e-12) {
    std::ostringstream os;
    os << "output operator norm " << out_norm << " exceeds 1";
    stage_failure(stage, worst, os.str());
  }
  for (std::size_t a = 0; a < blocks; ++a) {
    auto p = OrthoProjection::from_frame(w.columns(0, mid[a]));
    const double r = invariance_defect(step.output, p.matrix);
    if (r > 1e-10) {
      std::ostringstream os;
      os << "half projection invariance defect " << r;
      stage_failure(stage, a, os.str());
    }
    step.half_projections.push_back(std::move(p));
  }
  return {std::move(step), w};
}

}  // namespace detail

/// A single stage on one block: T is split at floor(n/2) with the supplier's
/// frame, its corner truncated and removed, and the result rescaled. The
/// (delta, eps1) pair is derived from eps as for a stage with budget eps.
inline CompressionStep half_step(const CMatrix& t, double eps, const FrameSupplier& supplier) {
  t.require_square("half_step");
  t.require_finite();
  if (!(eps > 0.0)) throw InvalidArgument("half_step: eps must be positive");
  if (t.n() < 2) throw InvalidArgument("half_step: need n >= 2");
  detail::require_contraction(t, "half_step");
  double delta = 0.0, eps1 = 0.0;
  ParameterSchedule::stage_parameters(eps, delta, eps1);
  return detail::compress_stage(t, CMatrix::identity(t.n()), 0, eps, delta, eps1, supplier, 0).step;
}

/// Compresses T to an operator S with ||S|| <= 1 and ||S - T||_2 < eps that
/// carries an exact invariant flag at traces floor(j n / 2^levels) / n.
///
/// Stage k halves every diagonal block of stage k-1 within budget eps/2^(k+1).
/// Partial sums of earlier stages stay invariant, so the flag at t is the
/// finest partial sum dominating every coarser one (their join).
inline CompressionReport dyadic_compress(const CMatrix& t, double eps, std::size_t levels,
                                         const FrameSupplier& supplier = schur_supplier()) {
  t.require_square("dyadic_compress");
  t.require_finite();
  const std::size_t n = t.n();
  if (!(eps > 0.0)) throw InvalidArgument("dyadic_compress: eps must be positive");
  if (levels < 1) throw InvalidArgument("dyadic_compress: levels must be >= 1");
  if (levels > 20 || (std::size_t{1} << levels) > n)
    throw InvalidArgument("dyadic_compress: 2^levels exceeds n");
  detail::require_contraction(t, "dyadic_compress");

  CompressionReport report;
  report.source = t;
  report.supplier = supplier.name;
  report.schedule = ParameterSchedule::make(eps, levels);
  if (!report.schedule.valid()) throw ContractViolation("dyadic_compress: parameter schedule violates its bounds");

  CMatrix current = t;
  CMatrix basis = CMatrix::identity(n);
  double stage_sum = 0.0;
  for (std::size_t k = 0; k < levels; ++k) {
    auto out = detail::compress_stage(current, basis, k, report.schedule.stage_budgets[k], report.schedule.delta[k],
                                      report.schedule.eps1[k], supplier, k);
    basis = std::move(out.basis);
    current = out.step.output;
    stage_sum += out.step.perturbation;
    report.steps.push_back(std::move(out.step));
  }
  report.result = current;
  report.basis = basis;
  report.total_perturbation = trace_norm2(current - t);
  if (report.total_perturbation > stage_sum + 1e-10)
    throw ContractViolation("dyadic_compress: total perturbation exceeds the sum of stage perturbations");
  if (!(report.total_perturbation < eps)) {
    std::ostringstream os;
    os << "dyadic_compress: total perturbation " << report.total_perturbation << " not below " << eps;
    throw ContractViolation(os.str());
  }

  Flag flag;
  flag.trace_targets = dyadic_targets(static_cast<int>(levels));
  for (std::size_t j = 0; j < flag.trace_targets.size(); ++j) {
    const std::size_t r = detail::dyadic_boundary(j, n, levels);
    flag.projections.push_back(OrthoProjection::from_frame(basis.columns(0, r)));
  }
  report.flag_report = validate_flag(current, flag);
  if (!report.flag_report.certified(1e-9)) {
    std::ostringstream os;
    os << "dyadic_compress: flag residual " << report.flag_report.max_residual << " above 1e-9";
    throw ContractViolation(os.str());
  }
  // Coarser partial sums must lie under the flag element at their trace.
  for (const auto& step : report.steps)
    for (std::size_t a = 0; a < step.half_projections.size(); ++a) {
      const std::size_t j = (2 * a + 1) << (levels - step.stage - 1);
      const auto& p = step.half_projections[a].matrix;
      const double gap = frobenius_norm(p * flag.projections[j].matrix - p);
      if (gap > 1e-9) detail::stage_failure(step.stage, a, "partial sum not dominated by the final flag");
    }
  return report;
}

/// Schur flag of S at dyadic targets. Every finite matrix triangularizes, so
/// this certifies membership only relative to the flag reported here.
inline FlagReport membership_check(const CMatrix& s, std::size_t levels) {
  if (levels < 1) throw InvalidArgument("membership_check: levels must be >= 1");
  if (levels > 40) throw InvalidArgument("membership_check: levels too large");
  return schur_flag(s, dyadic_targets(static_cast<int>(levels)));
}

}  // namespace invflag
