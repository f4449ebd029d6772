#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "invflag/matrix.hpp"
#include "invflag/projection.hpp"
#include "invflag/qr.hpp"
#include "invflag/random.hpp"

namespace invflag {

/// Which projection-valued defect is being minimized.
enum class Objective {
  commutator,  // ||P T - T P||_2
  invariance,  // ||T P - P T P||_2
};

inline const char* to_string(Objective o) noexcept {
  return o == Objective::commutator ? "commutator" : "invariance";
}

inline Objective objective_from_string(const std::string& s) {
  if (s == "commutator") return Objective::commutator;
  if (s == "invariance") return Objective::invariance;
  throw InvalidArgument("unknown objective '" + s + "'");
}

struct OptimizerConfig {
  std::size_t restarts = 32;
  std::size_t max_iterations = 500;
  double armijo_factor = 0.5;
  double armijo_slope = 1e-4;
  double gradient_tol = 1e-9;  // Riemannian gradient norm of ||P T - T P||_F^2 (resp. invariance)
  std::uint64_t seed = 0;
  std::size_t gradient_check_points = 10;
  double gradient_check_tol = 1e-6;
};

/// Orthonormal n x k frame; P = v v^*.
struct IsometryPoint {
  CMatrix v;
  std::size_t k = 0;

  explicit IsometryPoint(CMatrix frame) : v(std::move(frame)), k(v.cols()) {
    if (unitarity_residual(v) > 1e-10)
      throw InvalidArgument("IsometryPoint: columns are not orthonormal");
  }

  OrthoProjection projection() const { return OrthoProjection::from_frame(v); }
};

/// Outcome of a single restart.
struct RestartTrace {
  double final_value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

struct GradientCheck {
  double max_relative_error = 0.0;
  std::size_t points = 0;
};

/// Estimated minimum of a projection-valued objective with its provenance.
///
/// best_value is an upper estimate of the true minimum: the objective is
/// nonconvex and only oracles (brute force, spectral projections, Schur
/// spans) certify it.
struct DistanceResult {
  Objective objective = Objective::commutator;
  std::size_t k = 0;
  double best_value = 0.0;
  OrthoProjection best_projection;
  CMatrix best_frame;
  std::size_t restarts = 0;
  std::size_t converged_restarts = 0;
  std::uint64_t seed = 0;
  OptimizerConfig config;
  std::vector<RestartTrace> trace;
  GradientCheck gradient_check;
};

/// Defect of P against T, computed from the full n x n products.
inline double objective_value(const CMatrix& t, const CMatrix& p, Objective kind) {
  t.require_square("objective_value");
  if (p.rows() != t.n() || p.cols() != t.n())
    throw InvalidArgument("objective_value: projection dimension differs from operator");
  const CMatrix tp = t * p;
  if (kind == Objective::commutator) return trace_norm2(p * t - tp);
  return trace_norm2(tp - p * tp);
}

inline double objective_value(const CMatrix& t, const OrthoProjection& p, Objective kind) {
  return objective_value(t, p.matrix, kind);
}

namespace detail {

/// Squared objective f(V) = defect(V V^*)^2 evaluated through thin products.
struct FrameObjective {
  const CMatrix& t;
  Objective kind;

  double value(const CMatrix& v) const {
    const double n = static_cast<double>(t.n());
    const CMatrix b = t * v;  // T V
    if (kind == Objective::commutator) {
      const CMatrix a = adjoint_times(v, t);  // V^* T
      const CMatrix c = v * a - times_adjoint(b, v);
      return frobenius_norm_squared(c) / n;
    }
    const CMatrix w = b - v * adjoint_times(v, b);
    return frobenius_norm_squared(w) / n;
  }

  /// Value and the horizontal (Riemannian) gradient at an orthonormal v.
  double value_and_gradient(const CMatrix& v, CMatrix& grad) const {
    const double n = static_cast<double>(t.n());
    const CMatrix b = t * v;
    double f = 0.0;
    CMatrix eg;
    if (kind == Objective::commutator) {
      // f = ||C||^2 / n, C = P T - T P; Euclidean gradient (2/n)(G + G^*) V
      // with G = T C^* - C^* T.
      const CMatrix a = adjoint_times(v, t);
      const CMatrix c = v * a - times_adjoint(b, v);
      f = frobenius_norm_squared(c) / n;
      const CMatrix cs_v = adjoint_times(c, v);    // C^* V
      const CMatrix tsv = adjoint_times(t, v);     // T^* V
      eg = t * cs_v - adjoint_times(c, b) + c * tsv - adjoint_times(t, c * v);
    } else {
      // f = ||W||^2 / n, W = (I - P) T V; horizontal part of the Euclidean
      // gradient is (2/n)(I - P)(T^* W - W M^*), M = V^* T V.
      const CMatrix m = adjoint_times(v, b);
      const CMatrix w = b - v * m;
      f = frobenius_norm_squared(w) / n;
      eg = adjoint_times(t, w) - times_adjoint(w, m);
    }
    eg *= 2.0 / n;
    grad = eg - v * adjoint_times(v, eg);
    return f;
  }
};

inline double real_inner(const CMatrix& a, const CMatrix& b) noexcept {
  double s = 0.0;
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) s += (std::conj(av[i]) * bv[i]).real();
  return s;
}

inline CMatrix horizontal(const CMatrix& v, const CMatrix& z) { return z - v * adjoint_times(v, z); }

inline Philox restart_stream(std::uint64_t seed, std::size_t restart) {
  return Philox(seed, restart);
}

inline Philox check_stream(std::uint64_t seed, std::size_t point) {
  return Philox(seed, (std::uint64_t{1} << 40) + point);
}

}  // namespace detail

/// Compares the analytic Riemannian gradient with central differences along
/// the QR retraction at `points` random frames. The direction mixes the
/// normalized gradient with a random horizontal vector so the directional
/// derivative is never accidentally tiny. Throws ContractViolation with the
/// offending point when the relative error exceeds `tol`.
inline GradientCheck check_gradient(const CMatrix& t, std::size_t k, Objective kind, std::uint64_t seed,
                                    std::size_t points = 10, double tol = 1e-6) {
  t.require_square("check_gradient");
  const std::size_t n = t.n();
  const detail::FrameObjective obj{t, kind};
  const double scale = 1.0 + frobenius_norm_squared(t) / static_cast<double>(n);
  const double h = 1e-5;
  GradientCheck out;
  for (std::size_t i = 0; i < points; ++i) {
    Philox rng = detail::check_stream(seed, i);
    const CMatrix v = orthonormalize(ginibre_sample(rng, n, k));
    CMatrix grad;
    (void)obj.value_and_gradient(v, grad);
    CMatrix dir = detail::horizontal(v, ginibre_sample(rng, n, k));
    dir *= 1.0 / frobenius_norm(dir);
    const double gn = frobenius_norm(grad);
    if (gn > 0.0) dir += grad * (1.0 / gn);
    const double dn = frobenius_norm(dir);
    if (dn > 0.0) dir *= 1.0 / dn;

    const double analytic = detail::real_inner(grad, dir);
    const double fp = obj.value(orthonormalize(v + dir * h));
    const double fm = obj.value(orthonormalize(v - dir * h));
    const double numeric = (fp - fm) / (2.0 * h);
    const double mag = std::max(std::abs(analytic), std::abs(numeric));
    const double rel = mag <= 1e-12 * scale ? 0.0 : std::abs(analytic - numeric) / mag;
    out.max_relative_error = std::max(out.max_relative_error, rel);
    ++out.points;
    if (rel > tol) {
      std::ostringstream os;
      os << "gradient check failed for " << to_string(kind) << " objective at point " << i
         << " (seed " << seed << ", stream " << ((std::uint64_t{1} << 40) + i) << "): analytic "
         << analytic << " vs central difference " << numeric << ", relative error " << rel;
      throw ContractViolation(os.str());
    }
  }
  return out;
}

namespace detail {

struct DescentOutcome {
  CMatrix frame;
  double f = 0.0;
  RestartTrace trace;
};

/// Riemannian descent from `v` with limited-memory quasi-Newton directions
/// (each new curvature pair projected onto the current tangent space; older
/// pairs are reused as stored) and Armijo
/// backtracking. Convergence is tested on the gradient of the unnormalized
/// squared Frobenius defect, i.e. n times the gradient of f.
inline constexpr std::size_t kLbfgsMemory = 10;

inline DescentOutcome descend(const FrameObjective& obj, CMatrix v, const OptimizerConfig& cfg) {
  const double n = static_cast<double>(obj.t.n());
  CMatrix grad;
  double f = obj.value_and_gradient(v, grad);
  std::vector<CMatrix> ss, ys;
  std::vector<double> rho;
  DescentOutcome out;
  std::size_t it = 0;
  for (; it < cfg.max_iterations; ++it) {
    const double gn2 = frobenius_norm_squared(grad);
    if (n * std::sqrt(gn2) <= cfg.gradient_tol) {
      out.trace.converged = true;
      break;
    }
    // Two-loop recursion.
    CMatrix d = grad;
    std::vector<double> alpha(ss.size());
    for (std::size_t i = ss.size(); i-- > 0;) {
      alpha[i] = rho[i] * real_inner(ss[i], d);
      d -= ys[i] * alpha[i];
    }
    if (!ss.empty()) d *= 1.0 / (rho.back() * frobenius_norm_squared(ys.back()));
    else d *= 1.0 / std::sqrt(gn2);
    for (std::size_t i = 0; i < ss.size(); ++i) {
      const double beta = rho[i] * real_inner(ys[i], d);
      d += ss[i] * (alpha[i] - beta);
    }
    d *= -1.0;
    double slope = real_inner(grad, d);
    if (!(slope < 0.0)) {
      ss.clear();
      ys.clear();
      rho.clear();
      d = grad * (-1.0 / std::sqrt(gn2));
      slope = -std::sqrt(gn2);
    }

    double t = 1.0;
    CMatrix trial;
    double ft = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      trial = orthonormalize(v + d * t);
      ft = obj.value(trial);
      if (ft <= f + cfg.armijo_slope * t * slope) {
        accepted = true;
        break;
      }
      t *= cfg.armijo_factor;
    }
    if (!accepted) {
      // No decrease representable in double precision.
      out.trace.converged = n * std::sqrt(gn2) <= 1e3 * cfg.gradient_tol || f <= 1e-28;
      break;
    }
    CMatrix new_grad;
    ft = obj.value_and_gradient(trial, new_grad);
    CMatrix s = horizontal(trial, d * t);
    CMatrix y = new_grad - horizontal(trial, grad);
    const double sy = real_inner(s, y);
    if (sy > 1e-14 * std::sqrt(frobenius_norm_squared(s) * frobenius_norm_squared(y))) {
      if (ss.size() == kLbfgsMemory) {
        ss.erase(ss.begin());
        ys.erase(ys.begin());
        rho.erase(rho.begin());
      }
      ss.push_back(std::move(s));
      ys.push_back(std::move(y));
      rho.push_back(1.0 / sy);
    }
    v = std::move(trial);
    grad = std::move(new_grad);
    f = ft;
  }
  out.trace.iterations = it;
  out.trace.final_value = std::sqrt(std::max(f, 0.0));
  out.frame = std::move(v);
  out.f = f;
  return out;
}

}  // namespace detail

/// Multi-restart Riemannian descent over rank-k frames.
///
/// Restart r starts from the orthonormal factor of a Ginibre sample drawn
/// from Philox stream r of `config.seed`; the gradient check runs first and
/// blocks the optimizer on failure. Deterministic for a fixed config.
inline DistanceResult minimize(const CMatrix& t, std::size_t k, Objective kind, const OptimizerConfig& config = {}) {
  t.require_square("minimize");
  t.require_finite();
  const std::size_t n = t.n();
  if (k < 1 || k + 1 > n) throw InvalidArgument("minimize: rank k must satisfy 1 <= k <= n-1");
  if (config.max_iterations == 0) throw InvalidArgument("minimize: zero iteration budget");
  if (config.restarts == 0) throw InvalidArgument("minimize: zero restarts");
  if (!(config.armijo_factor > 0.0 && config.armijo_factor < 1.0))
    throw InvalidArgument("minimize: Armijo factor must lie in (0, 1)");

  DistanceResult result;
  result.objective = kind;
  result.k = k;
  result.seed = config.seed;
  result.config = config;
  result.restarts = config.restarts;
  result.gradient_check =
      check_gradient(t, k, kind, config.seed, config.gradient_check_points, config.gradient_check_tol);

  const detail::FrameObjective obj{t, kind};
  double best_f = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < config.restarts; ++r) {
    Philox rng = detail::restart_stream(config.seed, r);
    const CMatrix v0 = orthonormalize(ginibre_sample(rng, n, k));
    auto run = detail::descend(obj, v0, config);
    if (run.trace.converged) ++result.converged_restarts;
    result.trace.push_back(run.trace);
    if (run.f < best_f) {
      best_f = run.f;
      result.best_frame = std::move(run.frame);
    }
  }
  result.best_projection = OrthoProjection::from_frame(result.best_frame);
  result.best_value = objective_value(t, result.best_projection, kind);
  return result;
}

/// ||[J, P]||_2 for the n x n nilpotent Jordan block and P the leading
/// floor(n/2) coordinate projection: the commutator has a single unit entry.
inline double jordan_upper_bound(std::size_t n) {
  if (n < 2) throw InvalidArgument("jordan_upper_bound: n must be at least 2");
  return 1.0 / std::sqrt(static_cast<double>(n));
}

/// Exhaustive grid oracle for n <= 3.
///
/// Rank-one projections are parametrized by a unit vector modulo phase,
/// v = (cos a, e^{i p} sin a cos b, e^{i q} sin a sin b) for n = 3 and
/// v = (cos a, e^{i p} sin a) for n = 2, with polar angles on an inclusive
/// grid of `grid_density` points over [0, pi/2] and phases on `grid_density`
/// points over [0, 2 pi). Rank n-1 projections are I - v v^*. The grid
/// minimum overestimates the true minimum by O(1/grid_density).
inline double brute_force_distance(const CMatrix& t, std::size_t k, Objective kind, std::size_t grid_density) {
  t.require_square("brute_force_distance");
  const std::size_t n = t.n();
  if (n > 3) throw InvalidArgument("brute_force_distance: refused for n > 3 (combinatorial blowup)");
  if (n < 1 || k >= n) throw InvalidArgument("brute_force_distance: need k < n");
  if (grid_density < 2) throw InvalidArgument("brute_force_distance: grid density must be >= 2");
  if (k == 0) return objective_value(t, CMatrix(n), kind);
  if (n == 1) return 0.0;
  const double angles = n == 2 ? 2.0 : 4.0;
  if (std::pow(static_cast<double>(grid_density), angles) > 2e9)
    throw InvalidArgument("brute_force_distance: grid too large for n = 3; lower the density");

  using Mat3 = std::array<std::array<Complex, 3>, 3>;
  Mat3 tm{};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) tm[i][j] = t(i, j);

  const bool complement = k == n - 1 && n == 3;  // k = 1 for n = 2 is rank one directly
  auto eval = [&](const std::array<Complex, 3>& v) {
    Mat3 p{};
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        p[i][j] = v[i] * std::conj(v[j]);
        if (complement) p[i][j] = (i == j ? 1.0 : 0.0) - p[i][j];
      }
    Mat3 tp{}, pt{};
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t l = 0; l < n; ++l) {
          tp[i][j] += tm[i][l] * p[l][j];
          pt[i][j] += p[i][l] * tm[l][j];
        }
    double s = 0.0;
    if (kind == Objective::commutator) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) s += std::norm(pt[i][j] - tp[i][j]);
    } else {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          Complex ptp(0.0, 0.0);
          for (std::size_t l = 0; l < n; ++l) ptp += p[i][l] * tp[l][j];
          s += std::norm(tp[i][j] - ptp);
        }
    }
    return s / static_cast<double>(n);
  };

  const double half_pi = std::numbers::pi / 2.0;
  const double two_pi = 2.0 * std::numbers::pi;
  const double dpol = half_pi / static_cast<double>(grid_density - 1);
  const double dph = two_pi / static_cast<double>(grid_density);
  double best = std::numeric_limits<double>::infinity();
  if (n == 2) {
    for (std::size_t ia = 0; ia < grid_density; ++ia) {
      const double a = dpol * static_cast<double>(ia);
      for (std::size_t ip = 0; ip < grid_density; ++ip) {
        const Complex ph = std::polar(1.0, dph * static_cast<double>(ip));
        best = std::min(best, eval({std::cos(a), ph * std::sin(a), 0.0}));
      }
    }
  } else {
    for (std::size_t ia = 0; ia < grid_density; ++ia) {
      const double a = dpol * static_cast<double>(ia);
      for (std::size_t ib = 0; ib < grid_density; ++ib) {
        const double b = dpol * static_cast<double>(ib);
        for (std::size_t ip = 0; ip < grid_density; ++ip) {
          const Complex p1 = std::polar(1.0, dph * static_cast<double>(ip));
          for (std::size_t iq = 0; iq < grid_density; ++iq) {
            const Complex p2 = std::polar(1.0, dph * static_cast<double>(iq));
            best = std::min(best, eval({std::cos(a), p1 * std::sin(a) * std::cos(b),
                                        p2 * std::sin(a) * std::sin(b)}));
          }
        }
      }
    }
  }
  return std::sqrt(best);
}

}  // namespace invflag
