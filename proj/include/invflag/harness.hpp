#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "invflag/compress.hpp"
#include "invflag/grassmann.hpp"
#include "invflag/io.hpp"
#include "invflag/matrix.hpp"
#include "invflag/random.hpp"
#include "invflag/svd.hpp"

namespace invflag {

enum class Family { ginibre, haar_unitary, jordan, upper_random, file };

inline const char* to_string(Family f) noexcept {
  switch (f) {
    case Family::ginibre: return "ginibre";
    case Family::haar_unitary: return "haar_unitary";
    case Family::jordan: return "jordan";
    case Family::upper_random: return "upper_random";
    case Family::file: return "file";
  }
  return "?";
}

inline Family family_from_string(const std::string& s) {
  for (Family f : {Family::ginibre, Family::haar_unitary, Family::jordan, Family::upper_random, Family::file})
    if (s == to_string(f)) return f;
  throw InvalidArgument("unknown family '" + s + "'");
}

/// Seeded matrix of the family; stream n of the seed, so every (family, n,
/// seed) triple regenerates bit-exactly. `path` is read for Family::file.
inline CMatrix generate(Family family, std::size_t n, std::uint64_t seed, const std::string& path = {}) {
  if (family == Family::file) {
    CMatrix m = read_matrix_file(path);
    m.require_square("generate(file)");
    return m;
  }
  if (n < 2) throw InvalidArgument("generate: n must be at least 2");
  Philox rng(seed, n);
  switch (family) {
    case Family::ginibre: {
      const CMatrix g = ginibre_sample(rng, n);
      return g * (1.0 / svd(g).singular_values.front());
    }
    case Family::haar_unitary:
      return orthonormalize(ginibre_sample(rng, n));
    case Family::jordan: {
      CMatrix j(n);
      for (std::size_t i = 0; i + 1 < n; ++i) j(i, i + 1) = 1.0;
      return j;
    }
    case Family::upper_random: {
      CMatrix g = ginibre_sample(rng, n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) g(i, j) = 0.0;
      return g * (1.0 / svd(g).singular_values.front());
    }
    case Family::file: break;
  }
  throw InvalidArgument("generate: unsupported family");
}

struct ExperimentSpec {
  Family family = Family::ginibre;
  std::vector<std::size_t> dims;
  std::uint64_t seed = 0;
  Objective objective = Objective::commutator;
  bool half_rank = true;  // k = floor(n/2); otherwise fixed_k
  std::size_t fixed_k = 1;
  OptimizerConfig optimizer;
  std::string path;                 // Family::file
  std::string supplier = "schur";   // compress_bench: schur | grassmann

  void validate() const {
    if (dims.empty()) throw InvalidArgument("experiment: dims must be non-empty");
    for (auto d : dims)
      if (d < 2 || d > 256) throw InvalidArgument("experiment: dim " + std::to_string(d) + " outside [2, 256]");
    if (family == Family::file && path.empty()) throw InvalidArgument("experiment: file family needs a path");
    if (supplier != "schur" && supplier != "grassmann")
      throw InvalidArgument("experiment: unknown supplier '" + supplier + "'");
  }

  std::size_t rank_for(std::size_t n) const { return half_rank ? n / 2 : fixed_k; }
};

struct RunRecord {
  Family family = Family::ginibre;
  std::size_t dim = 0;
  std::uint64_t seed = 0;
  std::size_t k = 0;
  std::string matrix_hash;
  double value = 0.0;
  double bound = std::numeric_limits<double>::quiet_NaN();  // analytic bound when one is known
  std::optional<DistanceResult> distance;
  std::optional<CompressionReport> compression;
  double eps = 0.0;
  std::size_t levels = 0;
  std::string status = "ok";
  double wall_time = 0.0;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// Estimated commutator (or invariance) distance at k per dim. Exploratory
/// for random families: no pass/fail is attached to the values.
inline std::vector<RunRecord> gamma_probe(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<RunRecord> out;
  for (const std::size_t n0 : spec.dims) {
    const auto t0 = std::chrono::steady_clock::now();
    const CMatrix t = generate(spec.family, n0, spec.seed, spec.path);
    const std::size_t n = t.n();
    RunRecord rec;
    rec.family = spec.family;
    rec.dim = n;
    rec.seed = spec.seed;
    rec.k = spec.rank_for(n);
    rec.matrix_hash = hash_hex(matrix_hash(t));
    OptimizerConfig cfg = spec.optimizer;
    cfg.seed = spec.seed;
    try {
      rec.distance = minimize(t, rec.k, spec.objective, cfg);
    } catch (const ContractViolation& e) {
      throw ContractViolation("probe dim " + std::to_string(n) + ": " + e.what());
    } catch (const InvalidArgument& e) {
      throw InvalidArgument("probe dim " + std::to_string(n) + ": " + e.what());
    }
    rec.value = rec.distance->best_value;
    if (spec.family == Family::jordan && spec.objective == Objective::commutator && rec.k == n / 2)
      rec.bound = jordan_upper_bound(n);
    rec.wall_time = detail::seconds_since(t0);
    out.push_back(std::move(rec));
  }
  return out;
}

/// dyadic_compress per dim; a failing stage is recorded and the run goes on.
inline std::vector<RunRecord> compress_bench(const ExperimentSpec& spec, double eps, std::size_t levels) {
  spec.validate();
  if (!(eps > 0.0)) throw InvalidArgument("compress_bench: eps must be positive");
  const FrameSupplier supplier = spec.supplier == "grassmann" ? grassmann_supplier() : schur_supplier();
  std::vector<RunRecord> out;
  for (const std::size_t n0 : spec.dims) {
    const auto t0 = std::chrono::steady_clock::now();
    const CMatrix t = generate(spec.family, n0, spec.seed, spec.path);
    RunRecord rec;
    rec.family = spec.family;
    rec.dim = t.n();
    rec.seed = spec.seed;
    rec.k = std::size_t{1} << levels;
    rec.eps = eps;
    rec.levels = levels;
    rec.matrix_hash = hash_hex(matrix_hash(t));
    try {
      rec.compression = dyadic_compress(t, eps, levels, supplier);
      rec.value = rec.compression->total_perturbation;
    } catch (const Error& e) {
      rec.status = std::string("failed: ") + e.what();
      rec.value = std::numeric_limits<double>::quiet_NaN();
    }
    rec.wall_time = detail::seconds_since(t0);
    out.push_back(std::move(rec));
  }
  return out;
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

inline std::string csv_number(double x) { return std::isnan(x) ? std::string() : format_double(x); }

}  // namespace detail

/// One row per record. The leading columns are family, n, seed, k, value;
/// wall_time is always last so it can be dropped for reproducibility diffs.
inline void write_probe_csv(std::ostream& os, const std::vector<RunRecord>& records) {
  os << "family,n,seed,k,value,objective,bound,restarts,converged_restarts,matrix_hash,wall_time\n";
  for (const auto& r : records) {
    os << to_string(r.family) << ',' << r.dim << ',' << r.seed << ',' << r.k << ',' << detail::csv_number(r.value)
       << ',' << (r.distance ? to_string(r.distance->objective) : "") << ',' << detail::csv_number(r.bound) << ','
       << (r.distance ? r.distance->restarts : 0) << ',' << (r.distance ? r.distance->converged_restarts : 0)
       << ',' << r.matrix_hash << ',' << format_double(r.wall_time) << '\n';
  }
}

/// k is the number of flag blocks 2^levels; value is the total perturbation.
inline void write_compress_csv(std::ostream& os, const std::vector<RunRecord>& records) {
  os << "family,n,seed,k,value,eps,levels,budget_utilization,flag_residual,status,matrix_hash,wall_time\n";
  for (const auto& r : records) {
    const double util = r.compression ? r.value / r.eps : std::numeric_limits<double>::quiet_NaN();
    const double resid =
        r.compression ? r.compression->flag_report.max_residual : std::numeric_limits<double>::quiet_NaN();
    os << to_string(r.family) << ',' << r.dim << ',' << r.seed << ',' << r.k << ',' << detail::csv_number(r.value)
       << ',' << format_double(r.eps) << ',' << r.levels << ',' << detail::csv_number(util) << ','
       << detail::csv_number(resid) << ',' << detail::csv_field(r.status) << ',' << r.matrix_hash << ','
       << format_double(r.wall_time) << '\n';
  }
}

inline Json to_json(const RunRecord& r) {
  Json out{{"family", to_string(r.family)}, {"dim", r.dim},     {"seed", r.seed},
           {"k", r.k},                      {"matrix_hash", r.matrix_hash}, {"value", r.value},
           {"status", r.status},            {"wall_time", r.wall_time}};
  if (!std::isnan(r.bound)) out["bound"] = r.bound;
  if (r.distance) out["result"] = to_json(*r.distance);
  if (r.compression) {
    out["result"] = to_json(*r.compression);
    out["eps"] = r.eps;
    out["levels"] = r.levels;
  }
  return out;
}

inline Json to_json(const std::vector<RunRecord>& records) {
  Json arr = Json::array();
  for (const auto& r : records) arr.push_back(to_json(r));
  return arr;
}

}  // namespace invflag
