#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "invflag/compress.hpp"
#include "invflag/flags.hpp"
#include "invflag/grassmann.hpp"
#include "invflag/lattice.hpp"
#include "invflag/matrix.hpp"
#include "invflag/projection.hpp"

namespace invflag {

using Json = nlohmann::json;

/// Shortest decimal that reads back to the same double (at most 17 digits).
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

/// {"n": n, "re": [[...]], "im": [[...]]}; non-square frames use "rows"/"cols".
inline Json matrix_to_json(const CMatrix& m) {
  Json re = Json::array(), im = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Json r = Json::array(), c = Json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) {
      r.push_back(m(i, j).real());
      c.push_back(m(i, j).imag());
    }
    re.push_back(std::move(r));
    im.push_back(std::move(c));
  }
  Json out;
  if (m.rows() == m.cols()) {
    out["n"] = m.rows();
  } else {
    out["rows"] = m.rows();
    out["cols"] = m.cols();
  }
  out["re"] = std::move(re);
  out["im"] = std::move(im);
  return out;
}

inline CMatrix matrix_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("re")) throw InvalidArgument("matrix JSON: expected an object with \"re\"");
  std::size_t rows = 0, cols = 0;
  try {
    if (j.contains("n")) {
      rows = cols = j.at("n").get<std::size_t>();
    } else {
      rows = j.at("rows").get<std::size_t>();
      cols = j.at("cols").get<std::size_t>();
    }
    const Json& re = j.at("re");
    const bool has_im = j.contains("im");
    if (re.size() != rows || (has_im && j.at("im").size() != rows))
      throw InvalidArgument("matrix JSON: row count does not match the declared shape");
    CMatrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      if (re[r].size() != cols || (has_im && j.at("im")[r].size() != cols))
        throw InvalidArgument("matrix JSON: row " + std::to_string(r) + " has the wrong length");
      for (std::size_t c = 0; c < cols; ++c)
        m(r, c) = Complex(re[r][c].get<double>(), has_im ? j.at("im")[r][c].get<double>() : 0.0);
    }
    m.require_finite();
    return m;
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("matrix JSON: ") + e.what());
  }
}

inline CMatrix read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open matrix file '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw InvalidArgument("matrix file '" + path + "': " + e.what());
  }
  return matrix_from_json(j);
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  out << text;
}

inline Rational rational_from_string(const std::string& s) {
  const auto slash = s.find('/');
  try {
    if (slash == std::string::npos) {
      const std::int64_t v = std::stoll(s);
      return {v, 1};
    }
    return {std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1))};
  } catch (const std::logic_error&) {
    throw InvalidArgument("not a rational number: '" + s + "'");
  }
}

inline Json projection_to_json(const OrthoProjection& p) {
  return {{"rank", p.rank}, {"trace", p.trace_value.str()}, {"matrix", matrix_to_json(p.matrix)}};
}

inline OrthoProjection projection_from_json(const Json& j) {
  OrthoProjection p;
  p.matrix = matrix_from_json(j.at("matrix"));
  p.rank = j.at("rank").get<std::size_t>();
  p.trace_value = rational_from_string(j.at("trace").get<std::string>());
  return p;
}

inline Json to_json(const FlagReport& r, bool with_projections = true) {
  Json targets = Json::array(), ranks = Json::array(), projections = Json::array();
  for (const auto& t : r.flag.trace_targets) targets.push_back(t.str());
  for (const auto& p : r.flag.projections) {
    ranks.push_back(p.rank);
    if (with_projections) projections.push_back(projection_to_json(p));
  }
  Json out{{"trace_targets", targets}, {"ranks", ranks}, {"residuals", r.residuals},
           {"max_residual", r.max_residual}};
  if (with_projections) out["projections"] = projections;
  return out;
}

inline Flag flag_from_json(const Json& j) {
  Flag f;
  for (const auto& t : j.at("trace_targets")) f.trace_targets.push_back(rational_from_string(t.get<std::string>()));
  for (const auto& p : j.at("projections")) f.projections.push_back(projection_from_json(p));
  return f;
}

inline Json to_json(const OptimizerConfig& c) {
  return {{"restarts", c.restarts},
          {"max_iterations", c.max_iterations},
          {"armijo_factor", c.armijo_factor},
          {"armijo_slope", c.armijo_slope},
          {"gradient_tol", c.gradient_tol},
          {"seed", c.seed},
          {"gradient_check_points", c.gradient_check_points},
          {"gradient_check_tol", c.gradient_check_tol}};
}

inline Json to_json(const DistanceResult& r) {
  Json trace = Json::array();
  for (const auto& t : r.trace)
    trace.push_back({{"final_value", t.final_value}, {"iterations", t.iterations}, {"converged", t.converged}});
  return {{"objective", to_string(r.objective)},
          {"k", r.k},
          {"best_value", r.best_value},
          {"best_projection", projection_to_json(r.best_projection)},
          {"restarts", r.restarts},
          {"converged_restarts", r.converged_restarts},
          {"seed", r.seed},
          {"config", to_json(r.config)},
          {"trace", trace},
          {"gradient_check",
           {{"max_relative_error", r.gradient_check.max_relative_error}, {"points", r.gradient_check.points}}}};
}

inline Json to_json(const ParameterSchedule& s) {
  return {{"eps", s.eps}, {"stage_budgets", s.stage_budgets}, {"delta", s.delta}, {"eps1", s.eps1}};
}

inline Json to_json(const CompressionReport& r) {
  Json steps = Json::array();
  for (const auto& s : r.steps) {
    Json halves = Json::array();
    for (const auto& p : s.half_projections) halves.push_back(p.rank);
    steps.push_back({{"stage", s.stage},
                     {"budget", s.budget},
                     {"delta", s.delta},
                     {"eps1", s.eps1},
                     {"perturbation", s.perturbation},
                     {"rescale_factor", s.rescale_factor},
                     {"supplier_defect", s.supplier_defect},
                     {"block_defects", s.block_defects},
                     {"truncated_trace", s.truncated_trace.str()},
                     {"corner_rank", s.corner_projection.rank},
                     {"half_projection_ranks", halves}});
  }
  return {{"source", matrix_to_json(r.source)},
          {"result", matrix_to_json(r.result)},
          {"supplier", r.supplier},
          {"schedule", to_json(r.schedule)},
          {"steps", steps},
          {"total_perturbation", r.total_perturbation},
          {"flag", to_json(r.flag_report)}};
}

/// Re-checks a serialized CompressionReport from its matrices alone: the flag
/// against the result, the norm bound and the budget. Throws ContractViolation.
inline FlagReport revalidate_compression(const Json& j) {
  const CMatrix source = matrix_from_json(j.at("source"));
  const CMatrix result = matrix_from_json(j.at("result"));
  const double eps = j.at("schedule").at("eps").get<double>();
  const double dist = trace_norm2(result - source);
  if (!(dist < eps)) throw ContractViolation("reloaded report: perturbation " + format_double(dist) + " not below eps");
  const double nrm = svd(result).singular_values.front();
  if (nrm > 1.0 + 1e-12) throw ContractViolation("reloaded report: result norm " + format_double(nrm) + " exceeds 1");
  auto report = validate_flag(result, flag_from_json(j.at("flag")));
  if (!report.certified(1e-9))
    throw ContractViolation("reloaded report: flag residual " + format_double(report.max_residual));
  return report;
}

inline Json to_json(const InvariantLattice& lat) {
  Json elements = Json::array(), eig = Json::array();
  for (std::size_t i = 0; i < lat.size(); ++i)
    elements.push_back({{"mask", i},
                        {"rank", lat.elements[i].rank},
                        {"trace", lat.trace_list[i].str()},
                        {"matrix", matrix_to_json(lat.elements[i].matrix)}});
  for (const auto& z : lat.eigenvalues) eig.push_back({z.real(), z.imag()});
  return {{"source", matrix_to_json(lat.source)},
          {"eigenvalues", eig},
          {"elements", elements},
          {"join_table", lat.join_table},
          {"meet_table", lat.meet_table}};
}

inline Json to_json(const LatticeMap& m) {
  Json out{{"intertwiner", matrix_to_json(m.intertwiner)},
           {"forward", m.forward},
           {"trace_preserving", m.trace_preserving},
           {"injective", m.injective},
           {"preserves_join", m.preserves_join},
           {"preserves_meet", m.preserves_meet},
           {"fallback", m.fallback}};
  if (!m.inverse.empty()) {
    out["inverse"] = m.inverse;
    out["inverse_intertwiner"] = matrix_to_json(m.inverse_intertwiner);
    out["round_trip"] = m.round_trip;
  }
  if (m.st_witness) out["st_witness"] = projection_to_json(*m.st_witness);
  if (m.ts_witness) out["ts_witness"] = projection_to_json(*m.ts_witness);
  return out;
}

}  // namespace invflag
