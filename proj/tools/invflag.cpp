// Command-line front end: flag, compress, commdist, lattice, probe, gen.
//
// Exit status: 0 all contracts held, 1 contract violation, 2 usage error.

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "invflag/compress.hpp"
#include "invflag/flags.hpp"
#include "invflag/grassmann.hpp"
#include "invflag/harness.hpp"
#include "invflag/io.hpp"
#include "invflag/lattice.hpp"

namespace {

using namespace invflag;

constexpr int kContractViolation = 1;
constexpr int kUsageError = 2;

struct Common {
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "json";
  double tol = 1e-9;
};

struct Source {
  std::string family = "ginibre";
  std::size_t n = 8;
  std::string input;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Generator seed");
  cmd->add_option("--out", c.out, "Output file (default: stdout)");
  cmd->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--tol", c.tol, "Certification tolerance");
}

void add_source(CLI::App* cmd, Source& s) {
  cmd->add_option("--family", s.family, "ginibre | haar_unitary | jordan | upper_random | file");
  cmd->add_option("-n,--n", s.n, "Dimension");
  cmd->add_option("--input", s.input, "Matrix JSON file (implies --family file)");
}

CMatrix load(const Source& s, std::uint64_t seed) {
  if (!s.input.empty()) return generate(Family::file, 0, seed, s.input);
  return generate(family_from_string(s.family), s.n, seed);
}

void emit(const Common& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
  } else {
    write_text_file(c.out, text);
  }
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::vector<std::size_t> parse_dims(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(static_cast<std::size_t>(std::stoul(item)));
    } catch (const std::logic_error&) {
      throw InvalidArgument("bad dimension '" + item + "'");
    }
  }
  return out;
}

std::vector<Rational> parse_targets(const std::string& s) {
  std::vector<Rational> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(rational_from_string(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Invariant projections, flags and commutator distances for complex matrices"};
  app.require_subcommand(1);

  Common common;
  Source source;

  // flag
  auto* flag_cmd = app.add_subcommand("flag", "Schur flag of a matrix at dyadic or given trace targets");
  int flag_levels = 2;
  std::string flag_targets;
  add_common(flag_cmd, common);
  add_source(flag_cmd, source);
  flag_cmd->add_option("--levels", flag_levels, "Dyadic level of the targets");
  flag_cmd->add_option("--targets", flag_targets, "Comma-separated rationals, e.g. 0,1/3,1");

  // compress
  auto* compress_cmd = app.add_subcommand("compress", "Dyadic compression onto operators with an invariant flag");
  std::string dims = "8,16";
  double eps = 0.1;
  std::size_t levels = 2;
  std::string supplier = "schur";
  add_common(compress_cmd, common);
  compress_cmd->add_option("--family", source.family, "ginibre | haar_unitary | jordan | upper_random | file");
  compress_cmd->add_option("--dims", dims, "Comma-separated dimensions");
  compress_cmd->add_option("--input", source.input, "Matrix JSON file");
  compress_cmd->add_option("--eps", eps, "Trace-norm budget");
  compress_cmd->add_option("--levels", levels, "Dyadic levels");
  compress_cmd->add_option("--supplier", supplier, "Frame supplier")->check(CLI::IsMember({"schur", "grassmann"}));

  // commdist
  auto* commdist_cmd = app.add_subcommand("commdist", "Minimize a projection defect over rank-k projections");
  std::size_t k = 0;
  std::string objective = "commutator";
  OptimizerConfig opt;
  add_common(commdist_cmd, common);
  add_source(commdist_cmd, source);
  commdist_cmd->add_option("-k,--k", k, "Projection rank (default floor(n/2))");
  commdist_cmd->add_option("--objective", objective, "commutator | invariance")
      ->check(CLI::IsMember({"commutator", "invariance"}));
  commdist_cmd->add_option("--restarts", opt.restarts, "Random restarts");
  commdist_cmd->add_option("--iterations", opt.max_iterations, "Iterations per restart");

  // lattice
  auto* lattice_cmd = app.add_subcommand("lattice", "Invariant subspace lattice, or Lat(ST) vs Lat(TS) with --pair");
  bool pair = false;
  add_common(lattice_cmd, common);
  add_source(lattice_cmd, source);
  lattice_cmd->add_flag("--pair", pair, "Sample S and T and check the ST/TS isomorphism");

  // probe
  auto* probe_cmd = app.add_subcommand("probe", "Commutator distance across dimensions (exploratory)");
  std::string k_rule = "half";
  add_common(probe_cmd, common);
  probe_cmd->add_option("--family", source.family, "ginibre | haar_unitary | jordan | upper_random | file");
  probe_cmd->add_option("--dims", dims, "Comma-separated dimensions");
  probe_cmd->add_option("--input", source.input, "Matrix JSON file");
  probe_cmd->add_option("--objective", objective, "commutator | invariance")
      ->check(CLI::IsMember({"commutator", "invariance"}));
  probe_cmd->add_option("--k", k_rule, "half or a fixed rank");
  probe_cmd->add_option("--restarts", opt.restarts, "Random restarts");
  probe_cmd->add_option("--iterations", opt.max_iterations, "Iterations per restart");

  // gen
  auto* gen_cmd = app.add_subcommand("gen", "Write a seeded matrix in the JSON matrix format");
  add_common(gen_cmd, common);
  add_source(gen_cmd, source);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*gen_cmd) {
      const CMatrix m = load(source, common.seed);
      emit(common, dump(matrix_to_json(m)));
      return 0;
    }

    if (*flag_cmd) {
      const CMatrix t = load(source, common.seed);
      const auto targets = flag_targets.empty() ? dyadic_targets(flag_levels) : parse_targets(flag_targets);
      const auto report = schur_flag(t, targets);
      if (common.format == "csv") {
        std::ostringstream os;
        os << "j,target,rank,residual\n";
        for (std::size_t j = 0; j < report.residuals.size(); ++j)
          os << j << ',' << report.flag.trace_targets[j].str() << ',' << report.flag.projections[j].rank << ','
             << format_double(report.residuals[j]) << '\n';
        emit(common, os.str());
      } else {
        Json j = to_json(report);
        j["matrix_hash"] = hash_hex(matrix_hash(t));
        j["certified"] = report.certified(common.tol);
        emit(common, dump(j));
      }
      return report.certified(common.tol) ? 0 : kContractViolation;
    }

    if (*compress_cmd) {
      ExperimentSpec spec;
      spec.family = source.input.empty() ? family_from_string(source.family) : Family::file;
      spec.path = source.input;
      spec.dims = source.input.empty() ? parse_dims(dims) : std::vector<std::size_t>{2};
      spec.seed = common.seed;
      spec.supplier = supplier;
      const auto records = compress_bench(spec, eps, levels);
      if (common.format == "csv") {
        std::ostringstream os;
        write_compress_csv(os, records);
        emit(common, os.str());
      } else {
        emit(common, dump(to_json(records)));
      }
      for (const auto& r : records)
        if (r.status != "ok") {
          std::cerr << "dim " << r.dim << ": " << r.status << "\n";
          return kContractViolation;
        }
      return 0;
    }

    if (*commdist_cmd) {
      const CMatrix t = load(source, common.seed);
      opt.seed = common.seed;
      const std::size_t rank = k == 0 ? t.n() / 2 : k;
      const auto r = minimize(t, rank, objective_from_string(objective), opt);
      if (common.format == "csv") {
        std::ostringstream os;
        os << "objective,n,seed,k,value,restarts,converged_restarts\n"
           << objective << ',' << t.n() << ',' << common.seed << ',' << rank << ',' << format_double(r.best_value)
           << ',' << r.restarts << ',' << r.converged_restarts << '\n';
        emit(common, os.str());
      } else {
        Json j = to_json(r);
        j["matrix_hash"] = hash_hex(matrix_hash(t));
        emit(common, dump(j));
      }
      return 0;
    }

    if (*lattice_cmd) {
      if (pair) {
        const std::size_t n = source.n;
        Philox rng(common.seed, n);
        const CMatrix s = ginibre_sample(rng, n);
        const CMatrix t = ginibre_sample(rng, n);
        const auto m = st_ts_isomorphism(s, t);
        Json j = to_json(m);
        j["S"] = matrix_to_json(s);
        j["T"] = matrix_to_json(t);
        emit(common, dump(j));
        return 0;
      }
      const CMatrix t = load(source, common.seed);
      const auto lat = enumerate_lattice(t);
      if (common.format == "csv") {
        std::ostringstream os;
        os << "mask,rank,trace\n";
        for (std::size_t i = 0; i < lat.size(); ++i)
          os << i << ',' << lat.elements[i].rank << ',' << lat.trace_list[i].str() << '\n';
        emit(common, os.str());
      } else {
        emit(common, dump(to_json(lat)));
      }
      return 0;
    }

    if (*probe_cmd) {
      ExperimentSpec spec;
      spec.family = source.input.empty() ? family_from_string(source.family) : Family::file;
      spec.path = source.input;
      spec.dims = source.input.empty() ? parse_dims(dims) : std::vector<std::size_t>{2};
      spec.seed = common.seed;
      spec.objective = objective_from_string(objective);
      if (k_rule != "half") {
        spec.half_rank = false;
        try {
          spec.fixed_k = static_cast<std::size_t>(std::stoul(k_rule));
        } catch (const std::logic_error&) {
          throw InvalidArgument("--k must be 'half' or a rank");
        }
      }
      spec.optimizer = opt;
      const auto records = gamma_probe(spec);
      if (common.format == "csv") {
        std::ostringstream os;
        write_probe_csv(os, records);
        emit(common, os.str());
      } else {
        emit(common, dump(to_json(records)));
      }
      return 0;
    }
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const Error& e) {
    std::cerr << "contract violation: " << e.what() << "\n";
    return kContractViolation;
  }
  return kUsageError;
}
