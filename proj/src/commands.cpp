#include "kfp/commands.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "kfp/assembly.hpp"
#include "kfp/checks.hpp"
#include "kfp/mask_ops.hpp"
#include "kfp/norms.hpp"
#include "kfp/oracle.hpp"
#include "kfp/perron.hpp"
#include "kfp/philox.hpp"
#include "kfp/viscosity.hpp"

namespace kfp {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kVersion = "1.0.0";

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << std::setw(2) << doc << '\n';
}

void write_field(const fs::path& path, const Field& u) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  write_field_csv(out, u);
}

void write_mask_field(const fs::path& path, const MaskField& u) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  const MaskLattice& lat = u.mask->lattice();
  out << "x,v,u\n" << std::setprecision(17);
  for (int i = 0; i < lat.nx; ++i)
    for (int j = 0; j < lat.nv; ++j)
      if (u.mask->inside(i, j)) out << lat.x(i) << ',' << lat.v(j) << ',' << u(i, j) << '\n';
}

ProblemSpec product_spec(const RunConfig& cfg, const std::string& command) {
  if (cfg.domain.type != DomainConfig::Type::Box) {
    throw ConfigError("command " + command + " needs domain.type = box");
  }
  return ProblemSpec::make(cfg.domain.box, cfg.coeffs, cfg.nx, cfg.nv, cfg.solver);
}

std::vector<std::array<double, 2>> probe_points(const RunConfig& cfg) {
  if (!cfg.probes.empty()) return cfg.probes;
  return {{cfg.domain.box.x(0).mid(), cfg.domain.box.v(0).mid() + 0.25 * cfg.domain.box.v(0).length() / 2.0}};
}

json verdicts_json(const std::vector<Verdict>& verdicts) {
  json out = json::array();
  for (const auto& v : verdicts) out.push_back(to_json(v));
  return out;
}

bool all_passed(const std::vector<Verdict>& verdicts) {
  for (const auto& v : verdicts)
    if (!v.passed) return false;
  return true;
}

int cmd_solve(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  const ProblemSpec spec = product_spec(cfg, "solve");
  const RegularizedSolution sol = solve_regularized(spec, cfg.eps);
  write_field(out / "u.csv", sol.u);
  const NormBundle norms = discrete_norms(sol.u, sol.trace);
  json summary = {{"eps", cfg.eps},
                  {"grid", {cfg.nx, cfg.nv}},
                  {"solver", to_string(cfg.solver.method)},
                  {"iterations", sol.stats.iterations},
                  {"final_residual", sol.stats.final_residual},
                  {"norms",
                   {{"l2", norms.l2},
                    {"l2_h1v", norms.l2_h1v},
                    {"trace_weighted", norms.trace_weighted},
                    {"max_abs", sol.u.max_abs()}}}};
  write_json(out / "summary.json", summary);
  log << "solve: " << sol.stats.iterations << " iterations, residual " << sol.stats.final_residual << '\n';
  return kExitPass;
}

int cmd_viscosity(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  const ProblemSpec spec = product_spec(cfg, "viscosity");
  const ViscosityResult res = run_viscosity_sequence(spec, cfg.k_max, cfg.stop_tol, true);
  write_field(out / "u.csv", res.u);
  write_json(out / "viscosity.json", to_json(res.report));
  log << "viscosity: " << res.report.records.size() << " steps, reached tolerance "
      << (res.report.reached_tol ? "yes" : "no") << ", last increment " << res.report.records.back().increment
      << '\n';
  return kExitPass;
}

std::vector<Verdict> run_verify(const RunConfig& cfg, std::ostream& log) {
  const ProblemSpec spec = product_spec(cfg, "verify");
  const Grid& g = *spec.grid;
  std::vector<Verdict> verdicts;

  const SparseOperator op = assemble(spec.grid, spec.coeffs, 0.0);
  const MMatrixReport mm = check_m_matrix(op.matrix);
  Verdict m = Verdict::make("m_matrix", mm.passed ? 0.0 : 1.0, 0.0, 0.0);
  m.context = {{"max_offdiag", mm.max_offdiag}, {"min_diag", mm.min_diag}, {"min_row_sum", mm.min_row_sum}};
  verdicts.push_back(m);

  const RegularizedSolution zero = solve_regularized(spec, 0.0);
  if (spec.coeffs.f.is_constant() && spec.coeffs.f.constant_value() == 0.0) {
    verdicts.push_back(check_weak_max_principle(zero.u, zero.trace, boundary_data_range(spec)));
  }

  for (int c = 0; c < cfg.verify_cases; ++c) {
    CoefficientField high = spec.coeffs;
    const ScalarField bump = random_smooth_field(cfg.seed, static_cast<std::uint64_t>(c));
    const ScalarField base_g1 = spec.coeffs.g1, base_g2 = spec.coeffs.g2, base_f = spec.coeffs.f;
    auto lift = [bump](const ScalarField& base) {
      return ScalarField::from([base, bump](const PhasePoint& p) { return base(p) + 1.0 + bump(p); }, "raised");
    };
    high.g1 = lift(base_g1);
    high.g2 = lift(base_g2);
    high.f = lift(base_f);
    Verdict v = check_comparison(spec, spec.with_coeffs(high));
    v.name = "comparison_" + std::to_string(c);
    verdicts.push_back(v);
  }

  bool g1_zero = true;
  for (int i = 0; i < g.nx(); ++i)
    for (double vb : {g.v().lo, g.v().hi}) g1_zero = g1_zero && spec.coeffs.g1.at(g.x().node(i), vb) == 0.0;
  if (g1_zero) {
    const double c_p = estimate_poincare_constant(spec.domain.v(0), std::max(cfg.nv, 8));
    for (double eps : {1.0, 1.0 / 16.0, 1.0 / 256.0}) {
      const RegularizedSolution s = solve_regularized(spec, eps);
      Verdict v = audit_energy(s.u, s.trace, eps, spec, c_p);
      v.name = "energy_eps_" + std::to_string(eps);
      verdicts.push_back(v);
    }
  }

  ProblemSpec direct = spec;
  direct.solver.method = SolverMethod::DirectBanded;
  const double eps = cfg.eps;
  const RegularizedSolution exact = solve_regularized(direct, eps);
  for (int c = 0; c < cfg.verify_cases; ++c) {
    Field phi(spec.grid);
    NormalStream rng(cfg.seed ^ 0x9e3779b97f4a7c15ull, static_cast<std::uint64_t>(c));
    for (double& p : phi.values) p = rng.next();
    const double res = check_green_identity(exact.u, exact.trace, spec.coeffs, phi, eps);
    const double norm = discrete_norms(phi).l2;
    Verdict v = Verdict::make("green_identity_" + std::to_string(c), res, 0.0, 1e-8 * norm);
    v.context = {{"eps", eps}, {"phi_l2", norm}};
    verdicts.push_back(v);
  }

  const double c_p = estimate_poincare_constant(spec.domain.v(0), std::max(cfg.nv, 8));
  const double exact_cp = spec.domain.v(0).length() / std::acos(-1.0);
  Verdict p = Verdict::make("poincare_constant", std::abs(c_p - exact_cp) / exact_cp, 0.0, 0.005);
  p.context = {{"c_p", c_p}, {"analytic", exact_cp}, {"nv", std::max(cfg.nv, 8)}};
  verdicts.push_back(p);

  int failed = 0;
  for (const auto& v : verdicts) failed += v.passed ? 0 : 1;
  log << "verify: " << verdicts.size() << " verdicts, " << failed << " failed\n";
  return verdicts;
}

int cmd_verify(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  const std::vector<Verdict> verdicts = run_verify(cfg, log);
  write_json(out / "verdicts.json", {{"verdicts", verdicts_json(verdicts)}, {"passed", all_passed(verdicts)}});
  return all_passed(verdicts) ? kExitPass : kExitCheckFailed;
}

MaskPtr mask_from(const RunConfig& cfg) {
  switch (cfg.domain.type) {
    case DomainConfig::Type::Box:
      return std::make_shared<const DomainMask>(DomainMask::box(cfg.domain.box, cfg.nx, cfg.nv));
    case DomainConfig::Type::Ball:
      return std::make_shared<const DomainMask>(DomainMask::ball(cfg.domain.center, cfg.domain.radius, cfg.nx));
    case DomainConfig::Type::Raster:
      return std::make_shared<const DomainMask>(DomainMask::from_raster(cfg.domain.raster, cfg.domain.box));
  }
  throw ConfigError("unknown domain type");
}

int cmd_perron(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  const MaskPtr mask = mask_from(cfg);
  const CylinderCover cover = CylinderCover::make(*mask, cfg.cover_side);
  const ScalarField& g = cfg.coeffs.g1;
  const PerronResult up = perron_iterate(mask, g, PerronDirection::Upper, cfg.coeffs, cover, cfg.max_sweeps);
  const PerronResult lo = perron_iterate(mask, g, PerronDirection::Lower, cfg.coeffs, cover, cfg.max_sweeps);
  write_mask_field(out / "upper.csv", up.field);
  write_mask_field(out / "lower.csv", lo.field);
  const double gap = resolutivity_gap(up.field, lo.field);
  const double order = min_ordering(up.field, lo.field);
  const bool ordered = order >= -1e-8;
  const bool monotone = up.monotone_violations == 0 && lo.monotone_violations == 0;
  write_json(out / "perron.json", {{"gap", gap},
                                   {"min_upper_minus_lower", order},
                                   {"ordered", ordered},
                                   {"monotone", monotone},
                                   {"connected", mask->is_connected()},
                                   {"inside_nodes", mask->inside_count()},
                                   {"cover_boxes", cover.boxes.size()},
                                   {"upper", {{"sweeps", up.sweeps}, {"converged", up.converged}, {"history", up.gap_history}}},
                                   {"lower", {{"sweeps", lo.sweeps}, {"converged", lo.converged}, {"history", lo.gap_history}}}});
  log << "perron: gap " << gap << ", sweeps " << up.sweeps << '/' << lo.sweeps << '\n';
  if (!up.converged || !lo.converged) {
    log << "perron: sweep limit reached before the 1e-7 tolerance\n";
    return kExitSolver;
  }
  return ordered && monotone ? kExitPass : kExitCheckFailed;
}

int cmd_oracle(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  if (cfg.domain.type != DomainConfig::Type::Box) throw ConfigError("command oracle needs domain.type = box");
  const OracleProblem problem = OracleProblem::make(cfg.coeffs, cfg.domain.box);
  json points = json::array();
  for (const auto& p : probe_points(cfg)) {
    const OracleEstimate e = estimate_solution(PhasePoint::make1(p[0], p[1]), problem, cfg.oracle);
    json entry = to_json(e);
    entry["point"] = {p[0], p[1]};
    points.push_back(entry);
    log << "oracle: (" << p[0] << ", " << p[1] << ") mean " << e.mean << " stderr " << e.std_error << '\n';
  }
  write_json(out / "oracle.json",
             {{"oracle", {{"dt", cfg.oracle.dt}, {"n_paths", cfg.oracle.n_paths}, {"seed", cfg.oracle.seed},
                          {"points", points}}}});
  return kExitPass;
}

int cmd_crosscheck(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  const ProblemSpec spec = product_spec(cfg, "crosscheck");
  const RegularizedSolution sol = solve_regularized(spec, 0.0);
  const OracleProblem problem = OracleProblem::make(cfg.coeffs, cfg.domain.box);
  const double h = spec.grid->h();
  json rows = json::array();
  std::ofstream csv(out / "crosscheck.csv");
  csv << "x,v,pde,mc,stderr,abs_diff,budget,passed\n" << std::setprecision(10);
  bool ok = true;
  for (const auto& p : probe_points(cfg)) {
    const double pde = sample_bilinear(sol.u, p[0], p[1]);
    const OracleEstimate e = estimate_solution(PhasePoint::make1(p[0], p[1]), problem, cfg.oracle);
    const double diff = std::abs(pde - e.mean);
    const double budget = 3.0 * e.std_error + 3.0 * h;
    const bool pass = diff <= budget;
    ok = ok && pass;
    rows.push_back({{"point", {p[0], p[1]}}, {"pde", pde}, {"mc", e.mean}, {"stderr", e.std_error},
                    {"abs_diff", diff}, {"budget", budget}, {"passed", pass}, {"oracle", to_json(e)}});
    csv << p[0] << ',' << p[1] << ',' << pde << ',' << e.mean << ',' << e.std_error << ',' << diff << ','
        << budget << ',' << (pass ? 1 : 0) << '\n';
    log << "crosscheck: (" << p[0] << ", " << p[1] << ") |PDE - MC| = " << diff << " budget " << budget
        << (pass ? " ok" : " FAIL") << '\n';
  }
  write_json(out / "crosscheck.json", {{"rows", rows}, {"passed", ok}});
  return ok ? kExitPass : kExitCheckFailed;
}

int cmd_report(const RunConfig&, const fs::path& out, std::ostream& log) {
  json merged = json::object();
  for (const char* name : {"summary", "viscosity", "verdicts", "perron", "oracle", "crosscheck"}) {
    const fs::path p = out / (std::string(name) + ".json");
    if (!fs::exists(p)) continue;
    std::ifstream in(p);
    merged[name] = json::parse(in);
  }
  if (merged.empty()) throw ConfigError("no command outputs to merge in " + out.string());
  write_json(out / "report.json", merged);
  log << "report: merged " << merged.size() << " outputs\n";
  bool ok = true;
  if (merged.contains("verdicts")) ok = ok && merged["verdicts"].value("passed", true);
  if (merged.contains("crosscheck")) ok = ok && merged["crosscheck"].value("passed", true);
  if (merged.contains("perron")) ok = ok && merged["perron"].value("ordered", true);
  return ok ? kExitPass : kExitCheckFailed;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

}  // namespace

int exit_code_for(const Error& error) {
  switch (error.category()) {
    case ErrorCategory::Config:
    case ErrorCategory::Precondition:
      return kExitConfig;
    case ErrorCategory::Solver:
      return kExitSolver;
    case ErrorCategory::Check:
      return kExitCheckFailed;
  }
  return kExitSolver;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"solve", "viscosity", "verify", "perron",
                                                 "oracle", "crosscheck", "report"};
  return names;
}

json make_manifest(const std::string& command, const RunConfig& cfg) {
  return {{"command", command},
          {"version", kVersion},
          {"config_fnv1a", hex64(fnv1a(cfg.text.empty() ? cfg.raw.dump() : cfg.text))},
          {"config", cfg.raw},
          {"seed", cfg.seed},
          {"oracle_seed", cfg.oracle.seed},
          {"grid", {cfg.nx, cfg.nv}},
          {"solver", {{"method", to_string(cfg.solver.method)}, {"rel_tol", cfg.solver.rel_tol}}},
          {"compiler", __VERSION__},
          {"openmp_max_threads", omp_get_max_threads()}};
}

int run_command(const std::string& command, const RunConfig& cfg, std::ostream& log) {
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), command) == names.end()) {
    throw ConfigError("unknown command: " + command);
  }
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  write_json(out / "manifest.json", make_manifest(command, cfg));
  if (command == "solve") return cmd_solve(cfg, out, log);
  if (command == "viscosity") return cmd_viscosity(cfg, out, log);
  if (command == "verify") return cmd_verify(cfg, out, log);
  if (command == "perron") return cmd_perron(cfg, out, log);
  if (command == "oracle") return cmd_oracle(cfg, out, log);
  if (command == "crosscheck") return cmd_crosscheck(cfg, out, log);
  return cmd_report(cfg, out, log);
}

}  // namespace kfp
