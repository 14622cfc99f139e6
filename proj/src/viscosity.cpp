#include "kfp/viscosity.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>

#include "kfp/assembly.hpp"
#include "kfp/error.hpp"
#include "kfp/norms.hpp"

namespace kfp {

ProblemSpec ProblemSpec::make(const ProductDomain& domain, const CoefficientField& coeffs, int nx, int nv,
                              const SolverSettings& solver, int samples_per_axis) {
  ProblemSpec spec;
  spec.domain = domain;
  spec.coeffs = coeffs;
  spec.grid = build_grid(domain, nx, nv);
  spec.solver = solver;
  spec.assumptions = validate_assumptions(coeffs, domain, samples_per_axis);
  if (!spec.assumptions.ellipticity_passed) {
    throw AssumptionViolated("diffusion is not uniformly elliptic on the samples");
  }
  if (!spec.assumptions.posdiv_passed) {
    throw AssumptionViolated("div_v b is negative somewhere (min " +
                             std::to_string(spec.assumptions.min_div_v_b) + ")");
  }
  return spec;
}

ProblemSpec ProblemSpec::with_coeffs(const CoefficientField& other) const {
  ProblemSpec spec = *this;
  spec.coeffs = other;
  return spec;
}

BoundaryRange boundary_data_range(const ProblemSpec& spec) {
  const Grid& g = *spec.grid;
  double hi = -std::numeric_limits<double>::infinity();
  double lo = std::numeric_limits<double>::infinity();
  auto take = [&](double value) {
    hi = std::max(hi, value);
    lo = std::min(lo, value);
  };
  for (int i = 0; i < g.nx(); ++i) {
    take(spec.coeffs.g1.at(g.x().node(i), g.v().lo));
    take(spec.coeffs.g1.at(g.x().node(i), g.v().hi));
  }
  for (int side = 0; side < 2; ++side)
    for (int j = 0; j < g.nv(); ++j)
      if (g.trace_label(side, j) == BoundaryLabel::Xplus) take(spec.coeffs.g2.at(g.trace_x(side), g.v().node(j)));
  return {hi, lo, std::max(std::abs(hi), std::abs(lo))};
}

RegularizedSolution solve_regularized(const ProblemSpec& spec, double eps, const std::vector<double>& warm) {
  if (eps < 0.0) throw InvalidArgument("viscosity must be non-negative");
  const SparseOperator op = assemble(spec.grid, spec.coeffs, eps);
  SolveResult stats = solve_sparse(op, spec.solver, warm);
  Field u = cells_of(spec.grid, stats.x);
  TraceFunction trace = traces_of(spec.grid, stats.x);
  return {std::move(u), std::move(trace), std::move(stats)};
}

double default_stop_tol(const ProblemSpec& spec) {
  return 1e-7 * (1.0 + boundary_data_range(spec).sup_abs);
}

namespace {

/// Neville evaluation at eps = 0 of the polynomial through (eps_i, x_i).
std::vector<double> extrapolate_to_zero(const std::deque<double>& eps,
                                        const std::deque<std::vector<double>>& xs) {
  std::vector<std::vector<double>> p(xs.begin(), xs.end());
  const std::size_t m = p.size();
  for (std::size_t level = 1; level < m; ++level) {
    for (std::size_t i = 0; i + level < m; ++i) {
      const double ei = eps[i];
      const double ej = eps[i + level];
      for (std::size_t c = 0; c < p[i].size(); ++c) {
        p[i][c] = (ej * p[i][c] - ei * p[i + 1][c]) / (ej - ei);
      }
    }
  }
  return p.front();
}

Field difference(const Field& a, const Field& b) {
  Field d(a.grid);
  for (std::size_t i = 0; i < d.values.size(); ++i) d.values[i] = a.values[i] - b.values[i];
  return d;
}

double max_diff(const Field& a, const Field& b) { return difference(a, b).max_abs(); }

constexpr std::size_t kExtrapolationPoints = 4;

}  // namespace

ViscosityResult run_viscosity_sequence(const ProblemSpec& spec, int k_max, double stop_tol,
                                       bool cross_check) {
  if (k_max < 2) throw InvalidArgument("k_max must be at least 2");
  if (stop_tol <= 0.0) stop_tol = default_stop_tol(spec);
  const GridPtr& grid = spec.grid;

  ViscosityReport report;
  report.stop_tol = stop_tol;
  std::vector<double> warm;
  std::optional<RegularizedSolution> prev;
  std::deque<double> recent_eps;
  std::deque<std::vector<double>> recent;
  int stagnant = 0;

  for (int k = 1; k <= k_max; ++k) {
    const double eps = 1.0 / (static_cast<double>(k) * k);
    RegularizedSolution cur = solve_regularized(spec, eps, warm);
    warm = cur.stats.x;
    recent_eps.push_back(eps);
    recent.push_back(cur.stats.x);
    if (recent.size() > kExtrapolationPoints) {
      recent_eps.pop_front();
      recent.pop_front();
    }

    ViscosityRecord rec;
    rec.k = k;
    rec.eps = eps;
    rec.l2_h1v = discrete_norms(cur.u).l2_h1v;
    rec.viscous_energy = std::sqrt(eps * grad_x_squared(cur.u, cur.trace));
    rec.iterations = cur.stats.iterations;
    rec.residual = cur.stats.final_residual;
    if (prev) {
      rec.increment = discrete_norms(difference(cur.u, prev->u)).l2_h1v;
      TraceFunction dt(grid);
      for (std::size_t i = 0; i < dt.values.size(); ++i) dt.values[i] = cur.trace.values[i] - prev->trace.values[i];
      rec.trace_increment = std::sqrt(trace_integral(dt, [](double vn) { return std::abs(vn); }));
      const double last_incr = report.records.back().increment;
      stagnant = (k > 2 && rec.increment >= last_incr && rec.increment > stop_tol) ? stagnant + 1 : 0;
    }
    report.records.push_back(rec);
    prev = std::move(cur);

    if (k >= 2 && rec.increment < stop_tol) {
      report.reached_tol = true;
      break;
    }
    if (stagnant >= kNoProgressRun) {
      throw NoProgress("increments stopped decreasing above stop_tol at k = " + std::to_string(k));
    }
  }

  ViscosityResult result{prev->u, prev->trace, prev->u, prev->trace,
                         cells_of(grid, extrapolate_to_zero(recent_eps, recent)), std::move(report)};
  ViscosityReport& rep = result.report;
  const Grid& g = *grid;
  for (int side = 0; side < 2; ++side) {
    for (int j = 0; j < g.nv(); ++j) {
      if (g.trace_label(side, j) != BoundaryLabel::Xplus) continue;
      const double g2 = spec.coeffs.g2.at(g.trace_x(side), g.v().node(j));
      rep.inflow_trace_gap = std::max(rep.inflow_trace_gap, std::abs(result.trace(side, j) - g2));
      result.trace(side, j) = g2;
    }
  }
  const NormBundle terminal = discrete_norms(result.u);
  rep.terminal_l2 = terminal.l2;
  rep.terminal_l2_h1v = terminal.l2_h1v;

  if (cross_check) {
    const RegularizedSolution zero = solve_regularized(spec, 0.0, warm);
    rep.terminal_vs_direct = max_diff(result.last_u, zero.u);
    rep.extrapolated_vs_direct = max_diff(result.extrapolated, zero.u);
    rep.direct_checked = true;
  }
  return result;
}

nlohmann::json to_json(const ViscosityReport& report) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : report.records) {
    records.push_back({{"k", r.k},
                       {"eps", r.eps},
                       {"l2_h1v", r.l2_h1v},
                       {"increment", r.increment},
                       {"trace_increment", r.trace_increment},
                       {"sqrt_eps_grad_x", r.viscous_energy},
                       {"iterations", r.iterations},
                       {"residual", r.residual}});
  }
  nlohmann::json out = {{"records", records},
                        {"stop_tol", report.stop_tol},
                        {"reached_tol", report.reached_tol},
                        {"terminal", {{"l2", report.terminal_l2}, {"l2_h1v", report.terminal_l2_h1v}}},
                        {"inflow_trace_gap", report.inflow_trace_gap}};
  if (report.direct_checked) {
    out["terminal_vs_direct"] = report.terminal_vs_direct;
    out["extrapolated_vs_direct"] = report.extrapolated_vs_direct;
  }
  return out;
}

}  // namespace kfp
