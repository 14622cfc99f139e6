#include "kfp/checks.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "kfp/assembly.hpp"
#include "kfp/error.hpp"
#include "kfp/norms.hpp"
#include "kfp/philox.hpp"

namespace kfp {

Verdict Verdict::make(std::string name, double lhs, double rhs, double slack) {
  Verdict v;
  v.name = std::move(name);
  v.lhs = lhs;
  v.rhs = rhs;
  v.slack = slack;
  v.passed = lhs <= rhs + slack;
  return v;
}

nlohmann::json to_json(const Verdict& verdict) {
  return {{"name", verdict.name},       {"lhs", verdict.lhs},
          {"rhs", verdict.rhs},         {"slack", verdict.slack},
          {"passed", verdict.passed},   {"context", verdict.context}};
}

double estimate_poincare_constant(const Interval& v, int nv) {
  if (nv < 8) throw InvalidArgument("Poincare estimate needs nv >= 8");
  const double h = v.length() / nv;
  const auto n = static_cast<std::size_t>(nv);
  // Tridiagonal -u'' with ghost values reflected oddly about the faces.
  std::vector<double> diag(n, 2.0 / (h * h));
  diag.front() = diag.back() = 3.0 / (h * h);
  const double off = -1.0 / (h * h);

  // Thomas factorization, reused by every inverse iteration.
  std::vector<double> c_prime(n), d_inv(n);
  d_inv[0] = 1.0 / diag[0];
  c_prime[0] = off * d_inv[0];
  for (std::size_t i = 1; i < n; ++i) {
    d_inv[i] = 1.0 / (diag[i] - off * c_prime[i - 1]);
    c_prime[i] = off * d_inv[i];
  }
  auto solve = [&](std::vector<double>& x) {
    x[0] *= d_inv[0];
    for (std::size_t i = 1; i < n; ++i) x[i] = (x[i] - off * x[i - 1]) * d_inv[i];
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= c_prime[i] * x[i + 1];
  };

  std::vector<double> x(n, 1.0);
  double lambda = 0.0;
  std::vector<double> history;
  for (int it = 0; it < 10000; ++it) {
    double norm = 0.0;
    for (double xi : x) norm += xi * xi;
    norm = std::sqrt(norm);
    for (double& xi : x) xi /= norm;
    std::vector<double> y = x;
    solve(y);
    double rayleigh = 0.0;
    for (std::size_t i = 0; i < n; ++i) rayleigh += x[i] * y[i];
    const double next = 1.0 / rayleigh;
    history.push_back(next);
    x = std::move(y);
    if (it > 0 && std::abs(next - lambda) <= 1e-10 * next) return 1.0 / std::sqrt(next);
    lambda = next;
  }
  throw NotConverged("inverse power iteration for the Poincare constant", history);
}

Verdict check_weak_max_principle(const Field& u, const TraceFunction& trace, const BoundaryRange& g) {
  const double sup_u = u.max_abs();
  double sup_trace = 0.0;
  for (std::size_t i = 0; i < trace.values.size(); ++i) {
    if (trace.labels[i] == BoundaryLabel::Xminus) sup_trace = std::max(sup_trace, std::abs(trace.values[i]));
  }
  Verdict v = Verdict::make("weak_max_principle", std::max(sup_u, sup_trace), g.sup_abs,
                            1e-8 * (1.0 + g.sup_abs));
  v.context = {{"sup_u", sup_u}, {"sup_outflow_trace", sup_trace}, {"sup_g", g.sup_abs}};
  return v;
}

namespace {

void require_ordered(const ProblemSpec& low, const ProblemSpec& high) {
  const Grid& g = *low.grid;
  auto fail = [](const char* what) { throw PreconditionViolated(std::string("comparison data not ordered: ") + what); };
  for (int i = 0; i < g.nx(); ++i) {
    const double x = g.x().node(i);
    for (int j = 0; j < g.nv(); ++j) {
      const double v = g.v().node(j);
      if (low.coeffs.f.at(x, v) > high.coeffs.f.at(x, v)) fail("f");
    }
    for (double vb : {g.v().lo, g.v().hi}) {
      if (low.coeffs.g1.at(x, vb) > high.coeffs.g1.at(x, vb)) fail("g1");
    }
  }
  for (int side = 0; side < 2; ++side) {
    for (int j = 0; j < g.nv(); ++j) {
      if (g.trace_label(side, j) != BoundaryLabel::Xplus) continue;
      const double x = g.trace_x(side);
      const double v = g.v().node(j);
      if (low.coeffs.g2.at(x, v) > high.coeffs.g2.at(x, v)) fail("g2");
    }
  }
}

}  // namespace

Verdict check_comparison(const ProblemSpec& low, const ProblemSpec& high, bool enforce_order) {
  if (low.grid->nx() != high.grid->nx() || low.grid->nv() != high.grid->nv()) {
    throw PreconditionViolated("comparison specs must share a grid");
  }
  if (enforce_order) require_ordered(low, high);
  const SparseOperator op = assemble(low.grid, low.coeffs, 0.0);
  const std::vector<double> rhs_high = assemble_rhs(low.grid, high.coeffs, 0.0);
  const SolveResult s_low = solve_sparse(op.matrix, op.rhs, low.solver);
  const SolveResult s_high = solve_sparse(op.matrix, rhs_high, low.solver, s_low.x);

  const Grid& g = *low.grid;
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.nv(); ++j) {
      const auto r = static_cast<std::size_t>(g.unknown_of_cell(i, j));
      worst = std::max(worst, s_low.x[r] - s_high.x[r]);
    }
  for (int side = 0; side < 2; ++side)
    for (int j = 0; j < g.nv(); ++j) {
      if (g.trace_label(side, j) != BoundaryLabel::Xminus) continue;
      const auto r = static_cast<std::size_t>(g.unknown_of_trace(side, j));
      worst = std::max(worst, s_low.x[r] - s_high.x[r]);
    }
  Verdict v = Verdict::make("comparison", worst, 0.0, 1e-8);
  v.context = {{"grid", {g.nx(), g.nv()}}, {"iterations", {s_low.iterations, s_high.iterations}}};
  return v;
}

Verdict audit_energy(const Field& u, const TraceFunction& trace, double eps, const ProblemSpec& spec,
                     double c_p) {
  const Grid& g = *spec.grid;
  for (int i = 0; i < g.nx(); ++i) {
    for (double vb : {g.v().lo, g.v().hi}) {
      if (spec.coeffs.g1.at(g.x().node(i), vb) != 0.0) {
        throw PreconditionViolated("energy audit requires g1 = 0");
      }
    }
  }
  const double lambda = spec.assumptions.lambda_est;
  const double u2 = std::pow(discrete_norms(u).l2, 2);
  const double gx = grad_x_squared(u, trace);
  const double gv = grad_v_squared(u);
  const double tr = trace_integral(trace, [](double vn) { return std::abs(vn); });
  const double lhs = eps * gx + 0.25 * lambda * gv + lambda / (8.0 * c_p) * u2 + 0.25 * tr;

  double f2 = 0.0;
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.nv(); ++j) {
      const double f = spec.coeffs.f.at(g.x().node(i), g.v().node(j));
      f2 += g.x().weight[static_cast<std::size_t>(i)] * g.v().weight[static_cast<std::size_t>(j)] * f * f;
    }
  double inflow = 0.0;
  for (int side = 0; side < 2; ++side)
    for (int j = 0; j < g.nv(); ++j) {
      const double vn = g.v().node(j) * Grid::trace_normal(side);
      if (vn <= 0.0) continue;
      const double g2 = spec.coeffs.g2.at(g.trace_x(side), g.v().node(j));
      inflow += g.v().weight[static_cast<std::size_t>(j)] * vn * g2 * g2;
    }
  const double rhs = 2.0 * c_p / lambda * f2 + inflow;
  Verdict v = Verdict::make("energy", lhs, rhs, 0.05 * rhs);
  v.context = {{"eps", eps},          {"grid", {g.nx(), g.nv()}}, {"c_p", c_p},
               {"grad_x_sq", gx},      {"grad_v_sq", gv},          {"l2_sq", u2},
               {"trace_weighted", tr}, {"f_sq", f2},               {"inflow", inflow}};
  return v;
}

ScalarField random_smooth_field(std::uint64_t seed, std::uint64_t index) {
  NormalStream rng(seed, index);
  struct Wave {
    double amp, kx, kv, phase;
  };
  std::array<Wave, 3> waves{};
  for (auto& w : waves) {
    w.amp = (2.0 * rng.uniform() - 1.0) / 3.0;
    w.kx = 6.0 * rng.uniform() - 3.0;
    w.kv = 6.0 * rng.uniform() - 3.0;
    w.phase = 6.283185307179586 * rng.uniform();
  }
  return ScalarField::from(
      [waves](const PhasePoint& p) {
        double out = 0.0;
        for (const auto& w : waves) out += w.amp * std::sin(w.kx * p.x[0] + w.kv * p.v[0] + w.phase);
        return out;
      },
      "random waves");
}

}  // namespace kfp
