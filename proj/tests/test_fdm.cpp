#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "kfp/assembly.hpp"
#include "kfp/checks.hpp"
#include "kfp/error.hpp"
#include "kfp/grid.hpp"
#include "kfp/norms.hpp"
#include "kfp/philox.hpp"
#include "kfp/viscosity.hpp"

using namespace kfp;
using doctest::Approx;

namespace {

const ProductDomain kBox = ProductDomain::unit_box();

std::vector<double> direct_solve(const SparseOperator& op) {
  SolverSettings s;
  s.method = SolverMethod::DirectBanded;
  return solve_sparse(op, s).x;
}

Field random_phi(const GridPtr& g, std::uint64_t stream) {
  Field phi(g);
  NormalStream rng(99, stream);
  for (double& p : phi.values) p = rng.next();
  return phi;
}

}  // namespace

TEST_CASE("cell-centred nodes") {
  const GridPtr g = build_grid(kBox, 4, 4);
  CHECK(g->hx() == Approx(0.25));
  const double xs[] = {0.125, 0.375, 0.625, 0.875};
  const double vs[] = {-0.75, -0.25, 0.25, 0.75};
  for (int k = 0; k < 4; ++k) {
    CHECK(g->x().node(k) == Approx(xs[k]));
    CHECK(g->v().node(k) == Approx(vs[k]));
  }
  double sum = 0.0;
  for (double w : g->v().weight) sum += w;
  CHECK(sum == Approx(2.0));
}

TEST_CASE("odd velocity counts are staggered away from zero") {
  for (int nv : {5, 7, 33}) {
    const GridPtr g = build_grid(kBox, 4, nv);
    double sum = 0.0;
    for (int j = 0; j < nv; ++j) {
      CHECK(std::abs(g->v().node(j)) >= 0.25 * g->hv() - 1e-12);
      CHECK(g->v().node(j) > -1.0);
      CHECK(g->v().node(j) < 1.0);
      sum += g->v().weight[static_cast<std::size_t>(j)];
    }
    CHECK(sum == Approx(2.0));
  }
}

TEST_CASE("grid preconditions") {
  CHECK_THROWS_AS(build_grid(kBox, 3, 8), TooCoarse);
  CHECK_THROWS_AS(build_grid(kBox, 8, 2), TooCoarse);
  const ProductDomain d2({{0.0, 1.0}, {0.0, 1.0}}, {{-1.0, 1.0}, {-1.0, 1.0}});
  CHECK_THROWS_AS(build_grid(d2, 8, 8), InvalidArgument);
}

TEST_CASE("trace labels follow the sign of v.n") {
  const GridPtr g = build_grid(kBox, 4, 6);
  for (int j = 0; j < g->nv(); ++j) {
    const bool up = g->v().node(j) > 0.0;
    CHECK(g->trace_label(1, j) == (up ? BoundaryLabel::Xplus : BoundaryLabel::Xminus));
    CHECK(g->trace_label(0, j) == (up ? BoundaryLabel::Xminus : BoundaryLabel::Xplus));
  }
}

TEST_CASE("constant data is an exact solution of the assembled system") {
  const GridPtr g = build_grid(kBox, 12, 10);
  for (double eps : {0.0, 0.01, 1.0}) {
    const auto c = CoefficientField::isotropic(1, 0.7, ScalarField::constant(2.5));
    const SparseOperator op = assemble(g, c, eps);
    std::vector<double> x(op.rhs.size(), 2.5), r;
    kernels::residual(op.matrix, x, op.rhs, r);
    CHECK(kernels::norm_inf(r) < 1e-12);
  }
}

TEST_CASE("data linear in v is reproduced exactly") {
  const GridPtr g = build_grid(kBox, 16, 12);
  const double alpha = 0.8;
  const auto lin = ScalarField::from([alpha](const PhasePoint& p) { return alpha * p.v[0]; });
  for (double eps : {0.0, 0.05}) {
    const SparseOperator op = assemble(g, CoefficientField::isotropic(1, 0.5, lin), eps);
    const Field u = cells_of(g, direct_solve(op));
    double err = 0.0;
    for (int i = 0; i < g->nx(); ++i)
      for (int j = 0; j < g->nv(); ++j) err = std::max(err, std::abs(u(i, j) - alpha * g->v().node(j)));
    CHECK(err < 1e-10);
  }
}

TEST_CASE("manufactured solution converges at first order") {
  const double pi = std::numbers::pi;
  auto exact = [pi](double x, double v) { return std::sin(pi * x) * std::cos(pi * v / 2.0); };
  auto c = CoefficientField::isotropic(1, 1.0, ScalarField::from([exact](const PhasePoint& p) {
                                         return exact(p.x[0], p.v[0]);
                                       }));
  // f = -(u_vv + v u_x)
  c.f = ScalarField::from([pi](const PhasePoint& p) {
    const double x = p.x[0], v = p.v[0];
    return (pi * pi / 4.0) * std::sin(pi * x) * std::cos(pi * v / 2.0) -
           v * pi * std::cos(pi * x) * std::cos(pi * v / 2.0);
  });
  std::vector<double> h, err;
  for (int n : {16, 32, 64}) {
    const GridPtr g = build_grid(kBox, n, n);
    const Field u = cells_of(g, direct_solve(assemble(g, c, 0.0)));
    double e = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) e = std::max(e, std::abs(u(i, j) - exact(g->x().node(i), g->v().node(j))));
    h.push_back(g->h());
    err.push_back(e);
  }
  // least-squares slope of log err against log h
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    mx += std::log(h[k]) / 3.0;
    my += std::log(err[k]) / 3.0;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    sxy += (std::log(h[k]) - mx) * (std::log(err[k]) - my);
    sxx += (std::log(h[k]) - mx) * (std::log(h[k]) - mx);
  }
  const double rate = sxy / sxx;
  MESSAGE("manufactured errors " << err[0] << " " << err[1] << " " << err[2] << ", rate " << rate);
  CHECK(rate >= 0.8);
  CHECK(err[2] < err[1]);
  CHECK(err[1] < err[0]);
}

TEST_CASE("assembled operators are M-matrices") {
  const GridPtr g = build_grid(kBox, 16, 16);
  for (const auto& name : preset_names()) {
    for (double eps : {0.0, 0.1}) {
      const MMatrixReport r = check_m_matrix(assemble(g, make_preset(name, 1), eps).matrix);
      CHECK_MESSAGE(r.passed, name << " eps " << eps);
    }
  }
}

TEST_CASE("parallel and serial assembly agree") {
  const GridPtr g = build_grid(kBox, 24, 20);
  const auto c = make_preset("identity_drift", 1);
  const SparseOperator a = assemble(g, c, 0.01, kPartAll, Exec::Serial);
  const SparseOperator b = assemble(g, c, 0.01, kPartAll, Exec::Parallel);
  CHECK(a.matrix.val == b.matrix.val);
  CHECK(a.matrix.col == b.matrix.col);
  CHECK(a.rhs == b.rhs);
}

TEST_CASE("discrete norms") {
  const GridPtr g = build_grid(kBox, 16, 16);
  CHECK(discrete_norms(Field(g, 1.0)).l2 == Approx(std::sqrt(2.0)));
  const NormBundle zero = discrete_norms(Field(g, 0.0), TraceFunction(g, 0.0));
  CHECK(zero.l2 == 0.0);
  CHECK(zero.l2_h1v == 0.0);
  CHECK(zero.trace_weighted == 0.0);
  for (int n : {16, 64}) {
    const GridPtr gn = build_grid(kBox, n, n);
    Field u(gn);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) u(i, j) = gn->v().node(j);
    const double l2sq = std::pow(discrete_norms(u).l2, 2);
    CHECK(std::abs(l2sq - 2.0 / 3.0) < 0.02 * 2.0 / 3.0);
  }
}

TEST_CASE("Green identity") {
  const GridPtr g = build_grid(kBox, 20, 16);
  SUBCASE("constant solution, arbitrary phi") {
    const auto c = CoefficientField::isotropic(1, 0.5, ScalarField::constant(1.5));
    for (double eps : {0.0, 0.1}) {
      const double r = check_green_identity(Field(g, 1.5), TraceFunction(g, 1.5), c, random_phi(g, 0), eps);
      CHECK(std::abs(r) < 1e-10);
    }
  }
  SUBCASE("solver output, random phi") {
    ProblemSpec spec = ProblemSpec::make(kBox, make_preset("identity_drift", 1), 20, 16);
    spec.solver.method = SolverMethod::DirectBanded;
    for (double eps : {0.0, 0.02}) {
      const RegularizedSolution s = solve_regularized(spec, eps);
      for (std::uint64_t k = 0; k < 5; ++k) {
        const Field phi = random_phi(spec.grid, k);
        const double r = check_green_identity(s.u, s.trace, spec.coeffs, phi, eps);
        CHECK(std::abs(r) < 1e-8 * discrete_norms(phi).l2);
      }
    }
  }
  SUBCASE("zero test vector") {
    const ProblemSpec spec = ProblemSpec::make(kBox, make_preset("unit_box_source", 1), 20, 16);
    const RegularizedSolution s = solve_regularized(spec, 0.0);
    CHECK(check_green_identity(s.u, s.trace, spec.coeffs, Field(spec.grid, 0.0)) == 0.0);
  }
  SUBCASE("transport summation by parts") {
    std::vector<double> u(static_cast<std::size_t>(g->unknown_count()));
    NormalStream rng(5, 0);
    for (double& x : u) x = rng.next();
    CHECK(std::abs(transport_sbp_defect(g, u, random_phi(g, 1))) < 1e-10);
  }
}

TEST_CASE("field CSV and interpolation") {
  const GridPtr g = build_grid(kBox, 4, 4);
  Field u(g);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) u(i, j) = 2.0 * g->x().node(i) - g->v().node(j);
  std::ostringstream os;
  write_field_csv(os, u);
  CHECK(os.str().rfind("x,v,u\n", 0) == 0);
  CHECK(sample_bilinear(u, 0.3, 0.1) == Approx(0.5));
  CHECK(sample_bilinear(u, 0.0, 0.0) == Approx(2.0 * 0.125));
}
