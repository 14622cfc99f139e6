#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kfp/assembly.hpp"
#include "kfp/error.hpp"
#include "kfp/krylov.hpp"
#include "kfp/viscosity.hpp"

using namespace kfp;

namespace {

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

const SolverMethod kAll[] = {SolverMethod::BiCGStab, SolverMethod::GMRES, SolverMethod::DirectBanded};

}  // namespace

TEST_CASE("method names") {
  CHECK(parse_solver_method("bicgstab") == SolverMethod::BiCGStab);
  CHECK(parse_solver_method("gmres") == SolverMethod::GMRES);
  CHECK(parse_solver_method("direct") == SolverMethod::DirectBanded);
  CHECK(to_string(SolverMethod::GMRES) == "gmres");
  CHECK_THROWS_AS(parse_solver_method("cg"), ConfigError);
}

TEST_CASE("settings validation") {
  SolverSettings s;
  CHECK(s.iteration_limit(10000) == 20 * 100 + 200);
  s.rel_tol = 0.0;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  s = SolverSettings{};
  s.restart = 0;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
}

TEST_CASE("identity system solves in at most one iteration") {
  const CsrMatrix id = CsrMatrix::identity(50);
  std::vector<double> r(50);
  for (int k = 0; k < 50; ++k) r[static_cast<std::size_t>(k)] = std::sin(k);
  for (SolverMethod m : kAll) {
    SolverSettings s;
    s.method = m;
    const SolveResult out = solve_sparse(id, r, s);
    CHECK(out.iterations <= 1);
    CHECK(max_diff(out.x, r) < 1e-14);
  }
}

TEST_CASE("constant data gives the constant solution") {
  const GridPtr g = build_grid(ProductDomain::unit_box(), 24, 24);
  const SparseOperator op = assemble(g, CoefficientField::isotropic(1, 0.5, ScalarField::constant(3.0)), 0.0);
  for (SolverMethod m : kAll) {
    SolverSettings s;
    s.method = m;
    const SolveResult out = solve_sparse(op, s);
    CHECK(out.final_residual < s.rel_tol);
    CHECK(max_diff(out.x, std::vector<double>(out.x.size(), 3.0)) < 1e-8);
  }
}

TEST_CASE("Krylov methods agree with the banded direct solve") {
  const GridPtr g = build_grid(ProductDomain::unit_box(), 64, 64);
  auto c = CoefficientField::isotropic(1, 1.0, ScalarField::from([](const PhasePoint& p) {
                                         return p.x[0] * p.x[0] - p.v[0];
                                       }));
  c.f = ScalarField::constant(1.0);
  const SparseOperator op = assemble(g, c, 0.01);
  SolverSettings direct;
  direct.method = SolverMethod::DirectBanded;
  const std::vector<double> ref = solve_sparse(op, direct).x;
  for (SolverMethod m : {SolverMethod::BiCGStab, SolverMethod::GMRES}) {
    SolverSettings s;
    s.method = m;
    s.rel_tol = 1e-12;
    const SolveResult out = solve_sparse(op, s);
    CHECK(out.final_residual < 1e-10);
    CHECK(max_diff(out.x, ref) < 1e-8);
    CHECK(out.history.size() >= 1);
  }
  CHECK(bandwidth(op.matrix) == g->nv());
}

TEST_CASE("iteration cap raises NotConverged with its history") {
  const GridPtr g = build_grid(ProductDomain::unit_box(), 48, 48);
  const SparseOperator op = assemble(g, make_preset("unit_box_half", 1), 0.0);
  SolverSettings s;
  s.max_iter = 2;
  s.rel_tol = 1e-12;
  try {
    solve_sparse(op, s);
    FAIL("expected NotConverged");
  } catch (const NotConverged& e) {
    CHECK(!e.residual_history().empty());
  }
}

TEST_CASE("singular matrix is reported by the direct path") {
  CsrMatrix a;
  a.rows = a.cols = 2;
  a.row_ptr = {0, 2, 4};
  a.col = {0, 1, 0, 1};
  a.val = {1.0, 1.0, 1.0, 1.0};
  SolverSettings s;
  s.method = SolverMethod::DirectBanded;
  CHECK_THROWS_AS(solve_sparse(a, {1.0, 2.0}, s), SingularPivot);
}

TEST_CASE("serial and parallel solves agree bitwise") {
  const GridPtr g = build_grid(ProductDomain::unit_box(), 32, 32);
  const SparseOperator op = assemble(g, make_preset("identity_drift", 1), 0.0);
  for (SolverMethod m : {SolverMethod::BiCGStab, SolverMethod::GMRES}) {
    SolverSettings s;
    s.method = m;
    s.exec = Exec::Serial;
    const auto a = solve_sparse(op, s);
    s.exec = Exec::Parallel;
    const auto b = solve_sparse(op, s);
    CHECK(a.x == b.x);
    CHECK(a.iterations == b.iterations);
  }
}
