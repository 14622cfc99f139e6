#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "kfp/checks.hpp"
#include "kfp/error.hpp"

using namespace kfp;
using doctest::Approx;

namespace {

const ProductDomain kBox = ProductDomain::unit_box();

ScalarField pointwise_min(ScalarField a, ScalarField b) {
  return ScalarField::from([a, b](const PhasePoint& p) { return std::min(a(p), b(p)); });
}

}  // namespace

TEST_CASE("Poincare constant against the analytic eigenvalue") {
  const double cp = estimate_poincare_constant({-1.0, 1.0}, 128);
  CHECK(std::abs(cp - 2.0 / std::numbers::pi) < 0.005 * 2.0 / std::numbers::pi);
  CHECK(estimate_poincare_constant({0.0, std::numbers::pi}, 256) == Approx(1.0).epsilon(2e-3));
  const double base = estimate_poincare_constant({0.0, 2.0}, 64);
  CHECK(estimate_poincare_constant({0.0, 6.0}, 64) == Approx(3.0 * base).epsilon(1e-9));
  // refinement moves towards the limit
  CHECK(std::abs(estimate_poincare_constant({-1.0, 1.0}, 256) - 2.0 / std::numbers::pi) <
        std::abs(estimate_poincare_constant({-1.0, 1.0}, 32) - 2.0 / std::numbers::pi));
  CHECK_THROWS_AS(estimate_poincare_constant({-1.0, 1.0}, 4), InvalidArgument);
}

TEST_CASE("weak maximum principle") {
  SUBCASE("unit data") {
    const ProblemSpec spec = ProblemSpec::make(kBox, make_preset("constant", 1), 20, 20);
    const RegularizedSolution s = solve_regularized(spec, 0.0);
    const Verdict v = check_weak_max_principle(s.u, s.trace, boundary_data_range(spec));
    CHECK(v.passed);
    CHECK(v.lhs == Approx(1.0));
    CHECK(v.rhs == Approx(1.0));
  }
  SUBCASE("g = v") {
    const auto g = ScalarField::from([](const PhasePoint& p) { return p.v[0]; });
    const ProblemSpec spec = ProblemSpec::make(kBox, CoefficientField::isotropic(1, 0.5, g), 24, 24);
    const RegularizedSolution s = solve_regularized(spec, 0.0);
    const Verdict v = check_weak_max_principle(s.u, s.trace, boundary_data_range(spec));
    CHECK(v.passed);
    CHECK(v.lhs <= 1.0 + 1e-8);
  }
  SUBCASE("random data") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto c = make_preset("identity_drift", 1);
      c.g1 = c.g2 = random_smooth_field(seed, 3);
      const ProblemSpec spec = ProblemSpec::make(kBox, c, 24, 24);
      const RegularizedSolution s = solve_regularized(spec, 0.0);
      CHECK(check_weak_max_principle(s.u, s.trace, boundary_data_range(spec)).passed);
    }
  }
}

TEST_CASE("comparison principle") {
  const ProblemSpec low = ProblemSpec::make(kBox, make_preset("unit_box_half", 1), 24, 24);
  SUBCASE("identical problems") {
    const Verdict v = check_comparison(low, low);
    CHECK(v.passed);
    CHECK(std::abs(v.lhs) < 1e-10);
  }
  SUBCASE("shift by one") {
    CoefficientField up = low.coeffs;
    const ScalarField g1 = up.g1;
    up.g1 = up.g2 = ScalarField::from([g1](const PhasePoint& p) { return g1(p) + 1.0; });
    const Verdict v = check_comparison(low, low.with_coeffs(up));
    CHECK(v.passed);
    CHECK(v.lhs == Approx(-1.0).epsilon(1e-8));
  }
  SUBCASE("pointwise minimum of random data") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      const ScalarField g = random_smooth_field(seed, 0);
      const ScalarField h = random_smooth_field(seed, 1);
      CoefficientField hi = low.coeffs, lo = low.coeffs;
      hi.g1 = hi.g2 = g;
      lo.g1 = lo.g2 = pointwise_min(g, h);
      CHECK(check_comparison(low.with_coeffs(lo), low.with_coeffs(hi)).passed);
    }
  }
  SUBCASE("unordered data is refused") {
    CoefficientField down = low.coeffs;
    down.g1 = down.g2 = ScalarField::constant(-5.0);
    CHECK_THROWS_AS(check_comparison(low, low.with_coeffs(down)), PreconditionViolated);
  }
}

TEST_CASE("energy audit") {
  SUBCASE("zero data") {
    const auto c = CoefficientField::isotropic(1, 0.5, ScalarField::constant(0.0));
    const ProblemSpec spec = ProblemSpec::make(kBox, c, 16, 16);
    const RegularizedSolution s = solve_regularized(spec, 0.1);
    const Verdict v = audit_energy(s.u, s.trace, 0.1, spec, estimate_poincare_constant({-1.0, 1.0}, 16));
    CHECK(v.passed);
    CHECK(v.lhs == 0.0);
    CHECK(v.rhs == 0.0);
  }
  for (const char* name : {"boundary_driven", "source_driven"}) {
    const ProblemSpec spec = ProblemSpec::make(kBox, make_preset(name, 1), 32, 32);
    const double cp = estimate_poincare_constant({-1.0, 1.0}, 32);
    for (double eps : {1.0, 1.0 / 64.0}) {
      const RegularizedSolution s = solve_regularized(spec, eps);
      const Verdict v = audit_energy(s.u, s.trace, eps, spec, cp);
      CHECK_MESSAGE(v.passed, name << " eps " << eps << ": " << v.lhs << " vs " << v.rhs);
    }
  }
  const ProblemSpec bad = ProblemSpec::make(kBox, make_preset("constant", 1), 16, 16);
  const RegularizedSolution s = solve_regularized(bad, 0.1);
  CHECK_THROWS_AS(audit_energy(s.u, s.trace, 0.1, bad, 0.6), PreconditionViolated);
}

TEST_CASE("random smooth data") {
  const ScalarField a = random_smooth_field(4, 2);
  const ScalarField b = random_smooth_field(4, 2);
  const ScalarField c = random_smooth_field(4, 3);
  bool differs = false;
  for (int k = 0; k < 200; ++k) {
    const PhasePoint p = PhasePoint::make1(std::fmod(0.37 * k, 1.0), std::fmod(0.73 * k, 2.0) - 1.0);
    CHECK(std::abs(a(p)) <= 1.0);
    CHECK(a(p) == b(p));
    differs = differs || a(p) != c(p);
  }
  CHECK(differs);
}

TEST_CASE("verdict serialization") {
  const Verdict v = Verdict::make("x", 1.0, 0.5, 0.6);
  CHECK(v.passed);
  const auto j = to_json(v);
  CHECK(j["name"] == "x");
  CHECK(j["passed"] == true);
  CHECK_FALSE(Verdict::make("y", 1.0, 0.5, 0.1).passed);
}
