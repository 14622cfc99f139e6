#include "kfp/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "kfp/error.hpp"

namespace kfp {

ScalarField ScalarField::constant(double value) {
  ScalarField field;
  field.constant_ = true;
  field.value_ = value;
  field.description_ = std::to_string(value);
  return field;
}

ScalarField ScalarField::from(Fn fn, std::string description) {
  ScalarField field;
  field.fn_ = std::move(fn);
  field.constant_ = false;
  field.description_ = std::move(description);
  return field;
}

ScalarField ScalarField::from_expression(const Expression& expr) {
  if (expr.is_constant()) {
    ScalarField field = constant(expr(PhasePoint{}));
    field.description_ = expr.text();
    return field;
  }
  return from([expr](const PhasePoint& p) { return expr(p); }, expr.text());
}

Matrix2 CoefficientField::diffusion(const PhasePoint& p) const {
  Matrix2 a{};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[i][j] = A[i][j](p);
  return a;
}

Vector2 CoefficientField::drift(const PhasePoint& p) const {
  Vector2 out{};
  for (int i = 0; i < n; ++i) out[i] = b[i](p);
  return out;
}

bool CoefficientField::constant_diffusion() const {
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!A[i][j].is_constant()) return false;
  return true;
}

CoefficientField CoefficientField::isotropic(int n, double a, ScalarField g) {
  CoefficientField c;
  c.n = n;
  for (int i = 0; i < kMaxDim; ++i) {
    for (int j = 0; j < kMaxDim; ++j) c.A[i][j] = ScalarField::constant(i == j ? a : 0.0);
    c.b[i] = ScalarField::constant(0.0);
  }
  c.f = ScalarField::constant(0.0);
  c.g1 = g;
  c.g2 = g;
  return c;
}

std::array<double, kMaxDim> symmetric_eigenvalues(const Matrix2& a, int n) {
  if (n == 1) return {a[0][0], a[0][0]};
  const double mean = 0.5 * (a[0][0] + a[1][1]);
  const double half_diff = 0.5 * (a[0][0] - a[1][1]);
  const double radius = std::hypot(half_diff, a[0][1]);
  return {mean - radius, mean + radius};
}

Matrix2 symmetric_sqrt(const Matrix2& a, int n) {
  Matrix2 s{};
  if (n == 1) {
    s[0][0] = std::sqrt(a[0][0]);
    return s;
  }
  // sqrt(A) = (A + sqrt(det A) I) / sqrt(tr A + 2 sqrt(det A)) for SPD 2x2 A.
  const double root_det = std::sqrt(a[0][0] * a[1][1] - a[0][1] * a[1][0]);
  const double t = std::sqrt(a[0][0] + a[1][1] + 2.0 * root_det);
  s[0][0] = (a[0][0] + root_det) / t;
  s[1][1] = (a[1][1] + root_det) / t;
  s[0][1] = a[0][1] / t;
  s[1][0] = a[1][0] / t;
  return s;
}

namespace {

/// Visits every point of the closed tensor sample grid in the 2n coordinates.
template <class Visit>
void for_each_sample(const ProductDomain& domain, int samples, Visit&& visit) {
  const int n = domain.dim();
  const int coords = 2 * n;
  std::array<int, 2 * kMaxDim> idx{};
  PhasePoint p;
  p.n = n;
  for (;;) {
    for (int k = 0; k < n; ++k) {
      const Interval& ix = domain.x(k);
      const Interval& iv = domain.v(k);
      p.x[k] = ix.lo + ix.length() * idx[k] / (samples - 1);
      p.v[k] = iv.lo + iv.length() * idx[n + k] / (samples - 1);
    }
    visit(p);
    int c = 0;
    while (c < coords && ++idx[c] == samples) idx[c++] = 0;
    if (c == coords) return;
  }
}

}  // namespace

AssumptionReport validate_assumptions(const CoefficientField& coeffs, const ProductDomain& domain,
                                      int samples_per_axis) {
  if (samples_per_axis < 3) throw InvalidArgument("samples_per_axis must be at least 3");
  if (coeffs.n != domain.dim()) throw InvalidArgument("coefficient and domain dimensions differ");
  const int n = coeffs.n;

  AssumptionReport report;
  report.samples_per_axis = samples_per_axis;
  report.estimates_only = !coeffs.smooth;
  for (int k = 0; k < n; ++k) {
    report.fd_step[k] = domain.v(k).length() / (samples_per_axis * 8.0);
  }

  double lambda = std::numeric_limits<double>::infinity();
  double Lambda = -std::numeric_limits<double>::infinity();
  double nu = 0.0;
  double min_div = std::numeric_limits<double>::infinity();
  double max_dv_a = 0.0;

  for_each_sample(domain, samples_per_axis, [&](const PhasePoint& p) {
    const Matrix2 a = coeffs.diffusion(p);
    if (n == 2 && std::abs(a[0][1] - a[1][0]) > kSymmetryTol) {
      throw NonSymmetricA("A(x,v) is not symmetric at a sample point");
    }
    const auto eig = symmetric_eigenvalues(a, n);
    lambda = std::min(lambda, eig[0]);
    Lambda = std::max(Lambda, n == 1 ? eig[0] : eig[1]);

    const Vector2 b = coeffs.drift(p);
    double norm_b = 0.0;
    for (int k = 0; k < n; ++k) norm_b += b[k] * b[k];
    nu = std::max(nu, std::sqrt(norm_b));

    double div = 0.0;
    for (int k = 0; k < n; ++k) {
      const double h = report.fd_step[k];
      PhasePoint up = p;
      PhasePoint dn = p;
      up.v[k] += h;
      dn.v[k] -= h;
      div += (coeffs.b[k](up) - coeffs.b[k](dn)) / (2.0 * h);
      for (int j = 0; j < n; ++j) {
        const double d = (coeffs.A[k][j](up) - coeffs.A[k][j](dn)) / (2.0 * h);
        max_dv_a = std::max(max_dv_a, std::abs(d));
      }
    }
    min_div = std::min(min_div, div);
  });

  report.lambda_est = lambda;
  report.Lambda_est = Lambda;
  report.nu_est = nu;
  report.min_div_v_b = min_div;
  report.max_abs_dv_a = max_dv_a;
  report.ellipticity_passed = lambda > 0.0 && lambda <= Lambda;
  report.posdiv_passed = min_div >= -kDivergenceTol;
  report.dv_a_passed = std::isfinite(max_dv_a);
  return report;
}

Vector2 nondivergence_drift(const CoefficientField& coeffs, const AssumptionReport& report,
                            const PhasePoint& p) {
  if (!report.dv_a_passed || report.samples_per_axis == 0) {
    throw AssumptionViolated("d_v a must be validated before forming the nondivergence drift");
  }
  Vector2 out = coeffs.drift(p);
  if (coeffs.constant_diffusion()) return out;
  const int n = coeffs.n;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double h = report.fd_step[i];
      PhasePoint up = p;
      PhasePoint dn = p;
      up.v[i] += h;
      dn.v[i] -= h;
      out[j] += (coeffs.A[i][j](up) - coeffs.A[i][j](dn)) / (2.0 * h);
    }
  }
  return out;
}

namespace {

ScalarField coordinate_x() {
  return ScalarField::from([](const PhasePoint& p) { return p.x[0]; }, "x1");
}

ScalarField x_plus_v_squared() {
  return ScalarField::from(
      [](const PhasePoint& p) {
        double s = 0.0;
        for (int k = 0; k < p.n; ++k) s += p.x[k] + p.v[k] * p.v[k];
        return s;
      },
      "x1 + v1^2");
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"constant",        "unit_box_half",  "unit_box_source",    "identity_drift",
          "boundary_driven", "source_driven",  "smoothed_indicator", "perron_product",
          "ball",            "variable_diffusion"};
}

CoefficientField make_preset(const std::string& name, int n) {
  if (n < 1 || n > kMaxDim) throw ConfigError("preset dimension must be 1 or 2");
  CoefficientField c;
  if (name == "constant") {
    c = CoefficientField::isotropic(n, 1.0, ScalarField::constant(1.0));
  } else if (name == "unit_box_half") {
    c = CoefficientField::isotropic(n, 0.5, coordinate_x());
  } else if (name == "unit_box_source") {
    c = CoefficientField::isotropic(n, 0.5, ScalarField::constant(0.0));
    c.f = ScalarField::constant(1.0);
  } else if (name == "identity_drift") {
    c = CoefficientField::isotropic(n, 1.0, x_plus_v_squared());
    for (int k = 0; k < n; ++k) {
      c.b[k] = ScalarField::from([k](const PhasePoint& p) { return p.v[k]; }, "v");
    }
  } else if (name == "boundary_driven") {
    c = CoefficientField::isotropic(n, 0.5, ScalarField::constant(0.0));
    c.g2 = ScalarField::constant(1.0);
  } else if (name == "source_driven") {
    c = CoefficientField::isotropic(n, 0.5, ScalarField::constant(0.0));
    c.f = ScalarField::from([](const PhasePoint& p) { return std::sin(std::numbers::pi * p.x[0]); },
                            "sin(pi*x1)");
  } else if (name == "smoothed_indicator") {
    // Smoothed indicator of the disc of radius 1/2 around (1/2, 0).
    c = CoefficientField::isotropic(
        n, 0.5, ScalarField::from(
                    [](const PhasePoint& p) {
                      double r2 = 0.0;
                      for (int k = 0; k < p.n; ++k) {
                        r2 += (p.x[k] - 0.5) * (p.x[k] - 0.5) + p.v[k] * p.v[k];
                      }
                      return 1.0 / (1.0 + std::exp((r2 - 0.25) / 0.05));
                    },
                    "smoothed indicator"));
  } else if (name == "perron_product" || name == "ball") {
    c = CoefficientField::isotropic(n, 0.5, x_plus_v_squared());
  } else if (name == "variable_diffusion") {
    c = CoefficientField::isotropic(n, 1.0, ScalarField::constant(0.0));
    for (int k = 0; k < n; ++k) {
      c.A[k][k] = ScalarField::from(
          [k](const PhasePoint& p) { return 1.0 + 0.25 * p.v[k] * p.v[k]; }, "1 + v^2/4");
    }
    c.g1 = coordinate_x();
    c.g2 = coordinate_x();
  } else {
    throw ConfigError("unknown preset: " + name);
  }
  c.name = name;
  return c;
}

}  // namespace kfp
