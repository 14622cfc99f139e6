#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "kfp/expression.hpp"
#include "kfp/geometry.hpp"

namespace kfp {

/// Real-valued field on phase space. Constant fields are flagged so hot loops
/// (the path sampler, assembly) can skip evaluation.
class ScalarField {
 public:
  using Fn = std::function<double(const PhasePoint&)>;

  ScalarField() = default;

  static ScalarField constant(double value);
  static ScalarField from(Fn fn, std::string description = "function");
  static ScalarField from_expression(const Expression& expr);

  double operator()(const PhasePoint& p) const { return constant_ ? value_ : fn_(p); }
  double at(double x, double v) const {
    return constant_ ? value_ : fn_(PhasePoint::make1(x, v));
  }

  bool is_constant() const { return constant_; }
  double constant_value() const { return value_; }
  const std::string& description() const { return description_; }

 private:
  Fn fn_;
  bool constant_ = true;
  double value_ = 0.0;
  std::string description_;
};

using Matrix2 = std::array<std::array<double, kMaxDim>, kMaxDim>;
using Vector2 = std::array<double, kMaxDim>;

/// Equation data: diffusion A, drift b, source f, data g1 on the velocity
/// boundary and g2 on the spatial boundary.
struct CoefficientField {
  int n = 1;
  std::array<std::array<ScalarField, kMaxDim>, kMaxDim> A;
  std::array<ScalarField, kMaxDim> b;
  ScalarField f;
  ScalarField g1;
  ScalarField g2;
  /// False for rough (non-Lipschitz) presets; assumption checks then report estimates only.
  bool smooth = true;
  std::string name = "custom";

  Matrix2 diffusion(const PhasePoint& p) const;
  Vector2 drift(const PhasePoint& p) const;
  bool constant_diffusion() const;

  /// Diffusion a*I, no drift or source, and g as both boundary data.
  static CoefficientField isotropic(int n, double a, ScalarField g);
};

struct AssumptionReport {
  double lambda_est = 0.0;
  double Lambda_est = 0.0;
  double nu_est = 0.0;
  double min_div_v_b = 0.0;
  double max_abs_dv_a = 0.0;
  bool ellipticity_passed = false;  // 0 < lambda <= Lambda
  bool posdiv_passed = false;       // div_v b >= -tol_div
  bool dv_a_passed = false;         // |d_{v_i} a_ij| bounded on the samples
  bool estimates_only = false;
  /// Finite-difference step per velocity axis used for every derivative estimate.
  std::array<double, kMaxDim> fd_step{};
  int samples_per_axis = 0;

  bool all_passed() const { return ellipticity_passed && posdiv_passed && dv_a_passed; }
};

inline constexpr double kDivergenceTol = 1e-10;
inline constexpr double kSymmetryTol = 1e-12;

AssumptionReport validate_assumptions(const CoefficientField& coeffs, const ProductDomain& domain,
                                      int samples_per_axis);

/// b~_j = b_j + sum_i d_{v_i} a_ij, by central differences with the report's steps.
/// Exactly b when A is constant.
Vector2 nondivergence_drift(const CoefficientField& coeffs, const AssumptionReport& report,
                            const PhasePoint& p);

/// Eigenvalues (ascending) of the leading n x n block of a symmetric matrix.
std::array<double, kMaxDim> symmetric_eigenvalues(const Matrix2& a, int n);

/// Symmetric square root S with S S^T = A, closed form for n <= 2.
Matrix2 symmetric_sqrt(const Matrix2& a, int n);

/// Built-in coefficient sets; throws ConfigError for an unknown name.
CoefficientField make_preset(const std::string& name, int n);
std::vector<std::string> preset_names();

}  // namespace kfp
