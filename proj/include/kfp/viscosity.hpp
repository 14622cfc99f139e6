#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "kfp/coefficients.hpp"
#include "kfp/grid.hpp"
#include "kfp/krylov.hpp"

namespace kfp {

/// A boundary-value problem on a gridded product domain.
struct ProblemSpec {
  ProductDomain domain = ProductDomain::unit_box();
  CoefficientField coeffs;
  GridPtr grid;
  SolverSettings solver;
  AssumptionReport assumptions;

  /// Builds the grid and validates the assumptions; throws AssumptionViolated
  /// if ellipticity or div_v b >= 0 fails.
  static ProblemSpec make(const ProductDomain& domain, const CoefficientField& coeffs, int nx, int nv,
                          const SolverSettings& solver = {}, int samples_per_axis = 9);

  /// Same grid, solver and validation, different data.
  ProblemSpec with_coeffs(const CoefficientField& other) const;
};

/// Extremes of the Dirichlet data over the velocity-face points and the
/// inflow spatial-face nodes of the grid, i.e. the hypoelliptic boundary.
struct BoundaryRange {
  double sup = 0.0;
  double inf = 0.0;
  double sup_abs = 0.0;
};
BoundaryRange boundary_data_range(const ProblemSpec& spec);

struct RegularizedSolution {
  Field u;
  TraceFunction trace;
  SolveResult stats;
};

/// Solves the assembled problem at viscosity eps >= 0 (eps = 0 is the limit
/// scheme). `warm` is an optional full unknown vector to start from.
RegularizedSolution solve_regularized(const ProblemSpec& spec, double eps,
                                      const std::vector<double>& warm = {});

struct ViscosityRecord {
  int k = 0;
  double eps = 0.0;
  double l2_h1v = 0.0;
  /// ||u_k - u_{k-1}|| in L2 H1_v; zero for the first record.
  double increment = 0.0;
  /// Integral over the spatial faces of |v.n| (Tr u_k - Tr u_{k-1})^2, square-rooted.
  double trace_increment = 0.0;
  /// sqrt(eps) ||d_x u_eps||.
  double viscous_energy = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

struct ViscosityReport {
  std::vector<ViscosityRecord> records;
  double stop_tol = 0.0;
  bool reached_tol = false;
  double terminal_l2 = 0.0;
  double terminal_l2_h1v = 0.0;
  /// max over inflow trace nodes of |Tr u - g2| at the last k (reported, not asserted).
  double inflow_trace_gap = 0.0;
  /// Max-norm distance of the last iterate from the eps = 0 solve.
  double terminal_vs_direct = 0.0;
  /// Same for the polynomial extrapolation of the last iterates to eps = 0.
  double extrapolated_vs_direct = 0.0;
  bool direct_checked = false;
};

struct ViscosityResult {
  Field u;
  /// g2 on inflow nodes, the last Tr(u_eps) on outflow nodes.
  TraceFunction trace;
  /// Last iterate and its own trace.
  Field last_u;
  TraceFunction last_trace;
  /// Extrapolation of the last few iterates to eps = 0.
  Field extrapolated;
  ViscosityReport report;
};

inline constexpr int kDefaultKMax = 64;
inline constexpr int kNoProgressRun = 5;

/// Default stop tolerance 1e-7 (1 + sup |g|).
double default_stop_tol(const ProblemSpec& spec);

/// eps_k = 1/k^2 for k = 1..k_max, warm-started, stopping once the increment
/// drops below stop_tol (stop_tol <= 0 selects the default). Throws
/// NoProgress after 5 consecutive non-decreasing increments above stop_tol.
/// With `cross_check` the eps = 0 scheme is solved as well and compared.
ViscosityResult run_viscosity_sequence(const ProblemSpec& spec, int k_max = kDefaultKMax,
                                       double stop_tol = 0.0, bool cross_check = true);

nlohmann::json to_json(const ViscosityReport& report);

}  // namespace kfp
