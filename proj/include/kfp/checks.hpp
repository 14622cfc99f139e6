#pragma once

#include <cstdint>
#include <json.hpp>
#include <string>

#include "kfp/grid.hpp"
#include "kfp/viscosity.hpp"

namespace kfp {

/// Outcome of one inequality check; passed iff lhs <= rhs + slack.
struct Verdict {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool passed = false;
  nlohmann::json context = nlohmann::json::object();

  static Verdict make(std::string name, double lhs, double rhs, double slack);
};

nlohmann::json to_json(const Verdict& verdict);

/// 1 / sqrt(lambda_1) for the cell-centred Dirichlet Laplacian on nv cells of
/// the interval, by inverse power iteration (tol 1e-10). Requires nv >= 8.
double estimate_poincare_constant(const Interval& v, int nv);

/// sup of |u| over cells and outflow traces against sup |g| on the
/// hypoelliptic boundary; slack 1e-8 (1 + sup |g|). The context carries
/// sup_u and sup_trace separately.
Verdict check_weak_max_principle(const Field& u, const TraceFunction& trace, const BoundaryRange& g);

/// Solves both problems with one shared operator and reports
/// max(u_low - u_high) over cells and outflow traces (slack 1e-8). With
/// `enforce_order` the data ordering is checked first (PreconditionViolated).
Verdict check_comparison(const ProblemSpec& low, const ProblemSpec& high, bool enforce_order = true);

/// Both sides of the eps-energy estimate for a solution with g1 = 0
/// (PreconditionViolated otherwise); slack 5% of the right-hand side.
Verdict audit_energy(const Field& u, const TraceFunction& trace, double eps, const ProblemSpec& spec,
                     double c_p);

/// Seeded smooth test datum with values in [-1, 1]: a sum of three random
/// plane waves in (x, v), drawn from Philox stream `index`.
ScalarField random_smooth_field(std::uint64_t seed, std::uint64_t index);

}  // namespace kfp
