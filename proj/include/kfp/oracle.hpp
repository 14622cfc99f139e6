#pragma once

#include <array>
#include <cstdint>
#include <json.hpp>
#include <map>

#include "kfp/coefficients.hpp"
#include "kfp/geometry.hpp"
#include "kfp/kernels.hpp"

namespace kfp {

struct PathConfig {
  double dt = 1e-4;
  std::int64_t max_steps = 10'000'000;
  std::uint64_t seed = 0;
  std::int64_t n_paths = 1000;

  void validate() const;
};

struct ExitSample {
  PhasePoint exit;
  BoundaryLabel label = BoundaryLabel::V;
  double source_integral = 0.0;
  std::int64_t steps = 0;
  /// max_steps reached before leaving the domain.
  bool censored = false;
};

/// Problem seen by the oracle: coefficients, box, and the assumption report
/// that supplies the nondivergence drift.
struct OracleProblem {
  CoefficientField coeffs;
  ProductDomain domain = ProductDomain::unit_box();
  AssumptionReport report;

  /// Validates assumptions (9 samples per axis); throws AssumptionViolated
  /// unless d_v a passed.
  static OracleProblem make(const CoefficientField& coeffs, const ProductDomain& domain);
};

/// Euler-Maruyama path from xi0 until it leaves the closed box: x += v dt,
/// v += b~ dt + sqrt(2 dt) S N with S S^T = A. The crossing is located by
/// linear interpolation along the last step against the first face hit.
/// The normals come from a Philox stream keyed by (seed, path_index).
ExitSample sample_exit(const PhasePoint& xi0, const OracleProblem& problem, const PathConfig& cfg,
                       std::int64_t path_index);

struct OracleEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t used = 0;
  std::int64_t censored = 0;
  std::map<BoundaryLabel, std::int64_t> histogram;

  double fraction(BoundaryLabel label) const;
};

/// Mean of g(exit) + accumulated source over all paths, with g1 on V exits
/// and corners and g2 on spatial exits; stderr = sample std / sqrt(n).
/// Per-path results are reduced in index order, so serial and parallel runs
/// agree bitwise. Throws TooManyCensored above 1% censored paths.
OracleEstimate estimate_solution(const PhasePoint& xi0, const OracleProblem& problem, const PathConfig& cfg,
                                 Exec exec = Exec::Parallel);

nlohmann::json to_json(const OracleEstimate& estimate);

}  // namespace kfp
