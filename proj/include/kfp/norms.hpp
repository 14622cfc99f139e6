#pragma once

#include <optional>

#include "kfp/grid.hpp"

namespace kfp {

struct NormBundle {
  double l2 = 0.0;
  /// L2 in x of the H1 norm in v, forward differences in v.
  double l2_h1v = 0.0;
  bool has_trace = false;
  /// Integral over the spatial faces of |v.n| u_b^2.
  double trace_weighted = 0.0;
  /// Integral over the spatial faces of |v.n|^2 u_b^2.
  double trace_weighted2 = 0.0;
};

/// Midpoint-rule norms with the grid's quadrature weights.
NormBundle discrete_norms(const Field& u, const std::optional<TraceFunction>& trace = std::nullopt);

/// Squared L2 norm of the forward v-differences between cells.
double grad_v_squared(const Field& u);

/// Squared L2 norm of the x-differences, including the half cells between
/// the outer cells and their traces.
double grad_x_squared(const Field& u, const TraceFunction& trace);

/// Integral over the spatial faces of weight(v.n) * u_b^2.
template <class Weight>
double trace_integral(const TraceFunction& trace, Weight weight) {
  const Grid& g = *trace.grid;
  double s = 0.0;
  for (int side = 0; side < 2; ++side) {
    for (int j = 0; j < g.nv(); ++j) {
      const double vn = g.v().node(j) * Grid::trace_normal(side);
      const double t = trace(side, j);
      s += g.v().weight[static_cast<std::size_t>(j)] * weight(vn) * t * t;
    }
  }
  return s;
}

}  // namespace kfp
