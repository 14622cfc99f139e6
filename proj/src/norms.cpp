#include "kfp/norms.hpp"

#include <cmath>

namespace kfp {

double grad_v_squared(const Field& u) {
  const Grid& g = *u.grid;
  double s = 0.0;
  for (int i = 0; i < g.nx(); ++i) {
    const double wx = g.x().weight[static_cast<std::size_t>(i)];
    for (int j = 0; j + 1 < g.nv(); ++j) {
      const double d = (u(i, j + 1) - u(i, j)) / g.hv();
      s += wx * g.hv() * d * d;
    }
  }
  return s;
}

double grad_x_squared(const Field& u, const TraceFunction& trace) {
  const Grid& g = *u.grid;
  const double hx = g.hx();
  double s = 0.0;
  for (int j = 0; j < g.nv(); ++j) {
    const double wv = g.v().weight[static_cast<std::size_t>(j)];
    for (int i = 0; i + 1 < g.nx(); ++i) {
      const double d = (u(i + 1, j) - u(i, j)) / hx;
      s += wv * hx * d * d;
    }
    const double dl = (u(0, j) - trace(0, j)) / (0.5 * hx);
    const double dr = (trace(1, j) - u(g.nx() - 1, j)) / (0.5 * hx);
    s += wv * 0.5 * hx * (dl * dl + dr * dr);
  }
  return s;
}

NormBundle discrete_norms(const Field& u, const std::optional<TraceFunction>& trace) {
  const Grid& g = *u.grid;
  NormBundle out;
  double l2 = 0.0;
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.nv(); ++j)
      l2 += g.x().weight[static_cast<std::size_t>(i)] * g.v().weight[static_cast<std::size_t>(j)] *
            u(i, j) * u(i, j);
  out.l2 = std::sqrt(l2);
  out.l2_h1v = std::sqrt(l2 + grad_v_squared(u));
  if (trace) {
    out.has_trace = true;
    out.trace_weighted = trace_integral(*trace, [](double vn) { return std::abs(vn); });
    out.trace_weighted2 = trace_integral(*trace, [](double vn) { return vn * vn; });
  }
  return out;
}

}  // namespace kfp
