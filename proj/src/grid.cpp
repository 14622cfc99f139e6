#include "kfp/grid.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "kfp/error.hpp"

namespace kfp {

namespace {

bool hits_zero(const AxisNodes& axis) {
  for (int j = 0; j < axis.count; ++j) {
    if (std::abs(axis.node(j)) <= kBoundaryTol) return true;
  }
  return false;
}

void fill_weights(AxisNodes& axis) {
  axis.weight.assign(static_cast<std::size_t>(axis.count), axis.h);
  axis.weight.front() = 0.5 * axis.h + axis.d_lo;
  axis.weight.back() = 0.5 * axis.h + axis.d_hi;
  if (axis.count == 1) axis.weight.front() = axis.d_lo + axis.d_hi;
}

}  // namespace

AxisNodes AxisNodes::cell_centered(const Interval& iv, int count, bool avoid_zero) {
  AxisNodes axis;
  axis.lo = iv.lo;
  axis.hi = iv.hi;
  axis.count = count;
  axis.h = iv.length() / count;
  axis.first = iv.lo + 0.5 * axis.h;
  axis.d_lo = axis.d_hi = 0.5 * axis.h;
  if (avoid_zero && hits_zero(axis)) {
    axis.h = iv.length() / (count + 0.5);
    axis.first = iv.lo + 0.5 * axis.h;
    axis.d_lo = 0.5 * axis.h;
    axis.d_hi = axis.h;
    if (hits_zero(axis)) {
      axis.first = iv.lo + axis.h;
      axis.d_lo = axis.h;
      axis.d_hi = 0.5 * axis.h;
    }
  }
  fill_weights(axis);
  return axis;
}

Grid::Grid(ProductDomain domain, AxisNodes x, AxisNodes v)
    : domain_(std::move(domain)), x_(std::move(x)), v_(std::move(v)) {}

double Grid::h() const { return std::max(x_.h, v_.h); }

BoundaryLabel Grid::trace_label(int side, int j) const {
  const double vn = v_.node(j) * trace_normal(side);
  return vn > 0.0 ? BoundaryLabel::Xplus : BoundaryLabel::Xminus;
}

GridPtr build_grid(const ProductDomain& domain, int nx, int nv) {
  if (nx < kMinNodesPerAxis || nv < kMinNodesPerAxis) {
    std::ostringstream os;
    os << "grid " << nx << "x" << nv << " has fewer than " << kMinNodesPerAxis << " nodes per axis";
    throw TooCoarse(os.str());
  }
  if (domain.dim() != 1) {
    throw InvalidArgument("finite-difference grids are built for n = 1 only");
  }
  auto x = AxisNodes::cell_centered(domain.x(0), nx, false);
  auto v = AxisNodes::cell_centered(domain.v(0), nv, true);
  return std::make_shared<const Grid>(domain, std::move(x), std::move(v));
}

Field::Field(GridPtr g, double fill)
    : grid(std::move(g)), values(static_cast<std::size_t>(grid->cell_count()), fill) {}

double Field::max_abs() const {
  double m = 0.0;
  for (double x : values) m = std::max(m, std::abs(x));
  return m;
}

double Field::max() const { return *std::max_element(values.begin(), values.end()); }
double Field::min() const { return *std::min_element(values.begin(), values.end()); }

TraceFunction::TraceFunction(GridPtr g, double fill)
    : grid(std::move(g)), values(static_cast<std::size_t>(grid->trace_count()), fill) {
  labels.resize(values.size());
  for (int side = 0; side < 2; ++side)
    for (int j = 0; j < grid->nv(); ++j)
      labels[static_cast<std::size_t>(grid->trace_index(side, j))] = grid->trace_label(side, j);
}

Field cells_of(const GridPtr& grid, const std::vector<double>& unknowns) {
  Field u(grid);
  for (int i = 0; i < grid->nx(); ++i)
    for (int j = 0; j < grid->nv(); ++j)
      u(i, j) = unknowns[static_cast<std::size_t>(grid->unknown_of_cell(i, j))];
  return u;
}

TraceFunction traces_of(const GridPtr& grid, const std::vector<double>& unknowns) {
  TraceFunction t(grid);
  for (int side = 0; side < 2; ++side)
    for (int j = 0; j < grid->nv(); ++j)
      t(side, j) = unknowns[static_cast<std::size_t>(grid->unknown_of_trace(side, j))];
  return t;
}

std::vector<double> join_unknowns(const Field& u, const TraceFunction& trace) {
  const Grid& g = *u.grid;
  std::vector<double> out(static_cast<std::size_t>(g.unknown_count()));
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.nv(); ++j) out[static_cast<std::size_t>(g.unknown_of_cell(i, j))] = u(i, j);
  for (int side = 0; side < 2; ++side)
    for (int j = 0; j < g.nv(); ++j)
      out[static_cast<std::size_t>(g.unknown_of_trace(side, j))] = trace(side, j);
  return out;
}

void write_field_csv(std::ostream& os, const Field& u) {
  const Grid& g = *u.grid;
  os << "x,v,u\n" << std::setprecision(17);
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.nv(); ++j)
      os << g.x().node(i) << ',' << g.v().node(j) << ',' << u(i, j) << '\n';
}

double sample_bilinear(const Field& u, double x, double v) {
  const Grid& g = *u.grid;
  auto locate = [](const AxisNodes& axis, int count, double t, int& k, double& w) {
    if (t <= axis.node(0)) {
      k = 0;
      w = 0.0;
      return;
    }
    if (t >= axis.node(count - 1)) {
      k = count - 2;
      w = 1.0;
      return;
    }
    k = 0;
    while (k + 2 < count && axis.node(k + 1) <= t) ++k;
    w = (t - axis.node(k)) / (axis.node(k + 1) - axis.node(k));
  };
  int i, j;
  double a, b;
  locate(g.x(), g.nx(), x, i, a);
  locate(g.v(), g.nv(), v, j, b);
  return (1 - a) * (1 - b) * u(i, j) + a * (1 - b) * u(i + 1, j) + (1 - a) * b * u(i, j + 1) +
         a * b * u(i + 1, j + 1);
}

}  // namespace kfp
