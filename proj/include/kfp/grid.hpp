#pragma once

#include <iosfwd>
#include <memory>
#include <vector>

#include "kfp/geometry.hpp"

namespace kfp {

/// Uniform nodes along one axis.
///
/// Nodes are cell centred, x_j = lo + (j + 1/2) h with h = L / count. On an
/// axis where that would put a node on 0 (odd count on a symmetric velocity
/// interval) the nodes are staggered instead: h = L / (count + 1/2), and one
/// end sits a full h away from its face. `d_lo`/`d_hi` are the node-to-face
/// distances, `weight` the midpoint quadrature weights (they sum to L).
struct AxisNodes {
  double lo = 0.0;
  double hi = 1.0;
  double first = 0.5;
  double h = 1.0;
  int count = 1;
  double d_lo = 0.5;
  double d_hi = 0.5;
  std::vector<double> weight;

  double node(int j) const { return first + j * h; }

  static AxisNodes cell_centered(const Interval& iv, int count, bool avoid_zero);
};

/// Tensor grid on a product domain (n = 1) plus the spatial-face trace layer.
///
/// Unknown layout is lexicographic with v fastest over columns c = 0..nx+1:
/// column 0 is the trace on the face x = x_lo, columns 1..nx are the cells,
/// column nx+1 is the trace on x = x_hi.
class Grid {
 public:
  Grid(ProductDomain domain, AxisNodes x, AxisNodes v);

  const ProductDomain& domain() const { return domain_; }
  const AxisNodes& x() const { return x_; }
  const AxisNodes& v() const { return v_; }
  int nx() const { return x_.count; }
  int nv() const { return v_.count; }
  double hx() const { return x_.h; }
  double hv() const { return v_.h; }
  /// max(hx, hv), the mesh size used in error budgets.
  double h() const;

  int cell_count() const { return nx() * nv(); }
  int trace_count() const { return 2 * nv(); }
  int unknown_count() const { return (nx() + 2) * nv(); }

  int cell_index(int i, int j) const { return i * nv() + j; }
  int unknown_of_cell(int i, int j) const { return (i + 1) * nv() + j; }
  /// side 0: x = x_lo (outward normal -1); side 1: x = x_hi (normal +1).
  int unknown_of_trace(int side, int j) const { return side == 0 ? j : (nx() + 1) * nv() + j; }
  int trace_index(int side, int j) const { return side * nv() + j; }
  double trace_x(int side) const { return side == 0 ? x_.lo : x_.hi; }
  static double trace_normal(int side) { return side == 0 ? -1.0 : 1.0; }
  BoundaryLabel trace_label(int side, int j) const;

  PhasePoint cell_point(int i, int j) const { return PhasePoint::make1(x_.node(i), v_.node(j)); }

 private:
  ProductDomain domain_;
  AxisNodes x_;
  AxisNodes v_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline constexpr int kMinNodesPerAxis = 4;

/// Throws TooCoarse below 4 nodes per axis; only n = 1 domains are gridded.
GridPtr build_grid(const ProductDomain& domain, int nx, int nv);

/// Grid function on the cells.
struct Field {
  GridPtr grid;
  std::vector<double> values;

  explicit Field(GridPtr g, double fill = 0.0);
  double& operator()(int i, int j) { return values[static_cast<std::size_t>(grid->cell_index(i, j))]; }
  double operator()(int i, int j) const {
    return values[static_cast<std::size_t>(grid->cell_index(i, j))];
  }
  double max_abs() const;
  double max() const;
  double min() const;
};

/// Grid function on the spatial-face nodes, with their boundary labels.
struct TraceFunction {
  GridPtr grid;
  std::vector<double> values;
  std::vector<BoundaryLabel> labels;

  explicit TraceFunction(GridPtr g, double fill = 0.0);
  double& operator()(int side, int j) {
    return values[static_cast<std::size_t>(grid->trace_index(side, j))];
  }
  double operator()(int side, int j) const {
    return values[static_cast<std::size_t>(grid->trace_index(side, j))];
  }
};

/// Splits a full unknown vector into its cell and trace parts.
Field cells_of(const GridPtr& grid, const std::vector<double>& unknowns);
TraceFunction traces_of(const GridPtr& grid, const std::vector<double>& unknowns);
std::vector<double> join_unknowns(const Field& u, const TraceFunction& trace);

/// CSV dump, header `x,v,u`, row-major over cells, 17 significant digits.
void write_field_csv(std::ostream& os, const Field& u);

/// Bilinear interpolation between cell centres, clamped to their hull.
double sample_bilinear(const Field& u, double x, double v);

}  // namespace kfp
