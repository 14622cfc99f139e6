#pragma once

#include <array>
#include <string_view>
#include <vector>

namespace kfp {

/// Absolute tolerance for deciding that a point sits on a face.
inline constexpr double kBoundaryTol = 1e-12;

/// Spatial dimensions handled by the laboratory.
inline constexpr int kMaxDim = 2;

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double length() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
};

/// Phase-space point (x, v) with x, v in R^n, n <= 2.
struct PhasePoint {
  int n = 1;
  std::array<double, kMaxDim> x{};
  std::array<double, kMaxDim> v{};

  static PhasePoint make1(double x, double v) {
    PhasePoint p;
    p.n = 1;
    p.x[0] = x;
    p.v[0] = v;
    return p;
  }
};

/// Box phase-space domain U x V.
class ProductDomain {
 public:
  ProductDomain(std::vector<Interval> x_intervals, std::vector<Interval> v_intervals);

  static ProductDomain unit_box() { return ProductDomain({{0.0, 1.0}}, {{-1.0, 1.0}}); }

  int dim() const { return static_cast<int>(x_.size()); }
  const std::vector<Interval>& x_intervals() const { return x_; }
  const std::vector<Interval>& v_intervals() const { return v_; }
  const Interval& x(int axis) const { return x_[static_cast<std::size_t>(axis)]; }
  const Interval& v(int axis) const { return v_[static_cast<std::size_t>(axis)]; }

  double measure() const;
  /// Largest axis length over all 2n axes.
  double diameter() const;
  bool contains(const PhasePoint& p) const;          // open box
  bool contains_closure(const PhasePoint& p) const;  // closed box, with tolerance

 private:
  std::vector<Interval> x_;
  std::vector<Interval> v_;
};

enum class BoundaryLabel { V, Xplus, Xzero, Xminus, Corner };

std::string_view to_string(BoundaryLabel label);

/// Splits the boundary into the velocity part and the positive, singular and
/// negative parts of the spatial boundary, by the sign of v . n_x.
BoundaryLabel classify_boundary(const PhasePoint& p, const ProductDomain& domain);

/// Closure of Xplus, Xzero and V; corners belong to the closure.
constexpr bool is_hypoelliptic_boundary(BoundaryLabel label) {
  return label != BoundaryLabel::Xminus;
}

}  // namespace kfp
