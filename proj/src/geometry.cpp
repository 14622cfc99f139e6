#include "kfp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kfp/error.hpp"

namespace kfp {

namespace {

void check_axes(const std::vector<Interval>& axes, const char* name) {
  for (const auto& iv : axes) {
    if (!(iv.lo < iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi)) {
      std::ostringstream os;
      os << name << " interval (" << iv.lo << ", " << iv.hi << ") must satisfy lo < hi";
      throw InvalidArgument(os.str());
    }
  }
}

enum class AxisPos { Inside, AtLo, AtHi, Outside };

AxisPos locate(double c, const Interval& iv) {
  if (std::abs(c - iv.lo) <= kBoundaryTol) return AxisPos::AtLo;
  if (std::abs(c - iv.hi) <= kBoundaryTol) return AxisPos::AtHi;
  if (c > iv.lo && c < iv.hi) return AxisPos::Inside;
  return AxisPos::Outside;
}

}  // namespace

ProductDomain::ProductDomain(std::vector<Interval> x_intervals, std::vector<Interval> v_intervals)
    : x_(std::move(x_intervals)), v_(std::move(v_intervals)) {
  if (x_.empty() || x_.size() != v_.size()) {
    throw InvalidArgument("position and velocity boxes must have the same nonzero dimension");
  }
  if (x_.size() > static_cast<std::size_t>(kMaxDim)) {
    throw InvalidArgument("only n = 1 and n = 2 are supported");
  }
  check_axes(x_, "x");
  check_axes(v_, "v");
}

double ProductDomain::measure() const {
  double m = 1.0;
  for (const auto& iv : x_) m *= iv.length();
  for (const auto& iv : v_) m *= iv.length();
  return m;
}

double ProductDomain::diameter() const {
  double d = 0.0;
  for (const auto& iv : x_) d = std::max(d, iv.length());
  for (const auto& iv : v_) d = std::max(d, iv.length());
  return d;
}

bool ProductDomain::contains(const PhasePoint& p) const {
  for (int k = 0; k < dim(); ++k) {
    if (!(p.x[k] > x(k).lo && p.x[k] < x(k).hi)) return false;
    if (!(p.v[k] > v(k).lo && p.v[k] < v(k).hi)) return false;
  }
  return true;
}

bool ProductDomain::contains_closure(const PhasePoint& p) const {
  for (int k = 0; k < dim(); ++k) {
    if (locate(p.x[k], x(k)) == AxisPos::Outside) return false;
    if (locate(p.v[k], v(k)) == AxisPos::Outside) return false;
  }
  return true;
}

std::string_view to_string(BoundaryLabel label) {
  switch (label) {
    case BoundaryLabel::V: return "V";
    case BoundaryLabel::Xplus: return "Xplus";
    case BoundaryLabel::Xzero: return "Xzero";
    case BoundaryLabel::Xminus: return "Xminus";
    case BoundaryLabel::Corner: return "Corner";
  }
  return "?";
}

BoundaryLabel classify_boundary(const PhasePoint& p, const ProductDomain& domain) {
  if (p.n != domain.dim()) throw InvalidArgument("point dimension does not match domain");
  bool x_face = false;
  bool v_face = false;
  // Signs of v . n over every touched x-face; an x-edge (n = 2) may touch two.
  int positive = 0;
  int negative = 0;
  int zero = 0;
  for (int k = 0; k < domain.dim(); ++k) {
    const AxisPos px = locate(p.x[k], domain.x(k));
    const AxisPos pv = locate(p.v[k], domain.v(k));
    if (px == AxisPos::Outside || pv == AxisPos::Outside) {
      throw PointNotOnBoundary("point lies outside the closed domain");
    }
    if (pv != AxisPos::Inside) v_face = true;
    if (px != AxisPos::Inside) {
      x_face = true;
      const double normal = px == AxisPos::AtHi ? 1.0 : -1.0;
      const double vn = p.v[k] * normal;
      if (std::abs(vn) <= kBoundaryTol) {
        ++zero;
      } else if (vn > 0.0) {
        ++positive;
      } else {
        ++negative;
      }
    }
  }
  if (!x_face && !v_face) throw PointNotOnBoundary("point lies in the open domain");
  if (x_face && v_face) return BoundaryLabel::Corner;
  if (v_face) return BoundaryLabel::V;
  if (zero == 0 && negative == 0) return BoundaryLabel::Xplus;
  if (zero == 0 && positive == 0) return BoundaryLabel::Xminus;
  return BoundaryLabel::Xzero;
}

}  // namespace kfp
