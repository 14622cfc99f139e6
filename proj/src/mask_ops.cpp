#include "kfp/mask_ops.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "kfp/error.hpp"

namespace kfp {

DomainMask::DomainMask(MaskLattice lattice, std::vector<unsigned char> inside, Kind kind)
    : lattice_(lattice), inside_(std::move(inside)), kind_(kind) {
  if (lattice_.nx < 3 || lattice_.nv < 3) throw InvalidArgument("mask lattice needs at least 3 nodes per axis");
  if (static_cast<int>(inside_.size()) != lattice_.size()) throw InvalidArgument("mask size does not match lattice");
  // Clear the padding ring so every inside node has four lattice neighbours.
  for (int i = 0; i < lattice_.nx; ++i)
    for (int j = 0; j < lattice_.nv; ++j)
      if (i == 0 || j == 0 || i == lattice_.nx - 1 || j == lattice_.nv - 1) {
        inside_[static_cast<std::size_t>(lattice_.index(i, j))] = 0;
      }
}

DomainMask DomainMask::box(const ProductDomain& domain, int nx, int nv) {
  if (domain.dim() != 1) throw InvalidArgument("masks support n = 1 only");
  if (nx < 2 || nv < 2) throw TooCoarse("box mask needs at least 2 nodes per axis");
  MaskLattice lat;
  lat.hx = domain.x(0).length() / nx;
  lat.hv = domain.v(0).length() / nv;
  lat.x0 = domain.x(0).lo - 0.5 * lat.hx;
  lat.v0 = domain.v(0).lo - 0.5 * lat.hv;
  lat.nx = nx + 2;
  lat.nv = nv + 2;
  std::vector<unsigned char> in(static_cast<std::size_t>(lat.size()), 1);
  DomainMask mask(lat, std::move(in), Kind::Box);
  mask.box_ = domain;
  return mask;
}

DomainMask DomainMask::ball(std::array<double, 2> center, double radius, int n) {
  if (radius <= 0.0) throw InvalidArgument("ball radius must be positive");
  if (n < 4) throw TooCoarse("ball mask needs at least 4 cells across");
  MaskLattice lat;
  lat.hx = lat.hv = 2.0 * radius / n;
  lat.x0 = center[0] - radius - 0.5 * lat.hx;
  lat.v0 = center[1] - radius - 0.5 * lat.hv;
  lat.nx = lat.nv = n + 2;
  std::vector<unsigned char> in(static_cast<std::size_t>(lat.size()), 0);
  for (int i = 0; i < lat.nx; ++i)
    for (int j = 0; j < lat.nv; ++j) {
      const double dx = lat.x(i) - center[0];
      const double dv = lat.v(j) - center[1];
      in[static_cast<std::size_t>(lat.index(i, j))] = dx * dx + dv * dv < radius * radius ? 1 : 0;
    }
  DomainMask mask(lat, std::move(in), Kind::Ball);
  mask.center_ = center;
  mask.radius_ = radius;
  mask.box_ = ProductDomain({{center[0] - radius, center[0] + radius}}, {{center[1] - radius, center[1] + radius}});
  return mask;
}

DomainMask DomainMask::from_raster(const std::string& text, const ProductDomain& bounds) {
  std::vector<std::string> rows;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) rows.push_back(line);
  }
  if (rows.empty()) throw ConfigError("mask raster is empty");
  const std::size_t width = rows.front().size();
  for (const auto& r : rows) {
    if (r.size() != width) throw ConfigError("mask raster rows differ in length");
    if (r.find_first_not_of("#.") != std::string::npos) throw ConfigError("mask raster may only contain '#' and '.'");
  }
  MaskLattice lat;
  const int nx = static_cast<int>(rows.size());
  const int nv = static_cast<int>(width);
  lat.hx = bounds.x(0).length() / nx;
  lat.hv = bounds.v(0).length() / nv;
  lat.x0 = bounds.x(0).lo - 0.5 * lat.hx;
  lat.v0 = bounds.v(0).lo - 0.5 * lat.hv;
  lat.nx = nx + 2;
  lat.nv = nv + 2;
  std::vector<unsigned char> inside(static_cast<std::size_t>(lat.size()), 0);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < nv; ++j)
      inside[static_cast<std::size_t>(lat.index(i + 1, j + 1))] = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] == '#';
  DomainMask mask(lat, std::move(inside), Kind::Raster);
  mask.box_ = bounds;
  return mask;
}

bool DomainMask::inside(int i, int j) const {
  if (i < 0 || j < 0 || i >= lattice_.nx || j >= lattice_.nv) return false;
  return inside_[static_cast<std::size_t>(lattice_.index(i, j))] != 0;
}

int DomainMask::inside_count() const {
  return static_cast<int>(std::count(inside_.begin(), inside_.end(), static_cast<unsigned char>(1)));
}

bool DomainMask::is_connected() const {
  const int total = inside_count();
  if (total == 0) return false;
  std::vector<unsigned char> seen(inside_.size(), 0);
  std::deque<std::array<int, 2>> queue;
  for (int k = 0; k < lattice_.size(); ++k) {
    if (inside_index(k)) {
      queue.push_back({k / lattice_.nv, k % lattice_.nv});
      seen[static_cast<std::size_t>(k)] = 1;
      break;
    }
  }
  int visited = 0;
  while (!queue.empty()) {
    const auto [i, j] = queue.front();
    queue.pop_front();
    ++visited;
    for (const auto& s : kStep) {
      const int a = i + s[0];
      const int b = j + s[1];
      if (!inside(a, b)) continue;
      auto& flag = seen[static_cast<std::size_t>(lattice_.index(a, b))];
      if (flag) continue;
      flag = 1;
      queue.push_back({a, b});
    }
  }
  return visited == total;
}

ProductDomain DomainMask::bounds() const { return box_; }

std::array<double, 2> DomainMask::outward_normal(double x, double v) const {
  if (kind_ == Kind::Ball) {
    const double dx = x - center_[0];
    const double dv = v - center_[1];
    const double r = std::hypot(dx, dv);
    if (r == 0.0) throw PointNotOnBoundary("ball centre has no normal");
    return {dx / r, dv / r};
  }
  if (kind_ == Kind::Box) {
    const Interval& ix = box_.x(0);
    const Interval& iv = box_.v(0);
    const std::array<double, 4> dist = {std::abs(x - ix.lo), std::abs(x - ix.hi), std::abs(v - iv.lo),
                                        std::abs(v - iv.hi)};
    const auto k = std::min_element(dist.begin(), dist.end()) - dist.begin();
    static constexpr std::array<std::array<double, 2>, 4> normals = {{{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};
    return normals[static_cast<std::size_t>(k)];
  }
  // Raster: outside minus inside offsets over a 5x5 window around the nearest node.
  const int ci = static_cast<int>(std::lround((x - lattice_.x0) / lattice_.hx));
  const int cj = static_cast<int>(std::lround((v - lattice_.v0) / lattice_.hv));
  double nx = 0.0;
  double nv = 0.0;
  for (int di = -2; di <= 2; ++di)
    for (int dj = -2; dj <= 2; ++dj) {
      const double ox = lattice_.x(ci + di) - x;
      const double ov = lattice_.v(cj + dj) - v;
      const double sign = inside(ci + di, cj + dj) ? -1.0 : 1.0;
      nx += sign * ox;
      nv += sign * ov;
    }
  const double r = std::hypot(nx, nv);
  if (r == 0.0) throw PointNotOnBoundary("no boundary near the given point");
  return {nx / r, nv / r};
}

BoundaryLabel DomainMask::classify(double x, double v) const {
  if (kind_ == Kind::Box) return classify_boundary(PhasePoint::make1(x, v), box_);
  const auto n = outward_normal(x, v);
  if (std::abs(n[0]) <= kBoundaryTol) return BoundaryLabel::V;
  const double vn = v * n[0];
  if (std::abs(vn) <= kBoundaryTol) return BoundaryLabel::Xzero;
  return vn > 0.0 ? BoundaryLabel::Xplus : BoundaryLabel::Xminus;
}

std::vector<std::array<int, 2>> DomainMask::boundary_layer() const {
  std::vector<std::array<int, 2>> out;
  for (int i = 0; i < lattice_.nx; ++i)
    for (int j = 0; j < lattice_.nv; ++j) {
      if (!inside(i, j)) continue;
      for (const auto& s : kStep) {
        if (!inside(i + s[0], j + s[1])) {
          out.push_back({i, j});
          break;
        }
      }
    }
  return out;
}

MaskField::MaskField(MaskPtr m, double fill) : mask(std::move(m)) {
  values.assign(static_cast<std::size_t>(mask->lattice().size()), fill);
}

double MaskField::max_abs_inside() const {
  double out = 0.0;
  for (int k = 0; k < mask->lattice().size(); ++k)
    if (mask->inside_index(k)) out = std::max(out, std::abs(values[static_cast<std::size_t>(k)]));
  return out;
}

int ReachabilitySet::count() const {
  return static_cast<int>(std::count(reached.begin(), reached.end(), static_cast<unsigned char>(1)));
}

ReachabilitySet compute_attainable_set(const std::array<int, 2>& source, const MaskPtr& mask) {
  if (!mask->inside(source[0], source[1])) throw SourceOutside("attainable-set source is not an inside node");
  const MaskLattice& lat = mask->lattice();
  ReachabilitySet out;
  out.mask = mask;
  out.source = source;
  out.reached.assign(static_cast<std::size_t>(lat.size()), 0);
  std::vector<unsigned char> face_seen(static_cast<std::size_t>(lat.size()) * 4, 0);

  std::deque<std::array<int, 2>> queue{source};
  out.reached[static_cast<std::size_t>(lat.index(source[0], source[1]))] = 1;
  while (!queue.empty()) {
    const auto [i, j] = queue.front();
    queue.pop_front();
    const double v = lat.v(j);
    const int xdir = v > 0.0 ? kUpX : (v < 0.0 ? kDownX : -1);
    for (int d : {static_cast<int>(kUpV), static_cast<int>(kDownV), xdir}) {
      if (d < 0) continue;
      const int a = i + kStep[static_cast<std::size_t>(d)][0];
      const int b = j + kStep[static_cast<std::size_t>(d)][1];
      if (!mask->inside(a, b)) {
        auto& seen = face_seen[static_cast<std::size_t>(lat.index(i, j)) * 4 + static_cast<std::size_t>(d)];
        if (seen) continue;
        seen = 1;
        TouchedFace face;
        face.inside_node = {i, j};
        face.point = {0.5 * (lat.x(i) + lat.x(a)), 0.5 * (lat.v(j) + lat.v(b))};
        face.label = mask->classify(face.point[0], face.point[1]);
        out.touched.push_back(face);
        continue;
      }
      auto& flag = out.reached[static_cast<std::size_t>(lat.index(a, b))];
      if (flag) continue;
      flag = 1;
      queue.push_back({a, b});
    }
  }
  return out;
}

double apply_nondivergence(const MaskField& w, const CoefficientField& coeffs, const AssumptionReport& report,
                           int i, int j) {
  const MaskLattice& lat = w.mask->lattice();
  const double x = lat.x(i);
  const double v = lat.v(j);
  const PhasePoint p = PhasePoint::make1(x, v);
  const double a = coeffs.A[0][0](p);
  const double bt = nondivergence_drift(coeffs, report, p)[0];
  const double c = w(i, j);
  double out = a * (w(i, j + 1) - 2.0 * c + w(i, j - 1)) / (lat.hv * lat.hv);
  out += bt >= 0.0 ? bt * (w(i, j + 1) - c) / lat.hv : bt * (c - w(i, j - 1)) / lat.hv;
  out += v >= 0.0 ? v * (w(i + 1, j) - c) / lat.hx : v * (c - w(i - 1, j)) / lat.hx;
  return out;
}

namespace {

template <class Reduce>
double reduce_operator(const MaskField& w, const CoefficientField& coeffs, const AssumptionReport& report,
                       double init, Reduce reduce) {
  if (!report.dv_a_passed) throw AssumptionViolated("d_v a must be validated for the nondivergence operator");
  const MaskLattice& lat = w.mask->lattice();
  double out = init;
  for (int i = 1; i + 1 < lat.nx; ++i)
    for (int j = 1; j + 1 < lat.nv; ++j)
      if (w.mask->inside(i, j)) out = reduce(out, apply_nondivergence(w, coeffs, report, i, j));
  return out;
}

}  // namespace

double max_operator_value(const MaskField& w, const CoefficientField& coeffs, const AssumptionReport& report) {
  return reduce_operator(w, coeffs, report, -std::numeric_limits<double>::infinity(),
                         [](double a, double b) { return std::max(a, b); });
}

double min_operator_value(const MaskField& w, const CoefficientField& coeffs, const AssumptionReport& report) {
  return reduce_operator(w, coeffs, report, std::numeric_limits<double>::infinity(),
                         [](double a, double b) { return std::min(a, b); });
}

bool check_supersolution(const MaskField& w, const CoefficientField& coeffs, const AssumptionReport& report) {
  return max_operator_value(w, coeffs, report) <= 1e-8 * w.max_abs_inside();
}

Barrier make_barrier(const std::array<double, 2>& xi0, const MaskPtr& mask, const CoefficientField& coeffs,
                     const AssumptionReport& report) {
  const BoundaryLabel label = mask->classify(xi0[0], xi0[1]);
  // Velocity-symmetric masks (the ball) admit barriers at every boundary point.
  if (mask->kind() != DomainMask::Kind::Ball && label == BoundaryLabel::Xminus) {
    throw InvalidArgument("barriers are only built on the hypoelliptic boundary");
  }
  Barrier out{{xi0[0], xi0[1]}, mask->outward_normal(xi0[0], xi0[1]), 0.0, false, MaskField(mask)};
  const double cx = xi0[0] + out.normal[0];
  const double cv = xi0[1] + out.normal[1];
  for (double delta = 1.0; delta <= kParameterCap; delta *= 2.0) {
    MaskField w = MaskField::sample(mask, [&](double x, double v) {
      const double s = (x - cx) * (x - cx) + (v - cv) * (v - cv) - 1.0;
      return -std::expm1(-delta * s);
    });
    if (check_supersolution(w, coeffs, report)) {
      out.delta = delta;
      out.accepted = true;
      out.values = std::move(w);
      return out;
    }
  }
  throw NoAdmissibleDelta("no delta up to 2^20 gives a discrete supersolution");
}

double Polynomial::operator()(double x, double v) const {
  double out = 0.0;
  for (const auto& t : terms) out += t.coeff * std::pow(x, t.px) * std::pow(v, t.pv);
  return out;
}

int Polynomial::degree() const {
  int out = 0;
  for (const auto& t : terms)
    if (t.coeff != 0.0) out = std::max(out, t.px + t.pv);
  return out;
}

ExponentialSubsolution make_exponential_subsolution(const ProductDomain& domain, int nx, int nv,
                                                    const CoefficientField& coeffs, const AssumptionReport& report,
                                                    const Polynomial& u_poly) {
  if (u_poly.degree() > 4) throw InvalidArgument("polynomial degree must be at most 4");
  for (const auto& t : u_poly.terms)
    if (t.px < 0 || t.pv < 0) throw InvalidArgument("polynomial exponents must be non-negative");
  const auto mask = std::make_shared<const DomainMask>(DomainMask::box(domain, nx, nv));
  const double q = 1.0 - domain.x(0).lo;
  const MaskField poly = MaskField::sample(mask, [&](double x, double v) { return u_poly(x, v); });

  for (double delta = 1.0; delta <= kParameterCap; delta *= 2.0) {
    MaskField e = MaskField::sample(mask, [&](double x, double v) { return std::exp(delta * v * (x + q)); });
    const double c0 = min_operator_value(e, coeffs, report);
    if (!(c0 > 0.0)) continue;
    for (double c_hat = 1.0; c_hat <= kParameterCap; c_hat *= 2.0) {
      MaskField w(mask);
      MaskField diff(mask);
      for (std::size_t k = 0; k < w.values.size(); ++k) {
        w.values[k] = c_hat * e.values[k];
        diff.values[k] = w.values[k] - poly.values[k];
      }
      if (min_operator_value(diff, coeffs, report) >= 0.0) {
        return {delta, c_hat, q, c0, std::move(w), std::move(diff)};
      }
    }
    throw NoAdmissibleParameters("no c_hat up to 2^20 dominates the polynomial");
  }
  throw NoAdmissibleParameters("no delta up to 2^20 makes the exponential a strict subsolution");
}

}  // namespace kfp
