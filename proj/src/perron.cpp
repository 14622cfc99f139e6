#include "kfp/perron.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "kfp/error.hpp"

namespace kfp {

CylinderCover CylinderCover::make(const DomainMask& mask, int side) {
  const MaskLattice& lat = mask.lattice();
  const int extent = std::max(lat.nx, lat.nv) - 2;
  if (side <= 0) side = std::max(4, extent / 8);
  const int stride = std::max(1, side / 2);
  auto starts = [&](int n) {
    // Inside nodes live in [1, n - 1).
    std::vector<int> out;
    for (int s = 1;; s += stride) {
      out.push_back(s);
      if (s + side >= n - 1) break;
    }
    return out;
  };
  CylinderCover cover;
  for (int i0 : starts(lat.nx)) {
    for (int j0 : starts(lat.nv)) {
      SubBox b{i0, std::min(i0 + side, lat.nx - 1), j0, std::min(j0 + side, lat.nv - 1)};
      bool any = false;
      for (int i = b.i0; i < b.i1 && !any; ++i)
        for (int j = b.j0; j < b.j1 && !any; ++j) any = mask.inside(i, j);
      if (any) cover.boxes.push_back(b);
    }
  }
  return cover;
}

bool CylinderCover::covers(const DomainMask& mask) const {
  const MaskLattice& lat = mask.lattice();
  for (int i = 0; i < lat.nx; ++i)
    for (int j = 0; j < lat.nv; ++j) {
      if (!mask.inside(i, j)) continue;
      const bool hit = std::any_of(boxes.begin(), boxes.end(), [&](const SubBox& b) { return b.contains(i, j); });
      if (!hit) return false;
    }
  return true;
}

FaceData FaceData::from(const MaskPtr& mask, const ScalarField& g, Bracket bracket) {
  const MaskLattice& lat = mask->lattice();
  FaceData out{mask, std::vector<double>(static_cast<std::size_t>(lat.size()) * 4,
                                         std::numeric_limits<double>::quiet_NaN())};
  for (int i = 0; i < lat.nx; ++i)
    for (int j = 0; j < lat.nv; ++j) {
      if (!mask->inside(i, j)) continue;
      for (int d = 0; d < 4; ++d) {
        const int a = i + kStep[static_cast<std::size_t>(d)][0];
        const int b = j + kStep[static_cast<std::size_t>(d)][1];
        if (mask->inside(a, b)) continue;
        const double x0 = lat.x(i), v0 = lat.v(j), x1 = lat.x(a), v1 = lat.v(b);
        const std::array<double, 3> s = {g.at(x0, v0), g.at(0.5 * (x0 + x1), 0.5 * (v0 + v1)), g.at(x1, v1)};
        const double value = bracket == Bracket::Upper ? *std::max_element(s.begin(), s.end())
                                                       : *std::min_element(s.begin(), s.end());
        out.values[static_cast<std::size_t>(lat.index(i, j)) * 4 + static_cast<std::size_t>(d)] = value;
      }
    }
  return out;
}

double FaceData::sup() const {
  double out = -std::numeric_limits<double>::infinity();
  for (double v : values)
    if (!std::isnan(v)) out = std::max(out, v);
  return out;
}

double FaceData::inf() const {
  double out = std::numeric_limits<double>::infinity();
  for (double v : values)
    if (!std::isnan(v)) out = std::min(out, v);
  return out;
}

BlockLift::BlockLift(const MaskPtr& mask, const CoefficientField& coeffs, const SubBox& box) : box_(box) {
  const MaskLattice& lat = mask->lattice();
  std::vector<int> local(static_cast<std::size_t>(lat.size()), -1);
  for (int i = box.i0; i < box.i1; ++i)
    for (int j = box.j0; j < box.j1; ++j)
      if (mask->inside(i, j)) {
        local[static_cast<std::size_t>(lat.index(i, j))] = static_cast<int>(nodes_.size());
        nodes_.push_back(lat.index(i, j));
      }
  const int n = size();
  if (n == 0) return;

  // Triplets first, to size the band.
  struct Entry {
    int r, c;
    double v;
  };
  std::vector<Entry> entries;
  source_.assign(static_cast<std::size_t>(n), 0.0);
  const double hx = lat.hx;
  const double hv = lat.hv;

  for (int r = 0; r < n; ++r) {
    const int node = nodes_[static_cast<std::size_t>(r)];
    const int i = node / lat.nv;
    const int j = node % lat.nv;
    const double x = lat.x(i);
    const double v = lat.v(j);
    double diag = 0.0;
    // k_face applies when the neighbour in direction d is outside the mask.
    auto couple = [&](int d, double k_inner, double k_face) {
      const int a = i + kStep[static_cast<std::size_t>(d)][0];
      const int b = j + kStep[static_cast<std::size_t>(d)][1];
      if (!mask->inside(a, b)) {
        diag += k_face;
        faces_.push_back({r, node, d, k_face});
        return;
      }
      diag += k_inner;
      const int nb = lat.index(a, b);
      const int c = local[static_cast<std::size_t>(nb)];
      if (c >= 0) {
        entries.push_back({r, c, -k_inner});
      } else {
        couplings_.push_back({r, nb, k_inner});
      }
    };

    const double a_here = coeffs.A[0][0].at(x, v);
    if (!(a_here > 0.0)) throw AssumptionViolated("diffusion must be positive for the lift");
    for (int d : {static_cast<int>(kUpV), static_cast<int>(kDownV)}) {
      const double vn = lat.v(j + kStep[static_cast<std::size_t>(d)][1]);
      const double a_nb = coeffs.A[0][0].at(x, vn);
      const double a_face = coeffs.A[0][0].at(x, 0.5 * (v + vn));
      couple(d, 0.5 * (a_here + a_nb) / (hv * hv), a_face / (0.5 * hv * hv));
    }
    const double b = coeffs.b[0].at(x, v);
    if (b > 0.0) couple(kUpV, b / hv, b / (0.5 * hv));
    if (b < 0.0) couple(kDownV, -b / hv, -b / (0.5 * hv));
    if (v > 0.0) couple(kUpX, v / hx, v / (0.5 * hx));
    if (v < 0.0) couple(kDownX, -v / hx, -v / (0.5 * hx));
    entries.push_back({r, r, diag});
    source_[static_cast<std::size_t>(r)] = coeffs.f.at(x, v);
  }

  for (const auto& e : entries) bw_ = std::max(bw_, std::abs(e.r - e.c));
  const int ldab = 3 * bw_ + 1;
  lu_.assign(static_cast<std::size_t>(ldab) * static_cast<std::size_t>(n), 0.0);
  for (const auto& e : entries) {
    lu_[static_cast<std::size_t>(e.c) * static_cast<std::size_t>(ldab) + static_cast<std::size_t>(2 * bw_ + e.r - e.c)] +=
        e.v;
  }
  ipiv_.assign(static_cast<std::size_t>(n), 0);
  const lapack_int info = LAPACKE_dgbtrf(LAPACK_COL_MAJOR, n, n, bw_, bw_, lu_.data(), ldab, ipiv_.data());
  if (info != 0) throw SingularPivot("sub-box lift matrix is singular (info " + std::to_string(info) + ")");
}

double BlockLift::apply(MaskField& U, const FaceData& data, double source_sign, int* rises) const {
  const int n = size();
  if (n == 0) return 0.0;
  std::vector<double> rhs(source_);
  for (double& r : rhs) r *= source_sign;
  for (const auto& c : couplings_) rhs[static_cast<std::size_t>(c.row)] += c.coeff * U.values[static_cast<std::size_t>(c.node)];
  for (const auto& f : faces_) {
    rhs[static_cast<std::size_t>(f.row)] +=
        f.coeff * data.values[static_cast<std::size_t>(f.node) * 4 + static_cast<std::size_t>(f.dir)];
  }
  const lapack_int info = LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', n, bw_, bw_, 1, lu_.data(), 3 * bw_ + 1,
                                         ipiv_.data(), rhs.data(), n);
  if (info != 0) throw SingularPivot("sub-box back substitution failed");
  double change = 0.0;
  for (int r = 0; r < n; ++r) {
    double& slot = U.values[static_cast<std::size_t>(nodes_[static_cast<std::size_t>(r)])];
    const double next = rhs[static_cast<std::size_t>(r)];
    change = std::max(change, std::abs(next - slot));
    if (rises && next > slot + 1e-9 * (1.0 + std::abs(slot))) ++*rises;
    slot = rhs[static_cast<std::size_t>(r)];
  }
  return change;
}

MaskField harmonic_lift(const MaskField& U, const SubBox& box, const CoefficientField& coeffs,
                        const FaceData& data) {
  if (U.mask != data.mask) throw MaskMismatch("field and face data use different masks");
  MaskField out = U;
  BlockLift(U.mask, coeffs, box).apply(out, data);
  return out;
}

namespace {

PerronResult upper_run(const MaskPtr& mask, const FaceData& data, double source_sign,
                       const CoefficientField& coeffs, const CylinderCover& cover, int max_sweeps) {
  std::vector<BlockLift> lifts;
  lifts.reserve(cover.boxes.size());
  for (const auto& b : cover.boxes) lifts.emplace_back(mask, coeffs, b);

  const double top = data.sup();
  PerronResult out{MaskField(mask, std::isfinite(top) ? top : 0.0), {}, 0, false, 0};
  MaskField& U = out.field;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double change = 0.0;
    for (const auto& lift : lifts) {
      change = std::max(change, lift.apply(U, data, source_sign, &out.monotone_violations));
    }
    out.gap_history.push_back(change);
    out.sweeps = sweep + 1;
    if (change <= kPerronTol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace

PerronResult perron_iterate(const MaskPtr& mask, const ScalarField& g, PerronDirection direction,
                            const CoefficientField& coeffs, const CylinderCover& cover, int max_sweeps) {
  if (max_sweeps < 1) throw InvalidArgument("max_sweeps must be positive");
  if (!cover.covers(*mask)) throw InvalidArgument("cover misses inside nodes");
  if (direction == PerronDirection::Upper) {
    return upper_run(mask, FaceData::from(mask, g, FaceData::Bracket::Upper), 1.0, coeffs, cover, max_sweeps);
  }
  FaceData lower = FaceData::from(mask, g, FaceData::Bracket::Lower);
  for (double& v : lower.values) v = -v;
  PerronResult out = upper_run(mask, lower, -1.0, coeffs, cover, max_sweeps);
  for (double& v : out.field.values) v = -v;
  return out;
}

namespace {

void require_same_mask(const MaskField& a, const MaskField& b) {
  if (a.mask != b.mask && (a.mask->lattice().nx != b.mask->lattice().nx ||
                           a.mask->lattice().nv != b.mask->lattice().nv)) {
    throw MaskMismatch("fields live on different masks");
  }
}

}  // namespace

double resolutivity_gap(const MaskField& upper, const MaskField& lower) {
  require_same_mask(upper, lower);
  double out = 0.0;
  for (int k = 0; k < upper.mask->lattice().size(); ++k)
    if (upper.mask->inside_index(k)) {
      out = std::max(out, std::abs(upper.values[static_cast<std::size_t>(k)] - lower.values[static_cast<std::size_t>(k)]));
    }
  return out;
}

double min_ordering(const MaskField& upper, const MaskField& lower) {
  require_same_mask(upper, lower);
  double out = std::numeric_limits<double>::infinity();
  for (int k = 0; k < upper.mask->lattice().size(); ++k)
    if (upper.mask->inside_index(k)) {
      out = std::min(out, upper.values[static_cast<std::size_t>(k)] - lower.values[static_cast<std::size_t>(k)]);
    }
  return out;
}

bool RegularityProbe::decays() const {
  for (std::size_t k = 0; k < discrepancy_4h.size(); ++k) {
    const bool both_zero = discrepancy_4h[k] <= 1e-12 && discrepancy_2h[k] <= 1e-12;
    if (!both_zero && !(discrepancy_2h[k] < discrepancy_4h[k])) return false;
  }
  return true;
}

std::vector<RegularityProbe> probe_regularity(const MaskPtr& mask, const std::vector<std::array<double, 2>>& points,
                                              const std::vector<ScalarField>& family,
                                              const CoefficientField& coeffs) {
  const CylinderCover cover = CylinderCover::make(*mask);
  std::vector<MaskField> upper;
  for (const auto& g : family) upper.push_back(perron_iterate(mask, g, PerronDirection::Upper, coeffs, cover).field);
  return probe_regularity(mask, points, family, upper, coeffs);
}

std::vector<RegularityProbe> probe_regularity(const MaskPtr& mask, const std::vector<std::array<double, 2>>& points,
                                              const std::vector<ScalarField>& family,
                                              const std::vector<MaskField>& upper, const CoefficientField& coeffs) {
  if (upper.size() != family.size()) throw InvalidArgument("one upper field per datum is required");
  const MaskLattice& lat = mask->lattice();
  const double h = lat.h();
  const AssumptionReport report = validate_assumptions(coeffs, mask->bounds(), 9);
  std::vector<RegularityProbe> out;
  for (const auto& p : points) {
    RegularityProbe probe;
    probe.point = p;
    probe.label = mask->classify(p[0], p[1]);
    probe.barrier_attempted = mask->kind() == DomainMask::Kind::Ball || probe.label != BoundaryLabel::Xminus;
    if (probe.barrier_attempted) {
      try {
        const Barrier b = make_barrier(p, mask, coeffs, report);
        probe.barrier_found = b.accepted;
        probe.delta = b.delta;
      } catch (const NoAdmissibleDelta&) {
        probe.barrier_found = false;
      }
    }
    for (std::size_t k = 0; k < family.size(); ++k) {
      const double g0 = family[k].at(p[0], p[1]);
      double d4 = 0.0;
      double d2 = 0.0;
      for (int i = 0; i < lat.nx; ++i)
        for (int j = 0; j < lat.nv; ++j) {
          if (!mask->inside(i, j)) continue;
          const double r = std::hypot(lat.x(i) - p[0], lat.v(j) - p[1]);
          const double e = std::abs(upper[k](i, j) - g0);
          if (r <= 4.0 * h) d4 = std::max(d4, e);
          if (r <= 2.0 * h) d2 = std::max(d2, e);
        }
      probe.discrepancy_4h.push_back(d4);
      probe.discrepancy_2h.push_back(d2);
    }
    out.push_back(std::move(probe));
  }
  return out;
}

}  // namespace kfp
