#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kfp/coefficients.hpp"
#include "kfp/geometry.hpp"

namespace kfp {

/// Uniform node lattice in the (x, v) plane: node (i, j) sits at
/// (x0 + i hx, v0 + j hv).
struct MaskLattice {
  double x0 = 0.0;
  double v0 = 0.0;
  double hx = 1.0;
  double hv = 1.0;
  int nx = 0;
  int nv = 0;

  double x(int i) const { return x0 + i * hx; }
  double v(int j) const { return v0 + j * hv; }
  int index(int i, int j) const { return i * nv + j; }
  int size() const { return nx * nv; }
  double h() const { return std::max(hx, hv); }
};

/// Neighbour directions on the lattice: +v, -v, +x, -x.
enum Direction { kUpV = 0, kDownV = 1, kUpX = 2, kDownX = 3 };
inline constexpr std::array<std::array<int, 2>, 4> kStep = {{{0, 1}, {0, -1}, {1, 0}, {-1, 0}}};

/// A general open set Omega (n = 1) as the set of inside lattice nodes. The
/// outermost lattice ring is always outside, so every inside node has four
/// lattice neighbours. The boundary of Omega near an inside node with an
/// outside neighbour is represented by the cut face halfway between them.
class DomainMask {
 public:
  enum class Kind { Box, Ball, Raster };

  DomainMask(MaskLattice lattice, std::vector<unsigned char> inside, Kind kind);

  /// Cell-centred nodes of a product domain (matching build_grid for even
  /// nv) plus one padding ring.
  static DomainMask box(const ProductDomain& domain, int nx, int nv);
  /// Disc of the given radius around `center` = (x, v), n cells across its
  /// diameter, nodes at cell centres so none sits on v = center_v.
  static DomainMask ball(std::array<double, 2> center, double radius, int n);
  /// Text raster, one line per x row, '#' inside and '.' outside, covering
  /// `bounds` with cell-centred nodes. Throws ConfigError on ragged input.
  static DomainMask from_raster(const std::string& text, const ProductDomain& bounds);

  const MaskLattice& lattice() const { return lattice_; }
  Kind kind() const { return kind_; }
  bool inside(int i, int j) const;
  bool inside_index(int k) const { return inside_[static_cast<std::size_t>(k)] != 0; }
  int inside_count() const;
  /// 4-connectivity of the inside nodes.
  bool is_connected() const;
  /// Bounding product domain (used for assumption sampling).
  ProductDomain bounds() const;

  /// Outward unit normal of Omega at a boundary point: exact for box and ball
  /// masks, estimated from the mask stencil for rasters.
  std::array<double, 2> outward_normal(double x, double v) const;
  /// V where the normal has no x component, otherwise the sign of v n_x.
  BoundaryLabel classify(double x, double v) const;

  /// Nodes that have at least one outside neighbour.
  std::vector<std::array<int, 2>> boundary_layer() const;

 private:
  MaskLattice lattice_;
  std::vector<unsigned char> inside_;
  Kind kind_;
  ProductDomain box_ = ProductDomain::unit_box();
  std::array<double, 2> center_{};
  double radius_ = 0.0;
};

using MaskPtr = std::shared_ptr<const DomainMask>;

/// Values on every lattice node of a mask (outside nodes included, so that
/// stencils touching the boundary can read explicit functions there).
struct MaskField {
  MaskPtr mask;
  std::vector<double> values;

  explicit MaskField(MaskPtr m, double fill = 0.0);
  double& operator()(int i, int j) { return values[static_cast<std::size_t>(mask->lattice().index(i, j))]; }
  double operator()(int i, int j) const {
    return values[static_cast<std::size_t>(mask->lattice().index(i, j))];
  }
  /// Fill every node from a function of (x, v).
  template <class Fn>
  static MaskField sample(MaskPtr m, Fn fn) {
    MaskField out(std::move(m));
    const MaskLattice& lat = out.mask->lattice();
    for (int i = 0; i < lat.nx; ++i)
      for (int j = 0; j < lat.nv; ++j) out(i, j) = fn(lat.x(i), lat.v(j));
    return out;
  }
  /// Max |value| over inside nodes.
  double max_abs_inside() const;
};

struct TouchedFace {
  std::array<int, 2> inside_node{};
  std::array<double, 2> point{};  // cut-face midpoint (x, v)
  BoundaryLabel label = BoundaryLabel::V;
};

struct ReachabilitySet {
  MaskPtr mask;
  std::array<int, 2> source{};
  std::vector<unsigned char> reached;
  std::vector<TouchedFace> touched;

  bool contains(int i, int j) const {
    return reached[static_cast<std::size_t>(mask->lattice().index(i, j))] != 0;
  }
  int count() const;
};

/// Breadth-first closure from `source` under v-moves (either direction) and
/// x-moves in the direction of sign(v), within inside nodes. Edges that leave
/// the mask are recorded as touched boundary faces. Throws SourceOutside.
ReachabilitySet compute_attainable_set(const std::array<int, 2>& source, const MaskPtr& mask);

/// Nondivergence-form discrete operator at an inside node:
/// a (w_{j+1} - 2 w_j + w_{j-1}) / hv^2 + b~ D_v^{up} w + v D_x^{up} w.
double apply_nondivergence(const MaskField& w, const CoefficientField& coeffs, const AssumptionReport& report,
                           int i, int j);

/// max over inside nodes of L_h w; throws AssumptionViolated unless d_v a was validated.
double max_operator_value(const MaskField& w, const CoefficientField& coeffs, const AssumptionReport& report);
double min_operator_value(const MaskField& w, const CoefficientField& coeffs, const AssumptionReport& report);

/// True iff L_h w <= 1e-8 ||w||_inf at every inside node.
bool check_supersolution(const MaskField& w, const CoefficientField& coeffs, const AssumptionReport& report);

struct Barrier {
  std::array<double, 2> center{};
  std::array<double, 2> normal{};
  double delta = 0.0;
  bool accepted = false;
  MaskField values;
};

inline constexpr double kParameterCap = 1048576.0;  // 2^20

/// w = 1 - exp(-delta (|xi - xi0 - n|^2 - |n|^2)), a positive multiple of
/// exp(-delta |n|^2) - exp(-delta |xi - xi0 - n|^2), with delta doubled from 1
/// until check_supersolution accepts it. Throws NoAdmissibleDelta past 2^20
/// and InvalidArgument when xi0 is labelled Xminus.
Barrier make_barrier(const std::array<double, 2>& xi0, const MaskPtr& mask, const CoefficientField& coeffs,
                     const AssumptionReport& report);

/// Polynomial in (x, v): sum of c x^p v^q.
struct Polynomial {
  struct Term {
    double coeff;
    int px;
    int pv;
  };
  std::vector<Term> terms;

  double operator()(double x, double v) const;
  int degree() const;
};

struct ExponentialSubsolution {
  double delta = 0.0;
  double c_hat = 0.0;
  double q = 0.0;
  /// min over nodes of L_h exp(delta v (x + q)).
  double c0 = 0.0;
  MaskField w;
  MaskField w_minus_u;
};

/// On the box mask of `domain` (nx x nv nodes): q = 1 - x_lo so x + q >= 1,
/// delta doubled from 1 until min L_h e > 0, then c_hat doubled from 1 until
/// L_h(c_hat e - u_poly) >= 0. Throws NoAdmissibleParameters past 2^20 and
/// InvalidArgument for degree > 4.
ExponentialSubsolution make_exponential_subsolution(const ProductDomain& domain, int nx, int nv,
                                                    const CoefficientField& coeffs, const AssumptionReport& report,
                                                    const Polynomial& u_poly);

}  // namespace kfp
