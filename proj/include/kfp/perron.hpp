#pragma once

#include <array>
#include <memory>
#include <vector>

#include "kfp/coefficients.hpp"
#include "kfp/mask_ops.hpp"

namespace kfp {

/// Lattice-aligned sub-box [i0, i1) x [j0, j1).
struct SubBox {
  int i0 = 0;
  int i1 = 0;
  int j0 = 0;
  int j1 = 0;

  bool contains(int i, int j) const { return i >= i0 && i < i1 && j >= j0 && j < j1; }
};

/// Sub-boxes of side max(4, extent / 8) nodes at half-side stride, in
/// lexicographic sweep order; boxes without inside nodes are dropped.
struct CylinderCover {
  std::vector<SubBox> boxes;

  static CylinderCover make(const DomainMask& mask, int side = 0);
  /// Every inside node lies in at least one box.
  bool covers(const DomainMask& mask) const;
};

/// Dirichlet data on cut faces: one value per (inside node, direction)
/// whose neighbour is outside the mask, NaN elsewhere. The boundary point
/// lies somewhere on the segment to the outside node; the upper bracket
/// takes the max of g over the segment's ends and midpoint, the lower
/// bracket the min.
struct FaceData {
  MaskPtr mask;
  std::vector<double> values;

  enum class Bracket { Upper, Lower };
  static FaceData from(const MaskPtr& mask, const ScalarField& g, Bracket bracket);

  double at(int i, int j, int dir) const {
    return values[static_cast<std::size_t>(mask->lattice().index(i, j)) * 4 + static_cast<std::size_t>(dir)];
  }
  double sup() const;
  double inf() const;
};

/// Factorized epsilon = 0 operator on the inside nodes of one sub-box. Rows
/// match the finite-volume assembly: neighbours outside the sub-box but
/// inside the mask are read from U, cut faces sit at half a step and carry
/// face data. The x-neighbour against the direction of v is never read.
class BlockLift {
 public:
  BlockLift(const MaskPtr& mask, const CoefficientField& coeffs, const SubBox& box);

  /// Overwrites U on the block with the solution; returns the largest
  /// change. `source_sign` scales f (the lower run solves with -f); nodes
  /// that rise by more than 1e-9 are counted into `rises`.
  double apply(MaskField& U, const FaceData& data, double source_sign = 1.0, int* rises = nullptr) const;

  const SubBox& box() const { return box_; }
  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Coupling {
    int row;
    int node;  // lattice index read from U
    double coeff;
  };
  struct FaceTerm {
    int row;
    int node;
    int dir;
    double coeff;
  };

  SubBox box_;
  std::vector<int> nodes_;  // lattice indices, local order
  std::vector<double> source_;
  std::vector<Coupling> couplings_;
  std::vector<FaceTerm> faces_;
  int bw_ = 0;
  std::vector<double> lu_;
  std::vector<int> ipiv_;
};

/// One lift of U on `box` (factorizes on the fly).
MaskField harmonic_lift(const MaskField& U, const SubBox& box, const CoefficientField& coeffs,
                        const FaceData& data);

enum class PerronDirection { Upper, Lower };

struct PerronResult {
  MaskField field;
  /// Largest node change of each sweep.
  std::vector<double> gap_history;
  int sweeps = 0;
  bool converged = false;
  /// Nodes whose value rose (upper run) by more than 1e-9 during a lift.
  int monotone_violations = 0;
};

inline constexpr double kPerronTol = 1e-7;

/// Upper run: U starts at the sup of the upper face data and is lifted over
/// the cover until a sweep changes no node by more than 1e-7. Lower run: the
/// negated upper run on -g. Returns the last iterate either way; check
/// `converged`.
PerronResult perron_iterate(const MaskPtr& mask, const ScalarField& g, PerronDirection direction,
                            const CoefficientField& coeffs, const CylinderCover& cover, int max_sweeps = 20000);

/// max |upper - lower| over inside nodes; MaskMismatch for different masks.
double resolutivity_gap(const MaskField& upper, const MaskField& lower);
/// min (upper - lower) over inside nodes.
double min_ordering(const MaskField& upper, const MaskField& lower);

struct RegularityProbe {
  std::array<double, 2> point{};
  BoundaryLabel label = BoundaryLabel::V;
  bool barrier_attempted = false;
  bool barrier_found = false;
  double delta = 0.0;
  /// Per datum in the family: max |U - g(xi0)| over inside nodes within 4h and 2h.
  std::vector<double> discrepancy_4h;
  std::vector<double> discrepancy_2h;

  bool decays() const;
};

/// Upper Perron solutions for each g (computed once) probed at every point.
/// Barriers are only attempted where make_barrier accepts the label.
std::vector<RegularityProbe> probe_regularity(const MaskPtr& mask, const std::vector<std::array<double, 2>>& points,
                                              const std::vector<ScalarField>& family,
                                              const CoefficientField& coeffs);

/// Same probe against precomputed upper Perron fields (one per datum).
std::vector<RegularityProbe> probe_regularity(const MaskPtr& mask, const std::vector<std::array<double, 2>>& points,
                                              const std::vector<ScalarField>& family,
                                              const std::vector<MaskField>& upper, const CoefficientField& coeffs);

}  // namespace kfp
