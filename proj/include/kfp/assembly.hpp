#pragma once

#include <vector>

#include "kfp/coefficients.hpp"
#include "kfp/grid.hpp"
#include "kfp/kernels.hpp"

namespace kfp {

/// Discretized -L^eps with its boundary rows, over cells plus spatial traces.
struct SparseOperator {
  GridPtr grid;
  double eps = 0.0;
  CsrMatrix matrix;
  std::vector<double> rhs;
};

/// Pieces of the operator, for audits that need one term in isolation.
enum AssemblyPart : unsigned {
  kPartDiffusion = 1u,
  kPartDrift = 2u,
  kPartTransport = 4u,
  kPartViscosity = 8u,
  kPartTraceRows = 16u,
  kPartSource = 32u,
  kPartAll = 63u,
};

/// Conservative v-diffusion (arithmetic face means), upwind drift and
/// transport, eps * second differences in x. Velocity-face ghosts are
/// eliminated with g1; each spatial-face node carries a trace unknown with
/// the Robin row (eps/(hx/2) + (v.n)+) u_b - eps/(hx/2) u_adj = (v.n)+ g2,
/// or u_b = u_adj where v.n < 0.
/// Throws AssumptionViolated if the diffusion is not positive on the grid.
SparseOperator assemble(const GridPtr& grid, const CoefficientField& coeffs, double eps,
                        unsigned parts = kPartAll, Exec exec = Exec::Parallel);

/// Right-hand side only, for reusing one operator with different data.
std::vector<double> assemble_rhs(const GridPtr& grid, const CoefficientField& coeffs, double eps);

struct MMatrixReport {
  bool passed = true;
  double max_offdiag = 0.0;
  double min_diag = 0.0;
  double min_row_sum = 0.0;
  int worst_row = -1;
};

/// Off-diagonals <= 0, diagonal > 0, row sums >= 0 (to 1e-12 relative).
MMatrixReport check_m_matrix(const CsrMatrix& a);

/// |B(u, phi)| where B is the summation-by-parts form of the scheme:
/// diffusion and viscous face products, the drift term, the transport term
/// moved onto phi, minus the source pairing and the spatial boundary flux
/// sum (v.n) u_b phi + eps d_n u phi. Zero (to rounding) for a solution of
/// the assembled system; phi vanishes implicitly on the velocity faces.
double check_green_identity(const Field& u, const TraceFunction& trace, const CoefficientField& coeffs,
                            const Field& phi, double eps = 0.0);

/// Defect of <T u, phi> = boundary flux - <u, v d_x phi> for the assembled
/// upwind transport T, u a full unknown vector.
double transport_sbp_defect(const GridPtr& grid, const std::vector<double>& unknowns,
                            const Field& phi);

}  // namespace kfp
