#include "kfp/assembly.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

#include "kfp/error.hpp"

namespace kfp {

namespace {

constexpr int kMaxRowEntries = 8;

struct Row {
  int count = 0;
  int col[kMaxRowEntries];
  double val[kMaxRowEntries];
  double rhs = 0.0;

  void add(int c, double v) {
    for (int k = 0; k < count; ++k) {
      if (col[k] == c) {
        val[k] += v;
        return;
      }
    }
    col[count] = c;
    val[count] = v;
    ++count;
  }

  void sort() {
    for (int a = 1; a < count; ++a) {
      for (int b = a; b > 0 && col[b - 1] > col[b]; --b) {
        std::swap(col[b - 1], col[b]);
        std::swap(val[b - 1], val[b]);
      }
    }
  }
};

class RowBuilder {
 public:
  RowBuilder(const Grid& grid, const CoefficientField& coeffs, double eps, unsigned parts)
      : g_(grid), c_(coeffs), eps_(eps), parts_(parts) {}

  /// Returns false if a non-positive diffusion value was met.
  bool build(int r, Row& row) const {
    const int nv = g_.nv();
    const int column = r / nv;
    const int j = r % nv;
    if (column == 0) return trace_row(0, j, row);
    if (column == g_.nx() + 1) return trace_row(1, j, row);
    return cell_row(column - 1, j, row);
  }

 private:
  bool trace_row(int side, int j, Row& row) const {
    const int self = g_.unknown_of_trace(side, j);
    if (!(parts_ & kPartTraceRows)) {
      row.add(self, 0.0);
      return true;
    }
    const int i_adj = side == 0 ? 0 : g_.nx() - 1;
    const int adj = g_.unknown_of_cell(i_adj, j);
    const double v = g_.v().node(j);
    const double vn = v * Grid::trace_normal(side);
    if (vn > 0.0) {
      const double k = eps_ / (0.5 * g_.hx());
      row.add(self, k + vn);
      if (k > 0.0) row.add(adj, -k);
      if (parts_ & kPartSource) row.rhs = vn * c_.g2.at(g_.trace_x(side), v);
    } else {
      row.add(self, 1.0);
      row.add(adj, -1.0);
    }
    return true;
  }

  bool cell_row(int i, int j, Row& row) const {
    const int nv = g_.nv();
    const int self = g_.unknown_of_cell(i, j);
    const double x = g_.x().node(i);
    const double v = g_.v().node(j);
    const double hv = g_.hv();
    const double hx = g_.hx();
    const bool sources = parts_ & kPartSource;
    bool ok = true;
    row.add(self, 0.0);

    if (parts_ & kPartDiffusion) {
      const double a_here = c_.A[0][0].at(x, v);
      ok = ok && a_here > 0.0;
      // Upper face.
      if (j < nv - 1) {
        const double a_nb = c_.A[0][0].at(x, g_.v().node(j + 1));
        ok = ok && a_nb > 0.0;
        const double k = 0.5 * (a_here + a_nb) / (hv * hv);
        row.add(self, k);
        row.add(self + 1, -k);
      } else {
        const double vb = g_.v().hi;
        const double a_b = c_.A[0][0].at(x, vb);
        ok = ok && a_b > 0.0;
        const double k = a_b / (g_.v().d_hi * hv);
        row.add(self, k);
        if (sources) row.rhs += k * c_.g1.at(x, vb);
      }
      // Lower face.
      if (j > 0) {
        const double a_nb = c_.A[0][0].at(x, g_.v().node(j - 1));
        ok = ok && a_nb > 0.0;
        const double k = 0.5 * (a_here + a_nb) / (hv * hv);
        row.add(self, k);
        row.add(self - 1, -k);
      } else {
        const double vb = g_.v().lo;
        const double a_b = c_.A[0][0].at(x, vb);
        ok = ok && a_b > 0.0;
        const double k = a_b / (g_.v().d_lo * hv);
        row.add(self, k);
        if (sources) row.rhs += k * c_.g1.at(x, vb);
      }
    }

    if (parts_ & kPartDrift) {
      const double b = c_.b[0].at(x, v);
      if (b > 0.0) {
        if (j < nv - 1) {
          row.add(self, b / hv);
          row.add(self + 1, -b / hv);
        } else {
          const double k = b / g_.v().d_hi;
          row.add(self, k);
          if (sources) row.rhs += k * c_.g1.at(x, g_.v().hi);
        }
      } else if (b < 0.0) {
        if (j > 0) {
          row.add(self, -b / hv);
          row.add(self - 1, b / hv);
        } else {
          const double k = -b / g_.v().d_lo;
          row.add(self, k);
          if (sources) row.rhs += k * c_.g1.at(x, g_.v().lo);
        }
      }
    }

    if (parts_ & kPartTransport) {
      const bool edge = v > 0.0 ? i == g_.nx() - 1 : i == 0;
      const double k = std::abs(v) / (edge ? 0.5 * hx : hx);
      int nb;
      if (v > 0.0) {
        nb = i < g_.nx() - 1 ? g_.unknown_of_cell(i + 1, j) : g_.unknown_of_trace(1, j);
      } else {
        nb = i > 0 ? g_.unknown_of_cell(i - 1, j) : g_.unknown_of_trace(0, j);
      }
      row.add(self, k);
      row.add(nb, -k);
    }

    if ((parts_ & kPartViscosity) && eps_ > 0.0) {
      const double inner = eps_ / (hx * hx);
      const double edge = eps_ / (hx * 0.5 * hx);
      const double kl = i > 0 ? inner : edge;
      const double kr = i < g_.nx() - 1 ? inner : edge;
      row.add(self, kl + kr);
      row.add(i > 0 ? g_.unknown_of_cell(i - 1, j) : g_.unknown_of_trace(0, j), -kl);
      row.add(i < g_.nx() - 1 ? g_.unknown_of_cell(i + 1, j) : g_.unknown_of_trace(1, j), -kr);
    }

    if (sources) row.rhs += c_.f.at(x, v);
    return ok;
  }

  const Grid& g_;
  const CoefficientField& c_;
  double eps_;
  unsigned parts_;
};

std::vector<Row> build_rows(const Grid& grid, const CoefficientField& coeffs, double eps,
                            unsigned parts, Exec exec) {
  if (coeffs.n != 1) throw InvalidArgument("assembly supports n = 1 only");
  if (eps < 0.0) throw InvalidArgument("viscosity must be non-negative");
  const int n = grid.unknown_count();
  std::vector<Row> rows(static_cast<std::size_t>(n));
  RowBuilder builder(grid, coeffs, eps, parts);
  std::atomic<bool> positive{true};
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (int r = 0; r < n; ++r) {
      if (!builder.build(r, rows[static_cast<std::size_t>(r)])) positive = false;
    }
  } else {
    for (int r = 0; r < n; ++r) {
      if (!builder.build(r, rows[static_cast<std::size_t>(r)])) positive = false;
    }
  }
  if (!positive) throw AssumptionViolated("diffusion coefficient is not positive on the grid");
  return rows;
}

}  // namespace

SparseOperator assemble(const GridPtr& grid, const CoefficientField& coeffs, double eps, unsigned parts,
                        Exec exec) {
  std::vector<Row> rows = build_rows(*grid, coeffs, eps, parts, exec);
  SparseOperator op;
  op.grid = grid;
  op.eps = eps;
  const int n = grid->unknown_count();
  CsrMatrix& m = op.matrix;
  m.rows = m.cols = n;
  m.row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
  for (int r = 0; r < n; ++r) {
    m.row_ptr[static_cast<std::size_t>(r) + 1] = m.row_ptr[static_cast<std::size_t>(r)] + rows[static_cast<std::size_t>(r)].count;
  }
  m.col.resize(static_cast<std::size_t>(m.row_ptr.back()));
  m.val.resize(m.col.size());
  op.rhs.resize(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) {
    Row& row = rows[static_cast<std::size_t>(r)];
    row.sort();
    const auto base = static_cast<std::size_t>(m.row_ptr[static_cast<std::size_t>(r)]);
    for (int k = 0; k < row.count; ++k) {
      m.col[base + static_cast<std::size_t>(k)] = row.col[k];
      m.val[base + static_cast<std::size_t>(k)] = row.val[k];
    }
    op.rhs[static_cast<std::size_t>(r)] = row.rhs;
  }
  return op;
}

std::vector<double> assemble_rhs(const GridPtr& grid, const CoefficientField& coeffs, double eps) {
  std::vector<Row> rows = build_rows(*grid, coeffs, eps, kPartAll, Exec::Parallel);
  std::vector<double> rhs(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) rhs[r] = rows[r].rhs;
  return rhs;
}

MMatrixReport check_m_matrix(const CsrMatrix& a) {
  MMatrixReport report;
  report.min_diag = std::numeric_limits<double>::infinity();
  report.min_row_sum = std::numeric_limits<double>::infinity();
  for (int r = 0; r < a.rows; ++r) {
    double diag = 0.0;
    double sum = 0.0;
    double scale = 0.0;
    for (int k = a.row_ptr[static_cast<std::size_t>(r)]; k < a.row_ptr[static_cast<std::size_t>(r) + 1]; ++k) {
      const double v = a.val[static_cast<std::size_t>(k)];
      sum += v;
      scale = std::max(scale, std::abs(v));
      if (a.col[static_cast<std::size_t>(k)] == r) {
        diag = v;
      } else {
        report.max_offdiag = std::max(report.max_offdiag, v);
        if (v > 0.0) {
          report.passed = false;
          report.worst_row = r;
        }
      }
    }
    report.min_diag = std::min(report.min_diag, diag);
    report.min_row_sum = std::min(report.min_row_sum, sum);
    if (diag <= 0.0 || sum < -1e-12 * scale) {
      report.passed = false;
      report.worst_row = r;
    }
  }
  return report;
}

double check_green_identity(const Field& u, const TraceFunction& trace, const CoefficientField& coeffs,
                            const Field& phi, double eps) {
  const Grid& g = *u.grid;
  const int nx = g.nx();
  const int nv = g.nv();
  const double hx = g.hx();
  const double hv = g.hv();
  const double cell = hx * hv;
  const auto& a = coeffs.A[0][0];

  double diffusion = 0.0;
  double drift = 0.0;
  double transport = 0.0;
  double viscous = 0.0;
  double source = 0.0;
  double boundary = 0.0;

  for (int i = 0; i < nx; ++i) {
    const double x = g.x().node(i);
    for (int j = 0; j < nv; ++j) {
      const double v = g.v().node(j);
      // Velocity faces: interior faces once, boundary faces against g1.
      if (j < nv - 1) {
        const double af = 0.5 * (a.at(x, v) + a.at(x, g.v().node(j + 1)));
        diffusion += cell * af * (u(i, j + 1) - u(i, j)) * (phi(i, j + 1) - phi(i, j)) / (hv * hv);
      } else {
        const double vb = g.v().hi;
        diffusion += cell * a.at(x, vb) / (g.v().d_hi * hv) * (u(i, j) - coeffs.g1.at(x, vb)) * phi(i, j);
      }
      if (j == 0) {
        const double vb = g.v().lo;
        diffusion += cell * a.at(x, vb) / (g.v().d_lo * hv) * (u(i, j) - coeffs.g1.at(x, vb)) * phi(i, j);
      }

      const double b = coeffs.b[0].at(x, v);
      double dvu = 0.0;
      if (b > 0.0) {
        dvu = j < nv - 1 ? (u(i, j + 1) - u(i, j)) / hv
                         : (coeffs.g1.at(x, g.v().hi) - u(i, j)) / g.v().d_hi;
      } else if (b < 0.0) {
        dvu = j > 0 ? (u(i, j) - u(i, j - 1)) / hv : (u(i, j) - coeffs.g1.at(x, g.v().lo)) / g.v().d_lo;
      }
      drift -= cell * b * dvu * phi(i, j);

      // Spatial faces: upwind flux times the difference of phi.
      if (i < nx - 1) {
        const double flux = v > 0.0 ? v * u(i + 1, j) : v * u(i, j);
        transport += hv * flux * (phi(i + 1, j) - phi(i, j));
        viscous += eps * hv * (u(i + 1, j) - u(i, j)) * (phi(i + 1, j) - phi(i, j)) / hx;
      }
      source += cell * coeffs.f.at(x, v) * phi(i, j);
    }
  }

  for (int side = 0; side < 2; ++side) {
    const int i_adj = side == 0 ? 0 : nx - 1;
    for (int j = 0; j < nv; ++j) {
      const double vn = g.v().node(j) * Grid::trace_normal(side);
      const double dn = (trace(side, j) - u(i_adj, j)) / (0.5 * hx);
      boundary += hv * (vn * trace(side, j) + eps * dn) * phi(i_adj, j);
      // half-cell upwind difference into data faces
      if (vn > 0.0) transport += hv * vn * (u(i_adj, j) - trace(side, j)) * phi(i_adj, j);
    }
  }

  return std::abs(diffusion + drift + transport + viscous - source - boundary);
}

double transport_sbp_defect(const GridPtr& grid, const std::vector<double>& unknowns, const Field& phi) {
  const Grid& g = *grid;
  CoefficientField dummy = CoefficientField::isotropic(1, 1.0, ScalarField::constant(0.0));
  const SparseOperator op = assemble(grid, dummy, 0.0, kPartTransport, Exec::Serial);
  std::vector<double> tu;
  kernels::spmv(op.matrix, unknowns, tu, Exec::Serial);

  const int nx = g.nx();
  const int nv = g.nv();
  const double hv = g.hv();
  auto val = [&](int column, int j) { return unknowns[static_cast<std::size_t>(column * nv + j)]; };

  double lhs = 0.0;
  double faces = 0.0;
  double flux = 0.0;
  for (int j = 0; j < nv; ++j) {
    const double v = g.v().node(j);
    // Face fluxes F_c for faces c = 0..nx (face c sits left of cell c).
    auto face_flux = [&](int c) { return v > 0.0 ? v * val(c + 1, j) : v * val(c, j); };
    for (int i = 0; i < nx; ++i) {
      lhs -= g.hx() * hv * phi(i, j) * tu[static_cast<std::size_t>(g.unknown_of_cell(i, j))];
      if (i < nx - 1) faces += hv * face_flux(i + 1) * (phi(i + 1, j) - phi(i, j));
    }
    flux += hv * (face_flux(nx) * phi(nx - 1, j) - face_flux(0) * phi(0, j));
    const int i_adj = v > 0.0 ? nx - 1 : 0;
    const int c_adj = v > 0.0 ? nx : 1;
    const int c_tr = v > 0.0 ? nx + 1 : 0;
    lhs += hv * std::abs(v) * (val(c_adj, j) - val(c_tr, j)) * phi(i_adj, j);
  }
  return std::abs(lhs - (flux - faces));
}

}  // namespace kfp
