#pragma once

#include <string>
#include <vector>

#include "kfp/assembly.hpp"
#include "kfp/kernels.hpp"

namespace kfp {

enum class SolverMethod { BiCGStab, GMRES, DirectBanded };

std::string to_string(SolverMethod method);
/// Accepts "bicgstab", "gmres", "direct"; throws ConfigError otherwise.
SolverMethod parse_solver_method(const std::string& name);

struct SolverSettings {
  SolverMethod method = SolverMethod::BiCGStab;
  double rel_tol = 1e-10;
  /// 0 selects 20 sqrt(N) + 200.
  int max_iter = 0;
  int restart = 30;
  bool jacobi = true;
  Exec exec = Exec::Parallel;

  int iteration_limit(int unknowns) const;
  /// Throws InvalidArgument unless rel_tol is in (0, 1), max_iter >= 0, restart >= 1.
  void validate() const;
};

struct SolveResult {
  std::vector<double> x;
  int iterations = 0;
  /// ||b - A x|| / ||b|| (absolute when b = 0).
  double final_residual = 0.0;
  std::vector<double> history;
};

/// Solves A x = b. Krylov methods are right-preconditioned with Jacobi and
/// start from `x0` when its size matches. Throws NotConverged (with the
/// residual history) or SingularPivot for the banded direct path.
SolveResult solve_sparse(const CsrMatrix& a, const std::vector<double>& b, const SolverSettings& settings,
                         const std::vector<double>& x0 = {});

inline SolveResult solve_sparse(const SparseOperator& op, const SolverSettings& settings,
                                const std::vector<double>& x0 = {}) {
  return solve_sparse(op.matrix, op.rhs, settings, x0);
}

/// max |col - row| over the stored entries.
int bandwidth(const CsrMatrix& a);

}  // namespace kfp
