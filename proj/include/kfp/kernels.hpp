#pragma once

#include <cstddef>
#include <vector>

namespace kfp {

/// Serial reference path or OpenMP path. Both produce bitwise-identical results.
enum class Exec { Serial, Parallel };

/// Compressed sparse row matrix, column indices sorted within each row.
struct CsrMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_ptr{0};
  std::vector<int> col;
  std::vector<double> val;

  std::size_t nnz() const { return val.size(); }
  double at(int r, int c) const;
  std::vector<double> diagonal() const;
  static CsrMatrix identity(int n);
};

namespace kernels {

/// Dot products and norms sum fixed-size chunks, then add the partials in
/// index order, so the result does not depend on the thread count.
inline constexpr std::size_t kChunk = 2048;

void spmv(const CsrMatrix& a, const std::vector<double>& x, std::vector<double>& y,
          Exec exec = Exec::Parallel);
double dot(const std::vector<double>& a, const std::vector<double>& b, Exec exec = Exec::Parallel);
double norm2(const std::vector<double>& a, Exec exec = Exec::Parallel);
double norm_inf(const std::vector<double>& a);
/// y += alpha x
void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y,
          Exec exec = Exec::Parallel);
/// r = b - A x
void residual(const CsrMatrix& a, const std::vector<double>& x, const std::vector<double>& b,
              std::vector<double>& r, Exec exec = Exec::Parallel);

}  // namespace kernels
}  // namespace kfp
