#include "kfp/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace kfp {

double CsrMatrix::at(int r, int c) const {
  const auto begin = col.begin() + row_ptr[static_cast<std::size_t>(r)];
  const auto end = col.begin() + row_ptr[static_cast<std::size_t>(r) + 1];
  const auto it = std::lower_bound(begin, end, c);
  if (it == end || *it != c) return 0.0;
  return val[static_cast<std::size_t>(it - col.begin())];
}

std::vector<double> CsrMatrix::diagonal() const {
  std::vector<double> d(static_cast<std::size_t>(rows), 0.0);
  for (int r = 0; r < rows; ++r) d[static_cast<std::size_t>(r)] = at(r, r);
  return d;
}

CsrMatrix CsrMatrix::identity(int n) {
  CsrMatrix m;
  m.rows = m.cols = n;
  m.row_ptr.resize(static_cast<std::size_t>(n) + 1);
  m.col.resize(static_cast<std::size_t>(n));
  m.val.assign(static_cast<std::size_t>(n), 1.0);
  for (int i = 0; i <= n; ++i) m.row_ptr[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < n; ++i) m.col[static_cast<std::size_t>(i)] = i;
  return m;
}

namespace kernels {

namespace {

inline double row_dot(const CsrMatrix& a, const double* x, int r) {
  double s = 0.0;
  for (int k = a.row_ptr[static_cast<std::size_t>(r)]; k < a.row_ptr[static_cast<std::size_t>(r) + 1];
       ++k) {
    s += a.val[static_cast<std::size_t>(k)] * x[a.col[static_cast<std::size_t>(k)]];
  }
  return s;
}

template <class Term>
double chunked_sum(std::size_t n, Exec exec, Term term) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(chunks, 0.0);
  auto fill = [&](std::ptrdiff_t c) {
    const std::size_t lo = static_cast<std::size_t>(c) * kChunk;
    const std::size_t hi = std::min(n, lo + kChunk);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    partial[static_cast<std::size_t>(c)] = s;
  };
  const auto nc = static_cast<std::ptrdiff_t>(chunks);
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < nc; ++c) fill(c);
  } else {
    for (std::ptrdiff_t c = 0; c < nc; ++c) fill(c);
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace

void spmv(const CsrMatrix& a, const std::vector<double>& x, std::vector<double>& y, Exec exec) {
  y.resize(static_cast<std::size_t>(a.rows));
  const double* xp = x.data();
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (int r = 0; r < a.rows; ++r) y[static_cast<std::size_t>(r)] = row_dot(a, xp, r);
  } else {
    for (int r = 0; r < a.rows; ++r) y[static_cast<std::size_t>(r)] = row_dot(a, xp, r);
  }
}

double dot(const std::vector<double>& a, const std::vector<double>& b, Exec exec) {
  return chunked_sum(a.size(), exec, [&](std::size_t i) { return a[i] * b[i]; });
}

double norm2(const std::vector<double>& a, Exec exec) { return std::sqrt(dot(a, a, exec)); }

double norm_inf(const std::vector<double>& a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y, Exec exec) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] += alpha * x[static_cast<std::size_t>(i)];
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] += alpha * x[static_cast<std::size_t>(i)];
  }
}

void residual(const CsrMatrix& a, const std::vector<double>& x, const std::vector<double>& b,
              std::vector<double>& r, Exec exec) {
  r.resize(static_cast<std::size_t>(a.rows));
  const double* xp = x.data();
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < a.rows; ++i)
      r[static_cast<std::size_t>(i)] = b[static_cast<std::size_t>(i)] - row_dot(a, xp, i);
  } else {
    for (int i = 0; i < a.rows; ++i)
      r[static_cast<std::size_t>(i)] = b[static_cast<std::size_t>(i)] - row_dot(a, xp, i);
  }
}

}  // namespace kernels
}  // namespace kfp
