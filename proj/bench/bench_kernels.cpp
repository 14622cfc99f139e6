// Serial reference kernels against their OpenMP versions on assembled operators.

#include <benchmark/benchmark.h>

#include "kfp/assembly.hpp"
#include "kfp/krylov.hpp"
#include "kfp/oracle.hpp"
#include "kfp/philox.hpp"

namespace {

using kfp::Exec;

struct System {
  kfp::SparseOperator op;
  std::vector<double> x;
  std::vector<double> y;
};

System make_system(int n) {
  const auto grid = kfp::build_grid(kfp::ProductDomain::unit_box(), n, n);
  System s{kfp::assemble(grid, kfp::make_preset("identity_drift", 1), 0.01), {}, {}};
  s.x.resize(static_cast<std::size_t>(s.op.matrix.rows));
  kfp::NormalStream rng(1, 0);
  for (double& v : s.x) v = rng.next();
  s.y = s.x;
  return s;
}

Exec exec_of(const benchmark::State& state) { return state.range(1) == 0 ? Exec::Serial : Exec::Parallel; }

void BM_Spmv(benchmark::State& state) {
  System s = make_system(static_cast<int>(state.range(0)));
  std::vector<double> out;
  for (auto _ : state) {
    kfp::kernels::spmv(s.op.matrix, s.x, out, exec_of(state));
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.op.matrix.nnz()));
}

void BM_Dot(benchmark::State& state) {
  System s = make_system(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kfp::kernels::dot(s.x, s.y, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.x.size()));
}

void BM_Axpy(benchmark::State& state) {
  System s = make_system(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    kfp::kernels::axpy(1e-3, s.x, s.y, exec_of(state));
    benchmark::DoNotOptimize(s.y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.x.size()));
}

void BM_Assemble(benchmark::State& state) {
  const auto grid = kfp::build_grid(kfp::ProductDomain::unit_box(), static_cast<int>(state.range(0)),
                                    static_cast<int>(state.range(0)));
  const auto coeffs = kfp::make_preset("identity_drift", 1);
  for (auto _ : state) {
    auto op = kfp::assemble(grid, coeffs, 0.01, kfp::kPartAll, exec_of(state));
    benchmark::DoNotOptimize(op.matrix.val.data());
  }
}

void BM_BiCGStab(benchmark::State& state) {
  System s = make_system(static_cast<int>(state.range(0)));
  kfp::SolverSettings settings;
  settings.exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(kfp::solve_sparse(s.op, settings).x.data());
}

void BM_Oracle(benchmark::State& state) {
  const auto problem = kfp::OracleProblem::make(kfp::make_preset("unit_box_half", 1), kfp::ProductDomain::unit_box());
  kfp::PathConfig cfg;
  cfg.dt = 1e-3;
  cfg.n_paths = state.range(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        kfp::estimate_solution(kfp::PhasePoint::make1(0.5, 0.25), problem, cfg, exec_of(state)).mean);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void sizes(benchmark::internal::Benchmark* b) {
  for (int n : {64, 256, 512})
    for (int mode : {0, 1}) b->Args({n, mode});
  b->ArgNames({"n", "parallel"});
}

}  // namespace

BENCHMARK(BM_Spmv)->Apply(sizes);
BENCHMARK(BM_Dot)->Apply(sizes);
BENCHMARK(BM_Axpy)->Apply(sizes);
BENCHMARK(BM_Assemble)->Apply(sizes);
BENCHMARK(BM_BiCGStab)->Args({64, 0})->Args({64, 1})->Args({128, 0})->Args({128, 1})->ArgNames({"n", "parallel"});
BENCHMARK(BM_Oracle)->Args({10000, 0})->Args({10000, 1})->ArgNames({"paths", "parallel"});

BENCHMARK_MAIN();
