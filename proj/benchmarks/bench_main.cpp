#include "octl/value_maps.hpp"

#include <benchmark/benchmark.h>

namespace {

octl::ModelPtr two_mode_model(int intervals) {
  octl::ModelConfig cfg;
  cfg.num_modes = 2;
  cfg.omega = {{0.0, octl::kPi / 2.0}};
  cfg.horizon = 1.0;
  cfg.num_time_intervals = intervals;
  return octl::build_model(cfg);
}

void BM_CouplingMatrix(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const std::vector<octl::Interval> omega = {{0.3, 1.1}, {1.9, 2.6}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(octl::coupling_matrix(omega, n));
  }
}
BENCHMARK(BM_CouplingMatrix)->Arg(4)->Arg(16)->Arg(64);

void BM_SolveOp(benchmark::State& state) {
  const auto model = two_mode_model(static_cast<int>(state.range(0)));
  octl::CVec y0(2), z_d(2);
  y0 << 1.0, 0.0;
  z_d << 0.0, octl::Complex(0.0, 0.3);
  octl::OpProblem problem{model, y0, z_d, 0.8, 0.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(octl::solve_op(problem));
  }
}
BENCHMARK(BM_SolveOp)->Arg(32)->Arg(128)->Arg(512);

void BM_MTau(benchmark::State& state) {
  const auto model = two_mode_model(128);
  octl::CVec y0(2), z_d(2);
  y0 << 1.0, 0.0;
  z_d << 0.0, octl::Complex(0.0, 0.3);
  for (auto _ : state) {
    octl::ReachContext ctx(model, y0, z_d);
    benchmark::DoNotOptimize(octl::m_tau(ctx, 0.25));
  }
}
BENCHMARK(BM_MTau);

}  // namespace

BENCHMARK_MAIN();
