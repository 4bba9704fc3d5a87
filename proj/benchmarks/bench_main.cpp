#include <benchmark/benchmark.h>

#include "nld/form.hpp"
#include "nld/mc.hpp"
#include "nld/solve.hpp"

using namespace nld;

namespace {

std::shared_ptr<Grid> interval_grid(const LevyMeasure& nu, double h, double rt, Basis basis) {
  auto dom = std::make_shared<Domain>(Domain::interval(0, 1));
  return std::make_shared<Grid>(make_grid(dom, h, rt, basis, &nu));
}

void BM_AssembleZeta(benchmark::State& state) {
  auto nu = std::make_shared<LevyMeasure>(LevyMeasure::zeta_series(200));
  auto grid = interval_grid(*nu, 1.0 / state.range(0), 2.0, Basis::P0);
  for (auto _ : state) benchmark::DoNotOptimize(assemble(nu, grid));
}
BENCHMARK(BM_AssembleZeta)->Arg(64)->Arg(256);

void BM_AssembleFractional1D(benchmark::State& state) {
  auto nu = std::make_shared<LevyMeasure>(
      LevyMeasure::radial(RadialKernel::fractional_stable(0.5, 1)));
  auto grid = interval_grid(*nu, 1.0 / state.range(0), 2.0, Basis::P0);
  for (auto _ : state) benchmark::DoNotOptimize(assemble(nu, grid));
}
BENCHMARK(BM_AssembleFractional1D)->Arg(64)->Arg(128);

void BM_AssembleFractionalDisk(benchmark::State& state) {
  auto nu = std::make_shared<LevyMeasure>(
      LevyMeasure::radial(RadialKernel::fractional_stable(0.5, 2)));
  auto dom = std::make_shared<Domain>(Domain::disk({0, 0}, 1));
  auto grid = std::make_shared<Grid>(make_grid(dom, 1.0 / state.range(0), 1.0, Basis::P0, nu.get()));
  for (auto _ : state) benchmark::DoNotOptimize(assemble(nu, grid));
}
BENCHMARK(BM_AssembleFractionalDisk)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_StencilApply(benchmark::State& state) {
  auto nu = std::make_shared<LevyMeasure>(
      LevyMeasure::radial(RadialKernel::fractional_stable(0.5, 1)));
  auto grid = interval_grid(*nu, 1.0 / state.range(0), 2.0, Basis::P0);
  FormMatrix fm = assemble(nu, grid);
  Eigen::VectorXd u = Eigen::VectorXd::Random(grid->size()), out;
  for (auto _ : state) {
    fm.apply(u, out);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_StencilApply)->Arg(64)->Arg(256);

void BM_SolveZeta(benchmark::State& state) {
  auto nu = std::make_shared<LevyMeasure>(LevyMeasure::zeta_series(200));
  auto grid = interval_grid(*nu, 1.0 / 64, 2.0, Basis::P0);
  FormMatrix fm = assemble(nu, grid);
  GridFunction f = GridFunction::sample_interior(grid, [](Point) { return 1.0; });
  GridFunction g = GridFunction::zero(grid);
  for (auto _ : state) benchmark::DoNotOptimize(solve(fm, f, g));
}
BENCHMARK(BM_SolveZeta);

void BM_SolveFractional(benchmark::State& state) {
  auto nu = std::make_shared<LevyMeasure>(
      LevyMeasure::radial(RadialKernel::fractional_stable(0.5, 1)));
  auto dom = std::make_shared<Domain>(Domain::interval(-1, 1));
  auto grid = std::make_shared<Grid>(make_grid(dom, 1.0 / state.range(0), 2.0, Basis::P0, nu.get()));
  FormMatrix fm = assemble(nu, grid);
  GridFunction f = GridFunction::sample_interior(grid, [](Point) { return 1.0; });
  GridFunction g = GridFunction::zero(grid);
  for (auto _ : state) benchmark::DoNotOptimize(solve(fm, f, g));
}
BENCHMARK(BM_SolveFractional)->Arg(64)->Arg(128);

void BM_McExitZeta(benchmark::State& state) {
  auto nu = LevyMeasure::zeta_series(200);
  JumpProcessSpec spec = JumpProcessSpec::from_measure(nu);
  Domain omega = Domain::interval(0, 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(mean_exit_time(spec, omega, pt(0.5), state.range(0), 99));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_McExitZeta)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_McTruncatedStable(benchmark::State& state) {
  auto nu = LevyMeasure::radial(RadialKernel::fractional_stable(0.5, 1));
  JumpProcessSpec spec = JumpProcessSpec::from_measure(nu, 0.02);
  Domain omega = Domain::interval(-1, 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(mean_exit_time(spec, omega, pt(0.0), state.range(0), 99));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_McTruncatedStable)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_PoincareSpectral(benchmark::State& state) {
  auto nu = std::make_shared<LevyMeasure>(
      LevyMeasure::radial(RadialKernel::fractional_stable(0.5, 1)));
  auto grid = interval_grid(*nu, 1.0 / 64, 1.5, Basis::P0);
  FormMatrix fm = assemble(nu, grid);
  for (auto _ : state) {
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(grid->size()), out;
    fm.apply(ones, out);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_PoincareSpectral);

}  // namespace

BENCHMARK_MAIN();
