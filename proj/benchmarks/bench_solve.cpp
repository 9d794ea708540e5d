#include <benchmark/benchmark.h>

#include "elcap/config.hpp"
#include "elcap/gamma.hpp"

namespace {

using namespace elcap;

void BM_dirichlet_solve(benchmark::State& state) {
  GridConfig g;
  g.nx = g.ny = int(state.range(0));
  g.dirichlet = {true, false, false, false};
  SplineSpace space(g);
  LoadSpec load =
      build_load(space, {parse_affine("0.05"), parse_affine("0.02*x1")}, {});
  EnergyAssembler a(space, MaterialSpec{}, load,
                    {Family::G, Regime::nonlinear}, 0.25);
  SolveOptions opts;
  for (auto _ : state) {
    auto [x, rep] = minimize(
        Eigen::VectorXd::Zero(space.dof_count()),
        [&](const Eigen::VectorXd& c) { return a.total(c); },
        [&](const Eigen::VectorXd& c, Eigen::VectorXd& gr) {
          a.gradient(c, gr);
        },
        opts, &space.clamp_mask());
    benchmark::DoNotOptimize(rep.iterations);
  }
}
BENCHMARK(BM_dirichlet_solve)->Arg(6)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_quotient_distance(benchmark::State& state) {
  GridConfig g;
  g.nx = g.ny = 12;
  SplineSpace space(g);
  auto f = interpolate(space, [](double x, double y) {
    return std::array<double, 2>{0.1 * x * y, 0.05 * y * y};
  });
  auto h = interpolate(space, [](double x, double y) {
    return std::array<double, 2>{0.1 * x * y + 0.2 - 0.3 * y,
                                 0.05 * y * y + 0.3 * x};
  });
  for (auto _ : state) {
    benchmark::DoNotOptimize(quotient_distance(f, h));
  }
}
BENCHMARK(BM_quotient_distance);

}  // namespace

BENCHMARK_MAIN();
