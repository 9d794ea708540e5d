#include <benchmark/benchmark.h>

#include "elcap/config.hpp"
#include "elcap/functional.hpp"
#include "elcap/rng.hpp"

namespace {

using namespace elcap;

struct Fixture {
  Fixture() : space(make_grid()), load(make_load(space)) {
    Rng rng(99);
    coeffs.resize(space.dof_count());
    for (int i = 0; i < coeffs.size(); ++i)
      coeffs[i] = 0.3 * (rng.uniform() - 0.5);
  }
  static GridConfig grid_config() {
    GridConfig g;
    g.nx = g.ny = 12;
    return g;
  }
  static SplineSpace make_grid() { return SplineSpace(grid_config()); }
  static LoadSpec make_load(const SplineSpace& s) {
    return build_load(s, {parse_affine("0.05"), parse_affine("0.02*x1")}, {});
  }
  SplineSpace space;
  LoadSpec load;
  Eigen::VectorXd coeffs;
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

void BM_energy(benchmark::State& state) {
  auto& f = fixture();
  const Family fam = Family(state.range(0));
  const Regime reg = Regime(state.range(1));
  EnergyAssembler a(f.space, MaterialSpec{}, f.load, {fam, reg}, 0.1,
                    int(state.range(2)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(a.energy(f.coeffs).total);
  }
}
BENCHMARK(BM_energy)
    ->ArgsProduct({{0, 1, 2}, {0, 1}, {1}})
    ->Args({0, 0, 4})
    ->ArgNames({"family", "regime", "threads"});

void BM_gradient(benchmark::State& state) {
  auto& f = fixture();
  const Family fam = Family(state.range(0));
  const Regime reg = Regime(state.range(1));
  EnergyAssembler a(f.space, MaterialSpec{}, f.load, {fam, reg}, 0.1,
                    int(state.range(2)));
  Eigen::VectorXd g;
  for (auto _ : state) {
    a.gradient(f.coeffs, g);
    benchmark::DoNotOptimize(g.data());
  }
}
BENCHMARK(BM_gradient)
    ->ArgsProduct({{0, 1, 2}, {0, 1}, {1}})
    ->Args({0, 0, 4})
    ->ArgNames({"family", "regime", "threads"});

void BM_space_build(benchmark::State& state) {
  GridConfig g;
  g.nx = g.ny = int(state.range(0));
  for (auto _ : state) {
    SplineSpace s(g);
    benchmark::DoNotOptimize(s.quadrature().interior.size());
  }
}
BENCHMARK(BM_space_build)->Arg(8)->Arg(12)->Arg(24);

void BM_interpolate(benchmark::State& state) {
  auto& f = fixture();
  for (auto _ : state) {
    auto field = interpolate(f.space, [](double x, double y) {
      return std::array<double, 2>{0.1 * std::sin(3.0 * x) * y, 0.05 * x * x};
    });
    benchmark::DoNotOptimize(field.coeffs.data());
  }
}
BENCHMARK(BM_interpolate);

}  // namespace

BENCHMARK_MAIN();
