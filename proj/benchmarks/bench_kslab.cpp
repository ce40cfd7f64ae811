#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "kslab/elliptic.hpp"
#include "kslab/evolve.hpp"
#include "kslab/steady.hpp"

using namespace kslab;
using std::numbers::pi;

namespace {

GridPtr grid_for(int shape, int n) {
  switch (shape) {
    case 0: return build_grid(Domain::interval(1.0), n);
    case 1: return build_grid(Domain::rectangle(1.0, 1.0), n, n);
    default: return build_grid(Domain::disc(1.0), n);
  }
}

Field bump(const GridPtr& g) {
  return Field::sample(g, [](double x, double y) { return 1.0 + 0.5 * std::cos(pi * x) * std::cos(pi * y); });
}

void BM_EllipticSolve(benchmark::State& state) {
  const GridPtr g = grid_for(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const EllipticOperator op(g, 0.1);
  const Field u = bump(g);
  std::vector<double> v(g->size());
  for (auto _ : state) {
    op.solve(u.values(), v);
    benchmark::DoNotOptimize(v.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(g->size()));
}
BENCHMARK(BM_EllipticSolve)->Args({0, 1024})->Args({0, 16384})->Args({2, 4096})->Args({1, 32})->Args({1, 64})->Args({1, 128});

void BM_EllipticWarmStart(benchmark::State& state) {
  const GridPtr g = grid_for(1, static_cast<int>(state.range(0)));
  const EllipticOperator op(g, 0.1);
  const Field u = bump(g);
  const Field v0 = op.solve_v(u);
  std::vector<double> v(g->size());
  // A slightly perturbed right-hand side, as in one explicit step.
  std::vector<double> u1(u.values().begin(), u.values().end());
  for (std::size_t i = 0; i < u1.size(); ++i) u1[i] *= 1.0 + 1e-4 * std::sin(static_cast<double>(i));
  for (auto _ : state) {
    std::copy(v0.values().begin(), v0.values().end(), v.begin());
    op.solve(u1, v, true);
    benchmark::DoNotOptimize(v.data());
  }
}
BENCHMARK(BM_EllipticWarmStart)->Arg(64)->Arg(128);

void BM_FluxRate(benchmark::State& state) {
  const GridPtr g = grid_for(1, static_cast<int>(state.range(0)));
  const auto scheme = state.range(1) == 0 ? FluxScheme::upwind : FluxScheme::scharfetter_gummel;
  const Evolver ev(g, MotilityPair::ks_exponential(2.0, 0.5), 1.0, scheme);
  const SimState s = ev.initial_state(bump(g));
  std::vector<double> rate(g->size());
  for (auto _ : state) {
    ev.rate(s.u.values(), s.v.values(), rate);
    benchmark::DoNotOptimize(rate.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(g->size()));
}
BENCHMARK(BM_FluxRate)->Args({64, 0})->Args({64, 1})->Args({256, 0})->Args({256, 1});

void BM_EvolveStep(benchmark::State& state) {
  const GridPtr g = grid_for(1, static_cast<int>(state.range(0)));
  const Evolver ev(g, MotilityPair::ks_exponential(2.0, 0.5), 1.0);
  SimState s = ev.initial_state(bump(g));
  const double dt = ev.stable_dt(s);
  for (auto _ : state) {
    s = ev.step(s, dt);
    benchmark::DoNotOptimize(s.u.values().data());
  }
}
BENCHMARK(BM_EvolveStep)->Arg(32)->Arg(64);

void BM_LocalNewtonSpike(benchmark::State& state) {
  const GridPtr g = grid_for(0, static_cast<int>(state.range(0)));
  const Field guess = perturbed_constant_guess(g, 1.0);
  for (auto _ : state) {
    NewtonResult r = solve_local_newton(2.0, 0.05, guess);
    benchmark::DoNotOptimize(r.residual);
  }
}
BENCHMARK(BM_LocalNewtonSpike)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_RadialNonlocalNewton(benchmark::State& state) {
  const GridPtr g = grid_for(2, static_cast<int>(state.range(0)));
  const double mt = 1.2 * 8.0 * pi;
  const Field guess = perturbed_constant_guess(g, mt / pi);
  for (auto _ : state) {
    NewtonResult r = solve_nonlocal_exponential_newton(mt, 1.0, guess);
    benchmark::DoNotOptimize(r.residual);
  }
}
BENCHMARK(BM_RadialNonlocalNewton)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
