#include <benchmark/benchmark.h>

#include "staq/gibbs.hpp"
#include "staq/model.hpp"
#include "staq/random.hpp"
#include "staq/scenarios.hpp"

namespace {

void BM_GigDraw(benchmark::State& state) {
  // Parameter triples covering the three generator regimes.
  const staq::GigParams params[] = {{-3.0, 1.0, 4.0}, {0.0, 2.0, 1.0}, {0.3, 0.01, 0.01}};
  const auto& g = params[state.range(0)];
  staq::RandomStream rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(staq::sample_gig(g, rng));
}
BENCHMARK(BM_GigDraw)->Arg(0)->Arg(1)->Arg(2);

void BM_InverseGaussianDraw(benchmark::State& state) {
  staq::RandomStream rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(staq::sample_inverse_gaussian(1.0, 2.0, rng));
}
BENCHMARK(BM_InverseGaussianDraw);

void BM_GibbsSweep(benchmark::State& state) {
  const auto sim = staq::simulate_scenario("sparse-nonlinear", 1, static_cast<int>(state.range(0)));
  staq::ModelSpec spec;
  spec.response = sim.response;
  for (const auto& c : sim.covariates) spec.covariates.push_back({c, staq::EffectKind::Decomposed, true, {}, {}});
  auto model = staq::build_blocks(sim.table, spec);
  for (auto& b : model.blocks) {
    b.hyper.b = 2.0;
    b.hyper.r = 0.01;
  }
  const staq::GibbsSampler sampler(model, 0.5, 0.001, 0.001);
  auto chain = sampler.initial_state();
  staq::RandomStream rng(3);
  for (auto _ : state) sampler.sweep(chain, rng);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_GibbsSweep)->Arg(500)->Arg(1500)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
