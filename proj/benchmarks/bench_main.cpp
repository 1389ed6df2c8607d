#include <benchmark/benchmark.h>

#include "storm/flow.hpp"
#include "storm/solver.hpp"
#include "storm/sphere.hpp"

using namespace storm;

static void GridRoundTrip(benchmark::State& state) {
  const int M = int(state.range(0));
  RngStream rng(1);
  const SpectralField u = SpectralField::white_noise(2, M, M / 3, rng);
  for (auto _ : state) {
    auto g = u.to_grid();
    benchmark::DoNotOptimize(g.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(GridRoundTrip)->RangeMultiplier(2)->Range(32, 256)->Complexity();

static void TransportTerm(benchmark::State& state) {
  const int M = int(state.range(0));
  RngStream rng(2);
  const SpectralField u = SpectralField::white_noise(2, M, M / 3, rng);
  const NoiseSpec spec = cutoff_family(2, M / 6, true, M);
  const SpectralVectorField X = sample_increment(spec, 1e-3, rng).as_field();
  for (auto _ : state) {
    SpectralField t = transport_term(u, X);
    benchmark::DoNotOptimize(t.raw(0));
  }
}
BENCHMARK(TransportTerm)->RangeMultiplier(2)->Range(32, 128);

static void SampleIncrement(benchmark::State& state) {
  const int M = 64;
  const NoiseSpec spec = mollified_family(2, 0.1, M);
  RngStream rng(3);
  for (auto _ : state) {
    NoiseIncrement inc = sample_increment(spec, 1e-3, rng);
    benchmark::DoNotOptimize(inc.amps.data());
  }
}
BENCHMARK(SampleIncrement);

static void SpdeStep(benchmark::State& state) {
  const int M = int(state.range(0));
  const NoiseSpec spec = cutoff_family(2, 8, true, M);
  RngStream rng(4);
  SpectralField u = SpectralField::white_noise(2, M, 8, rng);
  for (auto _ : state) {
    u = spde_step(u, spec, 1e-4, rng);
    benchmark::DoNotOptimize(u.raw(0));
  }
}
BENCHMARK(SpdeStep)->RangeMultiplier(2)->Range(32, 128);

static void IncrementAtPoints(benchmark::State& state) {
  const NoiseSpec spec = cutoff_family(2, 4, true, 32);
  RngStream rng(5);
  const NoiseIncrement inc = sample_increment(spec, 1e-3, rng);
  ParticleCloud cloud = ParticleCloud::stratified(2, 100, rng);
  for (auto _ : state) {
    heun_flow_step(cloud, inc);
    benchmark::DoNotOptimize(cloud.pos.data());
  }
}
BENCHMARK(IncrementAtPoints);

static void SpherePsiBasis(benchmark::State& state) {
  const int L = int(state.range(0));
  RngStream rng(6);
  const Vec3 n = sphere_uniform_points(1, rng)[0];
  for (auto _ : state) {
    auto psi = psi_basis_at(L, n);
    benchmark::DoNotOptimize(psi.data());
  }
}
BENCHMARK(SpherePsiBasis)->Arg(4)->Arg(8)->Arg(16)->Arg(24);

BENCHMARK_MAIN();
