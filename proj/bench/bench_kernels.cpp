// Parallel kernels against their serial reference twins.

#include <benchmark/benchmark.h>

#include <random>

#include "ssb/classical.hpp"
#include "ssb/histories.hpp"
#include "ssb/sigma.hpp"

using namespace ssb;

namespace {

struct HistorySetup {
  hilbert::DensityOperator rho;
  histories::ProjectorFamily family;
  histories::Propagator U;
  std::vector<histories::History> hs;
};

HistorySetup history_setup() {
  const sigma::PhaseSystem sys{1.0, 1.0, 1.0};
  auto fam = sigma::sector_family(4, 32);
  auto rho = hilbert::DensityOperator::pure(sigma::sector_state(fam, 0).coefficients());
  auto U = sigma::circle_propagator(sys, 32);
  auto hs = histories::enumerate_histories(fam.projectors, histories::time_grid(0.05, 2));
  return {std::move(rho), std::move(fam.projectors), std::move(U), std::move(hs)};
}

void BM_DecoherenceParallel(benchmark::State& state) {
  const auto s = history_setup();
  for (auto _ : state)
    benchmark::DoNotOptimize(histories::decoherence_matrix(s.rho, s.hs, s.family, s.U).D);
}

void BM_DecoherenceReference(benchmark::State& state) {
  const auto s = history_setup();
  for (auto _ : state)
    benchmark::DoNotOptimize(histories::reference::decoherence_matrix(s.rho, s.hs, s.family, s.U));
}

classical::CanonicalSpec cold_well() {
  return {PotentialSpec::quartic(1.0, 1.0), 1.0, 0.075, 1};
}

void BM_SideCorrelationParallel(benchmark::State& state) {
  const auto spec = cold_well();
  const double T = classical::well_period(spec);
  for (auto _ : state)
    benchmark::DoNotOptimize(classical::side_correlation(spec, 20.0 * T, {0.0, 5.0 * T, 10.0 * T}, 100));
}

void BM_SideCorrelationReference(benchmark::State& state) {
  const auto spec = cold_well();
  const double T = classical::well_period(spec);
  for (auto _ : state)
    benchmark::DoNotOptimize(classical::reference::side_correlation(spec, 20.0 * T, {0.0, 5.0 * T, 10.0 * T}, 100));
}

void BM_LatticeParallel(benchmark::State& state) {
  classical::LatticeOptions opt;
  opt.n_chains = 8;
  for (auto _ : state)
    benchmark::DoNotOptimize(classical::lattice_signatures({32, 1.0, 2.0, 5}, 10000, opt));
}

void BM_LatticeReference(benchmark::State& state) {
  classical::LatticeOptions opt;
  opt.n_chains = 8;
  for (auto _ : state)
    benchmark::DoNotOptimize(classical::reference::lattice_signatures({32, 1.0, 2.0, 5}, 10000, opt));
}

void BM_SurvivalParallel(benchmark::State& state) {
  const sigma::SquareWavePacket p{1.0};
  for (auto _ : state) benchmark::DoNotOptimize(sigma::survival_amplitude(p, 1.0, 1.0, 1e-3));
}

void BM_SurvivalReference(benchmark::State& state) {
  const sigma::SquareWavePacket p{1.0};
  for (auto _ : state) benchmark::DoNotOptimize(sigma::reference::survival_amplitude(p, 1.0, 1.0, 1e-3));
}

}  // namespace

BENCHMARK(BM_DecoherenceParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DecoherenceReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SideCorrelationParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SideCorrelationReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LatticeParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LatticeReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SurvivalParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SurvivalReference)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
