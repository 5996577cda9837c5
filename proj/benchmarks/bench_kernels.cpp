#include <benchmark/benchmark.h>

#include <vector>

#include "qtransport/conformation.hpp"
#include "qtransport/dynamics.hpp"
#include "qtransport/ensemble.hpp"
#include "qtransport/entanglement.hpp"
#include "qtransport/hamiltonian.hpp"
#include "qtransport/rng.hpp"

namespace qtransport {
namespace {

Hamiltonian sample_hamiltonian(std::size_t n, std::uint64_t index) {
  SampleStream rng(1, index, StreamPurpose::kConformation);
  return coupling_matrix(sample_conformation(n, rng));
}

void BM_Eigensolve(benchmark::State& state) {
  const Hamiltonian h = sample_hamiltonian(static_cast<std::size_t>(state.range(0)), 0);
  for (auto _ : state) {
    ClosedEvolution evo(h);
    benchmark::DoNotOptimize(evo.energies().data());
  }
}
BENCHMARK(BM_Eigensolve)->Arg(7)->Arg(16);

void BM_ProbabilityGrid(benchmark::State& state) {
  const Hamiltonian h = sample_hamiltonian(7, 0);
  const ClosedEvolution evo(h);
  const double window = default_time_window(h);
  std::vector<double> out(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    evo.transition_probability_grid(h.input_index, h.output_index,
                                     window / static_cast<double>(out.size() - 1), out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_ProbabilityGrid)->Arg(1024);

void BM_CoherentSample(benchmark::State& state) {
  CampaignConfig cfg;
  cfg.record_entanglement = state.range(0) != 0;
  std::uint64_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_sample(cfg, i++));
}
BENCHMARK(BM_CoherentSample)->Arg(0)->Arg(1);

void BM_DephasedSample(benchmark::State& state) {
  CampaignConfig cfg;
  cfg.dephasing = DephasingSpec{};
  std::uint64_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_sample(cfg, i++));
}
BENCHMARK(BM_DephasedSample);

void BM_OpenSetup(benchmark::State& state) {
  const Hamiltonian h = sample_hamiltonian(7, 3);
  const DephasingConfig deph{2.0 / default_time_window(h), DephasingConvention::kProjector};
  for (auto _ : state) {
    OpenEvolution evo(h, deph);
    benchmark::DoNotOptimize(evo.dim());
  }
}
BENCHMARK(BM_OpenSetup);

void BM_Measures(benchmark::State& state) {
  SampleStream rng(2, 0, StreamPurpose::kPerturbation);
  std::vector<double> p(7);
  double total = 0.0;
  for (auto& x : p) total += (x = rng.uniform());
  for (auto& x : p) x /= total;
  for (auto _ : state) {
    benchmark::DoNotOptimize(c2(p));
    benchmark::DoNotOptimize(c4(p));
  }
}
BENCHMARK(BM_Measures);

}  // namespace
}  // namespace qtransport

BENCHMARK_MAIN();
