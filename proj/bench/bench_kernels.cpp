// Serial reference vs OpenMP for the two data-parallel kernels.
// Set OMP_NUM_THREADS to compare thread counts.
#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "spinprobe/kernels.hpp"
#include "spinprobe/spectral.hpp"

using namespace spinprobe;

namespace {

kernels::ExpectationModel reference_model() {
  return kernels::make_expectation_model(diagonalize(reference_chain(1.0)), all_up(), pauli(Pauli::X, 1));
}

template <auto Kernel>
void expectation(benchmark::State& state) {
  const auto model = reference_model();
  std::vector<double> out(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    Kernel(model, 0.0, 0.01, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Kernel>
void direct_dft(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  std::vector<double> x(n), omegas(n / 2), out(n / 2);
  const double dt = 0.01;
  for (std::size_t k = 0; k < n; ++k) x[k] = std::cos(11.1 * k * dt) + 0.3 * std::cos(19.5 * k * dt);
  for (std::size_t k = 0; k < omegas.size(); ++k) omegas[k] = 2.0 * M_PI * k / (n * dt);
  for (auto _ : state) {
    Kernel(x, static_cast<double>(n), dt, omegas, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * omegas.size()));
}

}  // namespace

BENCHMARK(expectation<kernels::expectation_serial>)->Name("expectation/serial")->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(expectation<kernels::expectation_omp>)->Name("expectation/omp")->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(direct_dft<kernels::direct_dft_serial>)->Name("direct_dft/serial")->Arg(1 << 10)->Arg(1 << 12);
BENCHMARK(direct_dft<kernels::direct_dft_omp>)->Name("direct_dft/omp")->Arg(1 << 10)->Arg(1 << 12);

BENCHMARK_MAIN();
