// Serial reference kernels against their OpenMP twins.
// Arg 0 is the number of agents; p is fixed at the experiment value.

#include <benchmark/benchmark.h>

#include <random>

#include "panda/kernels.hpp"
#include "panda/model.hpp"
#include "panda/network.hpp"

namespace {

constexpr int kP = 5;

panda::Vector random_stack(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  panda::Vector v(n * kP);
  for (auto& x : v) x = g(rng);
  return v;
}

panda::Matrix mixing(int n) {
  return panda::network::MixingSequence::metropolis(
             panda::network::GraphSequence::iid_link_failure(n, 0.2, 7))
      .matrix(0);
}

template <auto Kernel>
void BM_Mix(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const panda::Matrix w = mixing(n);
  const panda::Vector v = random_stack(n, 1);
  panda::Vector out;
  for (auto _ : state) {
    Kernel(w, v, kP, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}

template <auto Kernel>
void BM_LocalSolves(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto prob = panda::model::generate_least_squares_instance(n, kP, 100.0, 1.0, 3);
  const panda::Vector y = random_stack(n, 2);
  panda::Vector out;
  std::vector<int> iters;
  for (auto _ : state) {
    Kernel(prob, y, 1e-12, out, iters);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}

template <auto Kernel>
void BM_Gradients(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto prob = panda::model::generate_least_squares_instance(n, kP, 100.0, 1.0, 3);
  const panda::Vector x = random_stack(n, 3);
  panda::Vector out;
  for (auto _ : state) {
    Kernel(prob, x, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}

}  // namespace

BENCHMARK(BM_Mix<panda::kernels::mix_blocks_serial>)->RangeMultiplier(4)->Range(16, 1024);
BENCHMARK(BM_Mix<panda::kernels::mix_blocks>)->RangeMultiplier(4)->Range(16, 1024);
BENCHMARK(BM_LocalSolves<panda::kernels::local_solves_serial>)->RangeMultiplier(4)->Range(16, 1024);
BENCHMARK(BM_LocalSolves<panda::kernels::local_solves>)->RangeMultiplier(4)->Range(16, 1024);
BENCHMARK(BM_Gradients<panda::kernels::gradients_serial>)->RangeMultiplier(4)->Range(16, 1024);
BENCHMARK(BM_Gradients<panda::kernels::gradients>)->RangeMultiplier(4)->Range(16, 1024);

BENCHMARK_MAIN();
