#include <benchmark/benchmark.h>

#include "mrfcs/dictionary.hpp"
#include "mrfcs/harness.hpp"
#include "mrfcs/rng.hpp"

namespace {

using namespace mrfcs;

CMatrix random_rows(Index n, Index l, std::uint64_t seed) {
  Rng rng(seed);
  CMatrix x(n, l);
  for (Index c = 0; c < l; ++c) {
    for (Index r = 0; r < n; ++r) x(r, c) = Complex{rng.gaussian(), rng.gaussian()};
  }
  return x;
}

void BM_ProjectRowsReal(benchmark::State& state) {
  const Index L = state.range(0);
  const Index N = state.range(1);
  const auto seq = generate_sequence(L, 10.0, 10.0, 1);
  const auto dict = build_dictionary(ParameterGrid::reference(), seq);
  const CMatrix x = random_rows(N, L, 2);
  Eigen::VectorXi atom;
  Eigen::VectorXd z;
  for (auto _ : state) {
    project_rows_real(x, dict, atom, z);
    benchmark::DoNotOptimize(z.data());
  }
  state.SetItemsProcessed(state.iterations() * N * dict.size());
}
BENCHMARK(BM_ProjectRowsReal)->Args({200, 4096})->Args({500, 4096});

void BM_BuildDictionary(benchmark::State& state) {
  const auto seq = generate_sequence(state.range(0), 10.0, 10.0, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_dictionary(ParameterGrid::reference(), seq));
  }
}
BENCHMARK(BM_BuildDictionary)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace
