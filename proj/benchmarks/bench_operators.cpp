#include <benchmark/benchmark.h>

#include "mrfcs/rng.hpp"
#include "mrfcs/sampling.hpp"
#include "mrfcs/wavelet.hpp"

namespace {

using namespace mrfcs;

void BM_ForwardAdjoint(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Index L = state.range(1);
  const auto schedule = SamplingSchedule::random_epi(side, 8, L, 3);
  Rng rng(4);
  ImageSequence x;
  x.side = side;
  x.x.resize(static_cast<Index>(side) * side, L);
  for (Index c = 0; c < L; ++c) {
    for (Index r = 0; r < x.x.rows(); ++r) x.x(r, c) = Complex{rng.gaussian(), rng.gaussian()};
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(adjoint(forward(x, schedule)).x.data());
  }
}
BENCHMARK(BM_ForwardAdjoint)->Args({64, 200})->Unit(benchmark::kMillisecond);

void BM_Haar2(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  Rng rng(5);
  Eigen::MatrixXd image(side, side);
  for (Index c = 0; c < side; ++c) {
    for (Index r = 0; r < side; ++r) image(r, c) = rng.gaussian();
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(ihaar2(haar2(image)).data());
  }
}
BENCHMARK(BM_Haar2)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
