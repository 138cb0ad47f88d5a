#include <benchmark/benchmark.h>

#include "mrfcs/bloch.hpp"
#include "mrfcs/harness.hpp"

namespace {

void BM_SimulateResponse(benchmark::State& state) {
  const auto seq = mrfcs::generate_sequence(state.range(0), 10.0, 10.0, 1);
  mrfcs::VoxelParams p;
  p.t1 = 1545.0;
  p.t2 = 83.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mrfcs::simulate_unit_response(p, seq));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateResponse)->Arg(200)->Arg(1000);

void BM_OdeOracle(benchmark::State& state) {
  const auto seq = mrfcs::generate_sequence(state.range(0), 10.0, 10.0, 1);
  mrfcs::VoxelParams p;
  p.t1 = 1545.0;
  p.t2 = 83.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mrfcs::ode_oracle_response(p, seq, 1e-9));
  }
}
BENCHMARK(BM_OdeOracle)->Arg(50);

}  // namespace
