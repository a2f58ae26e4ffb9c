#include <benchmark/benchmark.h>

#include "irsq/beamforming.hpp"
#include "irsq/estimation.hpp"
#include "irsq/quantization.hpp"

using namespace irsq;

namespace {

ChannelSet instance(int m, int n) {
  SystemConfig cfg;
  cfg.antennas = m;
  cfg.elements = n;
  Rng rng(12345);
  return gen_channels(cfg, rng);
}

void BM_Sdr(benchmark::State& state) {
  const ChannelSet ch = instance(4, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    Rng rng(1);
    benchmark::DoNotOptimize(sdr_beamform(ch, 10.0, 200, rng));
  }
}
BENCHMARK(BM_Sdr)->Arg(5)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_Gd(benchmark::State& state) {
  const ChannelSet ch = instance(4, static_cast<int>(state.range(0)));
  const double rho = distortion_factor(1);
  for (auto _ : state) {
    Rng rng(1);
    benchmark::DoNotOptimize(gd_beamform(ch, 1.0, rho, GdConfig{}, rng));
  }
}
BENCHMARK(BM_Gd)->Arg(5)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_Oracle(benchmark::State& state) {
  const ChannelSet ch = instance(4, static_cast<int>(state.range(0)));
  const double rho = distortion_factor(1);
  for (auto _ : state) benchmark::DoNotOptimize(brute_force_oracle(ch, 1.0, rho, 16, OracleObjective::FullRate));
  state.SetItemsProcessed(state.iterations() * (1LL << (4 * state.range(0))));
}
BENCHMARK(BM_Oracle)->DenseRange(2, 5)->Unit(benchmark::kMillisecond);

void BM_RateGradient(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const ChannelSet ch = instance(4, n);
  const PhaseVector theta = PhaseVector::zeros(n);
  for (auto _ : state) benchmark::DoNotOptimize(rate_gradient(ch, theta, 1.0, 0.3634));
}
BENCHMARK(BM_RateGradient)->Arg(5)->Arg(40)->Arg(200);

void BM_MlDirect(benchmark::State& state) {
  const ChannelSet ch = instance(static_cast<int>(state.range(0)), 0);
  Rng rng(2);
  const RealizedPilotSystem sys = realize_system(ch, gen_pilots(32, rng), 1.0, std::nullopt, rng);
  for (auto _ : state) benchmark::DoNotOptimize(ml_direct(sys));
}
BENCHMARK(BM_MlDirect)->Arg(2)->Arg(8)->Unit(benchmark::kMicrosecond);

void BM_MlReflect(benchmark::State& state) {
  const ChannelSet ch = instance(2, static_cast<int>(state.range(0)));
  Rng rng(3);
  const RealizedPilotSystem sys = realize_system(ch, gen_reflect_pilots(32, ch.elements(), rng), 1.0, 0.1, rng);
  for (auto _ : state) benchmark::DoNotOptimize(ml_reflect(sys));
}
BENCHMARK(BM_MlReflect)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_Lmmse(benchmark::State& state) {
  const ChannelSet ch = instance(2, static_cast<int>(state.range(0)));
  Rng rng(4);
  const RealizedPilotSystem sys = realize_system(ch, gen_reflect_pilots(32, ch.elements(), rng), 1.0, 0.1, rng);
  for (auto _ : state) benchmark::DoNotOptimize(lmmse_estimate(sys, 1.0));
}
BENCHMARK(BM_Lmmse)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
