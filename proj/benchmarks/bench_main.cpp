#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "synergy/ensemble.hpp"
#include "synergy/spectral.hpp"
#include "synergy/sweep.hpp"
#include "synergy/synthgen.hpp"

namespace {

synergy::Registry make_registry(std::size_t models, std::size_t samples) {
  synergy::SynthSpec spec;
  spec.n_samples = samples;
  spec.n_classes = 10;
  spec.pairwise_rho = 0.3;
  spec.seed = 7;
  const synergy::Category cycle[] = {synergy::Category::kCnn, synergy::Category::kTransformer,
                                     synergy::Category::kMlp};
  for (std::size_t m = 0; m < models; ++m) spec.models.push_back({0.8, cycle[m % 3]});
  return synergy::generate(spec);
}

void BM_FuseSoft(benchmark::State& state) {
  const auto samples = static_cast<std::size_t>(state.range(0));
  const auto registry = make_registry(3, samples);
  synergy::FusionOptions options;
  options.retain_predictions = false;
  for (auto _ : state) {
    auto score = synergy::fuse_soft(std::span(registry.models()), registry.labels(), options);
    benchmark::DoNotOptimize(score.soft_acc);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FuseSoft)->Arg(2000)->Arg(10000)->Arg(50000);

void BM_Sweep(benchmark::State& state) {
  const auto registry = make_registry(15, 2000);
  synergy::SweepOptions options;
  options.k = 3;
  options.workers = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto result = synergy::run_sweep(registry, options);
    benchmark::DoNotOptimize(result.records.data());
  }
  state.SetItemsProcessed(state.iterations() * 455);
}
BENCHMARK(BM_Sweep)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_Dft2Amplitude(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 gen(11);
  std::normal_distribution<double> dist;
  synergy::Matrix<double> map(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) map(r, c) = dist(gen);
  }
  for (auto _ : state) {
    auto amp = synergy::dft2_amplitude(map);
    benchmark::DoNotOptimize(amp.values().data());
  }
}
// powers of two take the radix-2 path, the rest go through Bluestein
BENCHMARK(BM_Dft2Amplitude)->Arg(7)->Arg(8)->Arg(14)->Arg(16)->Arg(32)->Arg(33);

void BM_ProfileModel(benchmark::State& state) {
  synergy::FeatureMapSet maps;
  maps.model_id = "bench";
  maps.n_samples = 64;
  maps.n_channels = 32;
  maps.height = maps.width = 7;
  std::mt19937_64 gen(13);
  std::normal_distribution<float> dist;
  maps.data.resize(maps.map_count() * maps.map_size());
  for (auto& v : maps.data) v = dist(gen);
  synergy::ProfileOptions options;
  options.workers = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto profile = synergy::profile_model(maps, options);
    benchmark::DoNotOptimize(profile.values.data());
  }
}
BENCHMARK(BM_ProfileModel)->Arg(1)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
