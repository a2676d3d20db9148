#include <benchmark/benchmark.h>

#include "fixtures.hpp"
#include "nnrw/channel_scorer.hpp"
#include "nnrw/protocol.hpp"

using namespace nnrw;

namespace {

std::vector<float> sample_weights(std::size_t n) {
  testing::Rng rng(1);
  std::normal_distribution<float> g(0.0f, 0.05f);
  std::vector<float> w(n);
  for (auto& v : w) {
    do v = g(rng);
    while (v == 0.0f);
  }
  return w;
}

void BM_PairValue(benchmark::State& state) {
  const auto w = sample_weights(4096);
  const int c = static_cast<int>(state.range(0));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pair_value(w[i++ & 4095], c));
  }
}
BENCHMARK(BM_PairValue)->DenseRange(2, 5);

void BM_WritePair(benchmark::State& state) {
  const auto w = sample_weights(4096);
  std::size_t i = 0;
  for (auto _ : state) {
    const float v = w[i++ & 4095];
    benchmark::DoNotOptimize(write_pair(v, 3, (pair_value(v, 3) + 1) % 100));
  }
}
BENCHMARK(BM_WritePair);

void BM_HsEmbed(benchmark::State& state) {
  testing::Rng rng(2);
  std::uniform_int_distribution<int> sym(100, 160);
  std::vector<int> host(static_cast<std::size_t>(state.range(0)));
  for (auto& s : host) s = sym(rng);
  const HSParams p = choose_peak_valley(build_histogram(host, kDefaultOffset));
  const BitString bits = testing::random_bits(rng, p.capacity);
  for (auto _ : state) benchmark::DoNotOptimize(hs_embed(host, bits, p));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HsEmbed)->Range(1 << 10, 1 << 18);

void BM_ConvForward(benchmark::State& state) {
  testing::Rng rng(3);
  std::normal_distribution<float> g(0.0f, 1.0f);
  const std::size_t s = static_cast<std::size_t>(state.range(0));
  FeatureMap in{16, s, s, std::vector<float>(16 * s * s)};
  for (auto& v : in.data) v = g(rng);
  const WeightTensor k = testing::conv_weights(rng, "k", 32, 16, 3);
  for (auto _ : state) benchmark::DoNotOptimize(conv_forward(in, k, 1, 1));
}
BENCHMARK(BM_ConvForward)->Arg(16)->Arg(32);

void BM_SealVerify(benchmark::State& state) {
  testing::Rng rng(4);
  const ModelContainer m = testing::sealable_model(rng);
  for (auto _ : state) {
    const EmbedResult sealed = seal(m, EmbedConfig{});
    benchmark::DoNotOptimize(verify(sealed.marked, std::vector<int>{}));
  }
}
BENCHMARK(BM_SealVerify)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
