#include <benchmark/benchmark.h>

#include <random>

#include "viewforge/augment.hpp"
#include "viewforge/loader.hpp"

using namespace viewforge;

namespace {

ImageRecord noise_image(int size, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  ImageRecord img(size, size, 3);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(gen());
  return img;
}

void BM_Preset(benchmark::State& state, const char* preset) {
  const ImageRecord img = noise_image(64, 1);
  const ViewPipeline pipeline = preset_pipeline(preset, 32);
  std::uint64_t sample = 0;
  for (auto _ : state) benchmark::DoNotOptimize(make_view(img, pipeline, view_key(0, 0, sample++, 0)));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK_CAPTURE(BM_Preset, crops, "crops");
BENCHMARK_CAPTURE(BM_Preset, blur, "+blur");
BENCHMARK_CAPTURE(BM_Preset, gray, "+gray");
BENCHMARK_CAPTURE(BM_Preset, sol, "+sol");
BENCHMARK_CAPTURE(BM_Preset, jitter, "+jitter");

void BM_Blur(benchmark::State& state) {
  const ImageRecord img = noise_image(static_cast<int>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(blur_with_sigma(img, 1.5));
}
BENCHMARK(BM_Blur)->Arg(32)->Arg(64)->Arg(128);

void BM_Resize(benchmark::State& state) {
  const ImageRecord img = noise_image(static_cast<int>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(resize_bilinear(img, 32, 32));
}
BENCHMARK(BM_Resize)->Arg(64)->Arg(256);

}  // namespace
