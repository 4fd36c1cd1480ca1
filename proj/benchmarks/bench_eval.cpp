#include <benchmark/benchmark.h>

#include "proposalkit/eval.hpp"
#include "proposalkit/synthetic.hpp"

using namespace proposalkit;

static void BM_Evaluate(benchmark::State& state) {
  SynthConfig cfg;
  cfg.seed = 7;
  cfg.num_images = static_cast<int>(state.range(0));
  cfg.jitter = 5.0;
  const auto scenes = generate_scenes(cfg);
  const GtDataset gt = scenes_to_gt(scenes);
  const std::vector<Detection> dets = scenes_to_detections(scenes);
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate(gt, dets));
  }
  state.SetItemsProcessed(state.iterations() * cfg.num_images);
}
BENCHMARK(BM_Evaluate)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_MatchImage(benchmark::State& state) {
  SynthConfig cfg;
  cfg.seed = 9;
  cfg.num_images = 1;
  cfg.jitter = 5.0;
  cfg.mean_gts_per_image = static_cast<int>(state.range(0));
  const auto scenes = generate_scenes(cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        match_image(scenes[0].dets, scenes[0].gts, 0.5, 100));
  }
}
BENCHMARK(BM_MatchImage)->Arg(10)->Arg(100);
