#include <benchmark/benchmark.h>

#include "proposalkit/postprocess.hpp"
#include "proposalkit/random.hpp"

using namespace proposalkit;

namespace {

std::vector<Detection> clustered_detections(int n) {
  Rng rng(17);
  std::vector<Detection> dets;
  dets.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double cx = rng.uniform(50.0, 1200.0);
    const double cy = rng.uniform(50.0, 700.0);
    const double w = rng.uniform(20.0, 200.0);
    const double h = rng.uniform(20.0, 200.0);
    dets.push_back(Detection{Box(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2),
                             rng.uniform(0.0, 1.0), std::nullopt, 1});
  }
  return dets;
}

}  // namespace

static void BM_Nms(benchmark::State& state) {
  const auto dets = clustered_detections(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(nms(dets, 0.8));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Nms)->RangeMultiplier(4)->Range(64, 16384)->Complexity();

static void BM_TopK(benchmark::State& state) {
  const auto dets = clustered_detections(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(topk_proposals(dets, 100));
  }
}
BENCHMARK(BM_TopK)->Range(1024, 65536);
