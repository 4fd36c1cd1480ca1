#include <benchmark/benchmark.h>

#include "proposalkit/anchors.hpp"
#include "proposalkit/assignment.hpp"
#include "proposalkit/random.hpp"

using namespace proposalkit;

namespace {

struct Scene {
  AnchorSet anchors;
  std::vector<Box> gts;
  std::vector<double> scores;
  std::vector<Box> preds;
};

Scene make_scene(int num_gts) {
  Scene s{AnchorSet::generate({{8, 16, 32}, 8.0, {1333, 800}}), {}, {}, {}};
  Rng rng(3);
  for (int g = 0; g < num_gts; ++g) {
    const double w = rng.uniform(30.0, 400.0);
    const double h = rng.uniform(30.0, 400.0);
    const double x = rng.uniform(0.0, 1333.0 - w);
    const double y = rng.uniform(0.0, 800.0 - h);
    s.gts.emplace_back(x, y, x + w, y + h);
  }
  s.scores.reserve(s.anchors.size());
  s.preds.reserve(s.anchors.size());
  for (std::size_t a = 0; a < s.anchors.size(); ++a) {
    s.scores.push_back(rng.uniform(0.05, 0.95));
    s.preds.push_back(s.anchors.box(a));
  }
  return s;
}

}  // namespace

static void BM_BuildCosts(benchmark::State& state) {
  const Scene s = make_scene(static_cast<int>(state.range(0)));
  SamplerConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        build_costs(s.anchors, s.gts, s.scores, s.preds, cfg));
  }
}
BENCHMARK(BM_BuildCosts)->Arg(8)->Arg(32);

static void BM_SimOta(benchmark::State& state) {
  const Scene s = make_scene(static_cast<int>(state.range(0)));
  SamplerConfig cfg;
  const CostMatrix cm = build_costs(s.anchors, s.gts, s.scores, s.preds, cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(assign_simota(cm, cfg));
  }
}
BENCHMARK(BM_SimOta)->Arg(8)->Arg(32);

static void BM_Sinkhorn(benchmark::State& state) {
  Rng rng(5);
  const std::size_t rows = 50, cols = 500;
  MatD cost(rows, cols);
  for (double& v : cost.data()) v = rng.uniform(0.0, 1.0);
  std::vector<double> supply(rows, 1.0 / rows), demand(cols, 1.0 / cols);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sinkhorn(cost, supply, demand, 0.1, 1000));
  }
}
BENCHMARK(BM_Sinkhorn);
