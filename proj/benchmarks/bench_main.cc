#include <benchmark/benchmark.h>

#include <random>

#include "stgib/data.h"
#include "stgib/encoder.h"
#include "stgib/trainer.h"

namespace stgib {
namespace {

Matrix Random(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = n(rng);
  return m;
}

void BM_GraphAttention(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0)), dim = 32, heads = 4;
  std::mt19937_64 rng(1);
  const Graph g(n, RandomPlantedEdges(n, 4 * n, 2));
  const Matrix h = Random(n, dim, rng), w = Random(heads * dim, dim, rng), a = Random(heads, 2 * dim, rng);
  for (auto _ : state) {
    Tape t;
    const Var out = GraphAttention(t, t.Input(h), {t.Input(w), t.Input(a)}, g, std::nullopt, heads);
    t.Backward(ad::Sum(t, out));
    benchmark::DoNotOptimize(t.grad(out));
  }
  state.SetItemsProcessed(state.iterations() * g.num_edges());
}
BENCHMARK(BM_GraphAttention)->Arg(16)->Arg(64)->Arg(256);

void BM_TrainStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  SyntheticSpec spec;
  spec.num_nodes = n;
  spec.total_steps = 200;
  spec.planted_edges = RandomPlantedEdges(n, 2 * n, 1);
  const Tensor3 series = GenerateSynthetic(spec).values;
  const Scaler sc = FitScaler(series);
  const std::vector<STWindow> ws = WindowDataset(series, {12, 3, 24, 0}, sc);
  std::vector<const STWindow*> batch;
  for (int k = 0; k < 8; ++k) batch.push_back(&ws[k]);
  ModelConfig cfg;
  cfg.steps_per_day = 24;
  Model model(cfg, {12, 3, n, 1, 1}, BuildCandidateGraph(n, spec.planted_edges, n, 3), sc, 1);
  const StepSchedule schedule{0.7, 0.7, 0.5, 0.5};
  std::mt19937_64 rng(4);
  for (auto _ : state) {
    model.params().ZeroGrad();
    benchmark::DoNotOptimize(AccumulateBatch(model, batch, LossKind::kHuber, 1.0, schedule, Mode::kTrain, &rng));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(batch.size()));
}
BENCHMARK(BM_TrainStep)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace stgib
BENCHMARK_MAIN();
